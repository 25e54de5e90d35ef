/*
 * Licensed to the Apache Software Foundation (ASF) under one
 * or more contributor license agreements.  See the NOTICE file
 * distributed with this work for additional information
 * regarding copyright ownership.  The ASF licenses this file
 * to you under the Apache License, Version 2.0 (the
 * "License"); you may not use this file except in compliance
 * with the License.  You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing,
 * software distributed under the License is distributed on an
 * "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
 * KIND, either express or implied.  See the License for the
 * specific language governing permissions and limitations
 * under the License.
 */

#ifndef RELQ_COIN_RNG_HPP_
#define RELQ_COIN_RNG_HPP_

#include <cstdint>

namespace relq {

/// Source of the fair coin flips consumed by compactions.
///
/// Algorithm id 1: the i-th flip is bit 63 of splitmix64(seed + i * GAMMA)
/// where GAMMA = 0x9e3779b97f4a7c15. The counter-based form makes the state
/// (seed, number of flips drawn) trivially serializable and restorable.
class coin_rng {
 public:
  static constexpr uint8_t ALGORITHM_ID = 1;

  explicit coin_rng(uint64_t seed, uint64_t draws = 0)
      : seed_(seed), draws_(draws) {}

  /// Draws the next fair bit.
  bool flip() {
    ++draws_;
    uint64_t z = seed_ + draws_ * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return (z >> 63) != 0;
  }

  uint64_t seed() const { return seed_; }

  /// Number of flips consumed so far; (seed, draws) reproduces the stream.
  uint64_t draws() const { return draws_; }

 private:
  uint64_t seed_;
  uint64_t draws_;
};

}  // namespace relq

#endif  // RELQ_COIN_RNG_HPP_
