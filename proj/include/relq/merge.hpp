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

#ifndef RELQ_MERGE_HPP_
#define RELQ_MERGE_HPP_

#include <stdexcept>
#include <string>
#include <utility>

#include <relq/req_sketch.hpp>

namespace relq {

/**
 * Merges two mergeable-mode sketches built with the same accuracy scale
 * (equal k_hat). Both inputs are consumed; the result carries the combined
 * stream and keeps the full error guarantee of a sketch built over the
 * concatenated input.
 *
 * The sketch with more levels hosts the merge (ties favor s1). If the
 * combined count passes the host's horizon, every non-top host level is first
 * compacted to half capacity under the old sizing, then the horizon squares
 * until it covers the count and the sizing is re-derived. The other input
 * gets the same half-capacity treatment if its horizon is smaller. Then
 * levels are concatenated pairwise, schedule states are OR'd, and one
 * bottom-up sweep compacts any level at or over capacity, promoting into the
 * level above (which the sweep visits next, so a single pass suffices).
 *
 * The result draws any merge-time coins from the host's generator; the other
 * input's generator is discarded.
 */
template <typename T, typename C>
req_sketch<T, C> merge(req_sketch<T, C> s1, req_sketch<T, C> s2) {
  if (s1.mode() != sketch_mode::mergeable ||
      s2.mode() != sketch_mode::mergeable) {
    throw std::invalid_argument("only mergeable-mode sketches can merge");
  }
  if (s1.params().k_hat != s2.params().k_hat) {
    throw std::invalid_argument("sketches disagree on the accuracy scale");
  }

  const bool s1_hosts = s1.num_levels() >= s2.num_levels();
  req_sketch<T, C> target = s1_hosts ? std::move(s1) : std::move(s2);
  req_sketch<T, C> source = s1_hosts ? std::move(s2) : std::move(s1);

  const uint64_t combined_n = target.n_ + source.n_;
  if (target.params_.N < combined_n) {
    target.special_compactions();
    do {
      target.params_ = grow(target.params_);
    } while (target.params_.N < combined_n);
    for (auto& level : target.levels_) {
      level.reset_parameters(target.params_.k, target.params_.B);
    }
  }
  if (source.params_.N > target.params_.N) {
    throw std::logic_error("merge host ended with the smaller horizon");
  }
  if (source.params_.N < target.params_.N) {
    source.special_compactions();
  }

  for (size_t h = 0; h < source.levels_.size(); ++h) {
    target.levels_[h].absorb(std::move(source.levels_[h]));
  }

  for (size_t h = 0; h < target.levels_.size(); ++h) {
    auto& level = target.levels_[h];
    const uint64_t cap = uint64_t{7} * level.capacity() / 2;
    if (level.size() > cap) {
      throw std::logic_error("level " + std::to_string(h) + " holds " +
                             std::to_string(level.size()) +
                             " items, over the merge bound " +
                             std::to_string(cap));
    }
    if (level.size() >= level.capacity()) {
      auto promoted = level.compact_scheduled(target.rng_);
      target.ensure_level(h + 1);
      target.levels_[h + 1].append_bulk(
          std::span<const T>(promoted.data(), promoted.size()));
    }
    if (target.levels_[h].sigma() > target.params_.N / target.params_.k) {
      throw std::logic_error("schedule state exceeds N/k after merge");
    }
  }

  target.n_ = combined_n;
  return target;
}

}  // namespace relq

#endif  // RELQ_MERGE_HPP_
