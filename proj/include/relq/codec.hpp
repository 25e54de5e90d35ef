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

#ifndef RELQ_CODEC_HPP_
#define RELQ_CODEC_HPP_

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <relq/req_sketch.hpp>

namespace relq {

/// Decode failure; offset() is the byte position of the offending field.
class decode_error : public std::runtime_error {
 public:
  decode_error(size_t offset, const std::string& what)
      : std::runtime_error("offset " + std::to_string(offset) + ": " + what),
        offset_(offset) {}
  size_t offset() const { return offset_; }

 private:
  size_t offset_;
};

// Binary layout, version 1, all integers and doubles little-endian:
//
//   0  magic "RQSK"
//   4  u8  version = 1
//   5  u8  mode (0 streaming_known_n, 1 mergeable, 2 high_confidence)
//   6  u8  item type (0 = IEEE-754 binary64)
//   7  u8  rng algorithm id (1 = coin_rng)
//   8  u64 rng seed
//  16  f64 eps
//  24  f64 delta
//  32  f64 k_hat (0 outside mergeable mode)
//  40  u64 N
//  48  u64 n
//  56  u32 k
//  60  u32 B
//  64  u16 H (highest level index; H+1 level records follow)
//  66  u64 coin flips consumed
//  74  level records, each: u64 sigma, u32 count, count * f64 ascending

namespace codec_detail {

constexpr size_t HEADER_BYTES = 74;
constexpr char MAGIC[4] = {'R', 'Q', 'S', 'K'};
constexpr uint8_t VERSION = 1;
constexpr uint8_t ITEM_TYPE_F64 = 0;

inline void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

inline void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline void put_f64(std::vector<uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<uint64_t>(v));
}

/// Bounds-checked little-endian cursor over the input bytes.
class reader {
 public:
  explicit reader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  size_t position() const { return pos_; }
  size_t remaining() const { return bytes_.size() - pos_; }

  uint8_t u8(const char* field) {
    need(1, field);
    return bytes_[pos_++];
  }

  uint16_t u16(const char* field) {
    need(2, field);
    uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v |= uint16_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 2;
    return v;
  }

  uint32_t u32(const char* field) {
    need(4, field);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }

  uint64_t u64(const char* field) {
    need(8, field);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return v;
  }

  double f64(const char* field) { return std::bit_cast<double>(u64(field)); }

 private:
  void need(size_t count, const char* field) {
    if (remaining() < count) {
      throw decode_error(pos_, std::string("truncated while reading ") + field);
    }
  }

  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

}  // namespace codec_detail

/// Serializes a sketch. Only the default universe (double with std::less)
/// has a defined binary form; other instantiations throw
/// std::invalid_argument.
template <typename T, typename C>
std::vector<uint8_t> serialize(const req_sketch<T, C>& sketch) {
  if constexpr (!std::is_same_v<T, double> ||
                !std::is_same_v<C, std::less<double>>) {
    throw std::invalid_argument(
        "serialization supports only req_sketch<double, std::less<double>>");
  } else {
    using namespace codec_detail;
    const auto& p = sketch.params();
    std::vector<uint8_t> out;
    out.reserve(HEADER_BYTES + sketch.num_levels() * 12 +
                sketch.stored_items() * 8);
    out.insert(out.end(), MAGIC, MAGIC + 4);
    out.push_back(VERSION);
    out.push_back(static_cast<uint8_t>(p.mode));
    out.push_back(ITEM_TYPE_F64);
    out.push_back(coin_rng::ALGORITHM_ID);
    put_u64(out, sketch.seed());
    put_f64(out, p.eps);
    put_f64(out, p.delta);
    put_f64(out, p.k_hat);
    put_u64(out, p.N);
    put_u64(out, sketch.n());
    put_u32(out, p.k);
    put_u32(out, p.B);
    put_u16(out, static_cast<uint16_t>(sketch.num_levels() - 1));
    put_u64(out, sketch.coin_draws());
    for (const auto& level : sketch.levels()) {
      put_u64(out, level.sigma());
      put_u32(out, static_cast<uint32_t>(level.size()));
      for (double item : level.sorted_items()) put_f64(out, item);
    }
    return out;
  }
}

/// Parses a serialized sketch, validating the structural invariants of every
/// field; any violation raises decode_error with the offending byte offset.
/// The restored sketch reproduces the original bit for bit, including the
/// position of its coin generator.
inline req_sketch<double> deserialize(std::span<const uint8_t> bytes) {
  using namespace codec_detail;
  reader in(bytes);

  static_assert(sizeof(MAGIC) == 4);
  const size_t magic_at = in.position();
  for (char expected : MAGIC) {
    if (static_cast<char>(in.u8("magic")) != expected) {
      throw decode_error(magic_at, "bad magic, not a sketch file");
    }
  }
  const size_t version_at = in.position();
  if (const auto version = in.u8("version"); version != VERSION) {
    throw decode_error(version_at, "unsupported version " + std::to_string(version));
  }
  const size_t mode_at = in.position();
  const uint8_t mode_byte = in.u8("mode");
  if (mode_byte > 2) {
    throw decode_error(mode_at, "unknown mode " + std::to_string(mode_byte));
  }
  const auto mode = static_cast<sketch_mode>(mode_byte);
  const size_t item_type_at = in.position();
  if (const auto item_type = in.u8("item type"); item_type != ITEM_TYPE_F64) {
    throw decode_error(item_type_at,
                       "unsupported item type " + std::to_string(item_type));
  }
  const size_t rng_at = in.position();
  if (const auto rng_id = in.u8("rng id"); rng_id != coin_rng::ALGORITHM_ID) {
    throw decode_error(rng_at, "unknown rng algorithm " + std::to_string(rng_id));
  }
  const uint64_t seed = in.u64("seed");

  const size_t eps_at = in.position();
  const double eps = in.f64("eps");
  if (!(eps > 0.0) || !(eps <= 1.0)) {
    throw decode_error(eps_at, "eps outside (0, 1]");
  }
  const size_t delta_at = in.position();
  const double delta = in.f64("delta");
  if (!(delta > 0.0) || !(delta <= 0.5)) {
    throw decode_error(delta_at, "delta outside (0, 0.5]");
  }
  const size_t k_hat_at = in.position();
  const double k_hat = in.f64("k_hat");
  if (mode == sketch_mode::mergeable) {
    if (!(k_hat > 0.0) || !std::isfinite(k_hat)) {
      throw decode_error(k_hat_at, "mergeable sketch requires finite k_hat > 0");
    }
  } else if (k_hat != 0.0) {
    throw decode_error(k_hat_at, "k_hat must be 0 outside mergeable mode");
  }

  const size_t N_at = in.position();
  const uint64_t N = in.u64("N");
  if (N == 0) throw decode_error(N_at, "N must be positive");
  const size_t n_at = in.position();
  const uint64_t n = in.u64("n");
  if (mode == sketch_mode::mergeable && n > N) {
    throw decode_error(n_at, "n exceeds the mergeable horizon N");
  }

  const size_t k_at = in.position();
  const uint32_t k = in.u32("k");
  if (k < 4 || k % 2 != 0) {
    throw decode_error(k_at, "k must be even and at least 4");
  }
  const size_t B_at = in.position();
  const uint32_t B = in.u32("B");
  if (B < 2 * k || (B / 2) % k != 0) {
    throw decode_error(B_at,
                       "B must be at least 2k with half a whole number of sections");
  }
  const uint16_t H = in.u16("H");
  const uint64_t coin_draws = in.u64("coin draws");

  std::vector<std::pair<uint64_t, std::vector<double>>> level_states;
  level_states.reserve(size_t{H} + 1);
  for (uint32_t h = 0; h <= H; ++h) {
    const size_t sigma_at = in.position();
    const uint64_t sigma = in.u64("level sigma");
    if (sigma > N / k) {
      throw decode_error(sigma_at, "level " + std::to_string(h) +
                                       " schedule state exceeds N/k");
    }
    const size_t count_at = in.position();
    const uint32_t count = in.u32("level count");
    if (count > B) {
      throw decode_error(count_at, "level " + std::to_string(h) + " holds " +
                                       std::to_string(count) +
                                       " items over capacity " +
                                       std::to_string(B));
    }
    if (uint64_t{count} * 8 > in.remaining()) {
      throw decode_error(count_at, "level " + std::to_string(h) +
                                       " payload exceeds the input");
    }
    std::vector<double> items;
    items.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
      const size_t item_at = in.position();
      const double item = in.f64("item");
      if (std::isnan(item)) {
        throw decode_error(item_at, "NaN item");
      }
      if (!items.empty() && item < items.back()) {
        throw decode_error(item_at, "items not ascending in level " +
                                        std::to_string(h));
      }
      items.push_back(item);
    }
    level_states.emplace_back(sigma, std::move(items));
  }
  if (in.remaining() != 0) {
    throw decode_error(in.position(),
                       std::to_string(in.remaining()) + " trailing bytes");
  }

  return req_sketch<double>(
      sketch_params{mode, eps, delta, k_hat, N, k, B}, seed, coin_draws, n,
      std::move(level_states));
}

inline req_sketch<double> deserialize(const std::vector<uint8_t>& bytes) {
  return deserialize(std::span<const uint8_t>(bytes.data(), bytes.size()));
}

}  // namespace relq

#endif  // RELQ_CODEC_HPP_
