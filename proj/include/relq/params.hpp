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

#ifndef RELQ_PARAMS_HPP_
#define RELQ_PARAMS_HPP_

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace relq {

/// Operating modes of the sketch. The mode fixes how the section size k and
/// the buffer capacity B are derived and whether they may change over the
/// sketch's lifetime.
enum class sketch_mode : uint8_t {
  /// Stream length bound N is declared up front; k and B are fixed.
  streaming_known_n = 0,
  /// No length bound needed; parameters grow as the data grows, and sketches
  /// with equal accuracy targets can be merged.
  mergeable = 1,
  /// Fixed-length variant tuned for very small failure probabilities.
  high_confidence = 2
};

/// Derived sizing of a sketch: section size k, buffer capacity B per level,
/// and the current stream-length horizon N. k_hat is the mode-independent
/// accuracy scale (only meaningful in mergeable mode, 0 otherwise).
struct sketch_params {
  sketch_mode mode;
  double eps;
  double delta;
  double k_hat;
  uint64_t N;
  uint32_t k;
  uint32_t B;
};

namespace params_detail {

inline void check_accuracy_args(double eps, double delta) {
  if (!(eps > 0.0) || !(eps <= 1.0) || std::isnan(eps)) {
    throw std::invalid_argument("eps must be in (0, 1], got " + std::to_string(eps));
  }
  if (!(delta > 0.0) || !(delta <= 0.5) || std::isnan(delta)) {
    throw std::invalid_argument("delta must be in (0, 0.5], got " + std::to_string(delta));
  }
}

// B = 2k * ceil(log2(n/k)), floored at 2k so that tiny streams still get one
// full section pair per level.
inline uint32_t buffer_capacity(uint32_t k, uint64_t n) {
  const double lg = std::log2(static_cast<double>(n) / static_cast<double>(k));
  const auto m = static_cast<int64_t>(std::ceil(lg));
  const int64_t sections = m < 1 ? 1 : m;
  return static_cast<uint32_t>(2 * static_cast<int64_t>(k) * sections);
}

inline uint32_t mergeable_k(double k_hat, uint64_t N) {
  const double lg = std::log2(static_cast<double>(N) / k_hat);
  const double raw = k_hat / std::sqrt(lg);
  return static_cast<uint32_t>(32 * static_cast<uint64_t>(std::ceil(raw)));
}

inline uint32_t mergeable_capacity(uint32_t k, uint64_t N) {
  const double lg = std::log2(static_cast<double>(N) / static_cast<double>(k));
  const auto sections = static_cast<uint64_t>(std::ceil(lg + 1.0));
  return static_cast<uint32_t>(2 * static_cast<uint64_t>(k) * sections);
}

}  // namespace params_detail

/// Fixed-length parameterization. Requires eps * n >= 2.
/// k = 2 * ceil((4 / eps) * sqrt(ln(1/delta) / log2(eps * n))), clamped to at
/// least 4; B = 2k * ceil(log2(n/k)) floored at 2k.
inline sketch_params derive_streaming(double eps, double delta, uint64_t n) {
  params_detail::check_accuracy_args(eps, delta);
  if (n == 0) throw std::invalid_argument("n must be positive");
  const double eps_n = eps * static_cast<double>(n);
  if (!(eps_n >= 2.0)) {
    throw std::invalid_argument("eps * n must be at least 2, got " + std::to_string(eps_n));
  }
  const double raw =
      (4.0 / eps) * std::sqrt(std::log(1.0 / delta) / std::log2(eps_n));
  if (!(raw < double(1 << 30))) {
    throw std::invalid_argument("accuracy target too demanding: k would exceed 2^30");
  }
  auto k = static_cast<uint32_t>(2 * static_cast<uint64_t>(std::ceil(raw)));
  if (k < 4) k = 4;
  return sketch_params{sketch_mode::streaming_known_n, eps, delta, 0.0,
                       n, k, params_detail::buffer_capacity(k, n)};
}

/// Mergeable parameterization. k_hat = sqrt(ln(1/delta)) / eps fixes the
/// accuracy scale; the initial horizon is N0 = ceil(2^8 * k_hat) and
/// k(N) = 2^5 * ceil(k_hat / sqrt(log2(N / k_hat))),
/// B(N) = 2 * k(N) * ceil(log2(N / k(N)) + 1).
inline sketch_params derive_mergeable(double eps, double delta) {
  params_detail::check_accuracy_args(eps, delta);
  const double k_hat = std::sqrt(std::log(1.0 / delta)) / eps;
  if (!(k_hat < double(1 << 25))) {
    throw std::invalid_argument("accuracy target too demanding: k would exceed 2^30");
  }
  const auto N0 = static_cast<uint64_t>(std::ceil(256.0 * k_hat));
  const uint32_t k = params_detail::mergeable_k(k_hat, N0);
  return sketch_params{sketch_mode::mergeable, eps, delta, k_hat,
                       N0, k, params_detail::mergeable_capacity(k, N0)};
}

/// Squares the horizon of a mergeable parameterization and re-derives k and B
/// for the new N. k never increases and B never decreases across a step.
inline sketch_params grow(const sketch_params& p) {
  if (p.mode != sketch_mode::mergeable) {
    throw std::invalid_argument("grow applies to mergeable-mode params only");
  }
  sketch_params next = p;
  // Saturate instead of overflowing; n (uint64) can never exceed the
  // saturated horizon, so growth simply stops there.
  next.N = p.N >= (uint64_t{1} << 32) ? UINT64_MAX : p.N * p.N;
  next.k = params_detail::mergeable_k(p.k_hat, next.N);
  next.B = params_detail::mergeable_capacity(next.k, next.N);
  return next;
}

/// Fixed-length parameterization for very small delta:
/// k = 2^4 * ceil(log2(ln(1/delta)) / eps), B as in the streaming derivation.
/// Requires ln(1/delta) >= 2.
inline sketch_params derive_high_confidence(double eps, double delta, uint64_t n) {
  params_detail::check_accuracy_args(eps, delta);
  if (n == 0) throw std::invalid_argument("n must be positive");
  const double ln_inv_delta = std::log(1.0 / delta);
  if (!(ln_inv_delta >= 2.0)) {
    throw std::invalid_argument("high-confidence mode requires ln(1/delta) >= 2");
  }
  const double eps_n = eps * static_cast<double>(n);
  if (!(eps_n >= 2.0)) {
    throw std::invalid_argument("eps * n must be at least 2, got " + std::to_string(eps_n));
  }
  const double raw = std::log2(ln_inv_delta) / eps;
  if (!(raw < double(1 << 26))) {
    throw std::invalid_argument("accuracy target too demanding: k would exceed 2^30");
  }
  const auto k = static_cast<uint32_t>(16 * static_cast<uint64_t>(std::ceil(raw)));
  return sketch_params{sketch_mode::high_confidence, eps, delta, 0.0,
                       n, k, params_detail::buffer_capacity(k, n)};
}

/// Tightens a per-query accuracy target (eps, delta) so that the guarantee
/// holds simultaneously for all quantiles of a stream of length n:
/// eps' = eps / 3 and delta' = delta * eps / (3 * max(1, log2(eps * n))).
inline std::pair<double, double> all_quantiles_adjust(double eps, double delta,
                                                      uint64_t n) {
  params_detail::check_accuracy_args(eps, delta);
  if (n == 0) throw std::invalid_argument("n must be positive");
  const double lg = std::log2(eps * static_cast<double>(n));
  const double denom = lg > 1.0 ? lg : 1.0;
  return {eps / 3.0, delta * eps / (3.0 * denom)};
}

}  // namespace relq

#endif  // RELQ_PARAMS_HPP_
