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

#ifndef RELQ_REQ_SKETCH_IMPL_HPP_
#define RELQ_REQ_SKETCH_IMPL_HPP_

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace relq {

template <typename T, typename C>
req_sketch<T, C>::req_sketch(const sketch_params& params, uint64_t seed,
                             const C& cmp)
    : params_(params), rng_(seed), comparator_(cmp) {
  levels_.emplace_back(0, params_.k, params_.B, comparator_);
}

template <typename T, typename C>
req_sketch<T, C>::req_sketch(
    const sketch_params& params, uint64_t seed, uint64_t coin_draws,
    uint64_t n, std::vector<std::pair<uint64_t, std::vector<T>>> level_states,
    const C& cmp)
    : params_(params), n_(n), rng_(seed, coin_draws), comparator_(cmp) {
  if (level_states.empty()) {
    throw std::invalid_argument("a sketch has at least one level");
  }
  levels_.reserve(level_states.size());
  for (size_t h = 0; h < level_states.size(); ++h) {
    auto& [sigma, items] = level_states[h];
    auto& level = levels_.emplace_back(static_cast<uint32_t>(h), params_.k,
                                       params_.B, comparator_);
    level.set_sigma(sigma);
    level.append_bulk(std::span<const T>(items.data(), items.size()));
  }
}

template <typename T, typename C>
void req_sketch<T, C>::validate_item(const T& item) const {
  if constexpr (std::is_floating_point_v<T>) {
    if (std::isnan(item)) {
      throw std::invalid_argument("NaN is not orderable and cannot be added");
    }
  } else {
    (void)item;
  }
}

template <typename T, typename C>
void req_sketch<T, C>::ensure_level(size_t h) {
  if (h < levels_.size()) return;
  if (h != levels_.size()) throw std::logic_error("levels must grow one at a time");
  auto& level = levels_.emplace_back(static_cast<uint32_t>(h), params_.k,
                                     params_.B, comparator_);
  level.set_observer(observer_);
}

template <typename T, typename C>
void req_sketch<T, C>::cascade(std::vector<T>&& promoted, size_t h) {
  while (!promoted.empty()) {
    ensure_level(h);
    std::vector<T> next;
    for (const T& item : promoted) {
      auto out = levels_[h].insert(item, rng_);
      next.insert(next.end(), out.begin(), out.end());
    }
    promoted = std::move(next);
    ++h;
  }
}

template <typename T, typename C>
void req_sketch<T, C>::update(const T& item) {
  validate_item(item);
  if (params_.mode == sketch_mode::mergeable && n_ + 1 > params_.N) {
    special_compactions();
    do {
      params_ = grow(params_);
    } while (n_ + 1 > params_.N);
    for (auto& level : levels_) {
      level.reset_parameters(params_.k, params_.B);
    }
  }
  cascade(levels_[0].insert(item, rng_), 1);
  ++n_;
}

template <typename T, typename C>
void req_sketch<T, C>::special_compactions() {
  for (size_t h = 0; h + 1 < levels_.size(); ++h) {
    auto& level = levels_[h];
    const uint32_t keep = level.capacity() / 2;
    if (level.size() > keep) {
      auto promoted = level.compact_from(keep + 1, rng_.flip());
      levels_[h + 1].append_bulk(
          std::span<const T>(promoted.data(), promoted.size()));
    }
  }
}

template <typename T, typename C>
uint64_t req_sketch<T, C>::rank(const T& y) const {
  validate_item(y);
  uint64_t estimate = 0;
  for (const auto& level : levels_) {
    estimate += level.count_le(y) << level.level();
  }
  return estimate;
}

template <typename T, typename C>
T req_sketch<T, C>::quantile(uint64_t r) const {
  if (n_ == 0) throw std::out_of_range("quantile of an empty sketch");
  if (r < 1 || r > n_) {
    throw std::out_of_range("rank " + std::to_string(r) +
                            " outside [1, " + std::to_string(n_) + "]");
  }
  std::vector<std::pair<T, uint64_t>> weighted;
  weighted.reserve(stored_items());
  for (const auto& level : levels_) {
    for (const T& item : level.sorted_items()) {
      weighted.emplace_back(item, uint64_t{1} << level.level());
    }
  }
  std::sort(weighted.begin(), weighted.end(),
            [this](const auto& a, const auto& b) {
              return comparator_(a.first, b.first);
            });
  uint64_t cumulative = 0;
  for (const auto& [item, weight] : weighted) {
    cumulative += weight;
    if (cumulative >= r) return item;
  }
  return weighted.back().first;
}

template <typename T, typename C>
std::vector<std::pair<T, double>> req_sketch<T, C>::cdf(
    std::vector<T> points) const {
  if (n_ == 0) throw std::out_of_range("cdf of an empty sketch");
  std::sort(points.begin(), points.end(), comparator_);
  std::vector<std::pair<T, double>> result;
  result.reserve(points.size());
  for (const T& y : points) {
    result.emplace_back(y, static_cast<double>(rank(y)) /
                               static_cast<double>(n_));
  }
  return result;
}

template <typename T, typename C>
size_t req_sketch<T, C>::stored_items() const {
  size_t total = 0;
  for (const auto& level : levels_) total += level.size();
  return total;
}

template <typename T, typename C>
void req_sketch<T, C>::set_compaction_observer(
    compaction_observer<T>* observer) {
  observer_ = observer;
  for (auto& level : levels_) level.set_observer(observer);
}

template <typename T, typename C>
void req_sketch<T, C>::check_structure() const {
  for (const auto& level : levels_) {
    if (level.size() > level.capacity()) {
      throw std::logic_error("level " + std::to_string(level.level()) +
                             " holds " + std::to_string(level.size()) +
                             " items over capacity " +
                             std::to_string(level.capacity()));
    }
    if (level.sigma() > params_.N / params_.k) {
      throw std::logic_error("schedule state exceeds N/k at level " +
                             std::to_string(level.level()));
    }
  }
  if (params_.mode == sketch_mode::mergeable && n_ > params_.N) {
    throw std::logic_error("n exceeds the mergeable horizon");
  }
  // Level-count bound relative to the sizing the sketch was born with.
  uint32_t B0 = params_.B;
  if (params_.mode == sketch_mode::mergeable) {
    B0 = derive_mergeable(params_.eps, params_.delta).B;
  }
  if (n_ > B0) {
    const auto allowed = static_cast<size_t>(
        std::ceil(std::log2(static_cast<double>(n_) / B0))) + 1;
    if (levels_.size() > allowed) {
      throw std::logic_error("level count " + std::to_string(levels_.size()) +
                             " exceeds growth bound " +
                             std::to_string(allowed));
    }
  }
}

}  // namespace relq

#endif  // RELQ_REQ_SKETCH_IMPL_HPP_
