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

#ifndef RELQ_RELATIVE_COMPACTOR_IMPL_HPP_
#define RELQ_RELATIVE_COMPACTOR_IMPL_HPP_

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

namespace relq {

template <typename T, typename C>
relative_compactor<T, C>::relative_compactor(uint32_t level,
                                             uint32_t section_size,
                                             uint32_t capacity,
                                             const C& comparator)
    : level_(level), k_(section_size), B_(capacity), comparator_(comparator) {
  if (k_ < 2 || k_ % 2 != 0) {
    throw std::invalid_argument("section size must be even and at least 2");
  }
  if (B_ < 2 * k_ || (B_ / 2) % k_ != 0) {
    throw std::invalid_argument(
        "capacity must be at least 2k with half a whole number of sections");
  }
  items_.reserve(B_ + 1);
}

template <typename T, typename C>
uint32_t relative_compactor<T, C>::trailing_ones(uint64_t sigma) {
  return static_cast<uint32_t>(std::countr_one(sigma));
}

template <typename T, typename C>
compaction_range relative_compactor<T, C>::compaction_bounds(uint64_t sigma,
                                                             uint32_t k,
                                                             uint32_t B) {
  const uint64_t sections = uint64_t{trailing_ones(sigma)} + 1;
  const uint64_t L = sections * k;
  if (L > B) {
    throw std::logic_error("compaction schedule exhausted: " +
                           std::to_string(L) + " slots requested of " +
                           std::to_string(B));
  }
  return compaction_range{static_cast<uint32_t>(L),
                          static_cast<uint32_t>(B - L + 1)};
}

template <typename T, typename C>
void relative_compactor<T, C>::ensure_sorted() const {
  if (sorted_end_ == items_.size()) return;
  std::sort(items_.begin() + sorted_end_, items_.end(), comparator_);
  std::inplace_merge(items_.begin(), items_.begin() + sorted_end_,
                     items_.end(), comparator_);
  sorted_end_ = items_.size();
}

template <typename T, typename C>
std::vector<T> relative_compactor<T, C>::insert(const T& item, coin_rng& rng) {
  std::vector<T> promoted;
  if (items_.size() >= B_) {
    promoted = compact_scheduled(rng);
  }
  items_.push_back(item);
  return promoted;
}

template <typename T, typename C>
std::vector<T> relative_compactor<T, C>::compact_scheduled(coin_rng& rng) {
  const auto range = compaction_bounds(sigma_, k_, B_);
  return compact_from(range.S, rng.flip(), true);
}

template <typename T, typename C>
std::vector<T> relative_compactor<T, C>::compact_from(uint32_t start,
                                                      bool keep_odd_indexed,
                                                      bool scheduled) {
  ensure_sorted();
  if (start < 1 || size_t{start} > items_.size()) {
    throw std::logic_error("compaction start " + std::to_string(start) +
                           " outside buffer of " +
                           std::to_string(items_.size()));
  }
  const size_t first = start - 1;
  std::vector<T> promoted;
  promoted.reserve((items_.size() - first + 1) / 2);
  for (size_t i = first + (keep_odd_indexed ? 0 : 1); i < items_.size();
       i += 2) {
    promoted.push_back(items_[i]);
  }
  if (observer_ != nullptr) {
    observer_->on_compaction(compaction_event<T>{
        level_, sigma_, scheduled,
        std::span<const T>(items_.data() + first, items_.size() - first),
        std::span<const T>(promoted.data(), promoted.size())});
  }
  items_.resize(first);
  sorted_end_ = items_.size();
  if (sigma_ == UINT64_MAX) throw std::logic_error("schedule state overflow");
  ++sigma_;
  ++compaction_count_;
  return promoted;
}

template <typename T, typename C>
void relative_compactor<T, C>::append_bulk(std::span<const T> items) {
  items_.insert(items_.end(), items.begin(), items.end());
}

template <typename T, typename C>
void relative_compactor<T, C>::absorb(relative_compactor&& other) {
  ensure_sorted();
  other.ensure_sorted();
  std::vector<T> combined;
  combined.reserve(items_.size() + other.items_.size());
  std::merge(items_.begin(), items_.end(), other.items_.begin(),
             other.items_.end(), std::back_inserter(combined), comparator_);
  items_ = std::move(combined);
  sorted_end_ = items_.size();
  sigma_ |= other.sigma_;
  compaction_count_ += other.compaction_count_;
}

template <typename T, typename C>
void relative_compactor<T, C>::reset_parameters(uint32_t section_size,
                                                uint32_t capacity) {
  if (section_size < 2 || section_size % 2 != 0 ||
      capacity < 2 * section_size || (capacity / 2) % section_size != 0) {
    throw std::invalid_argument("invalid compactor sizing");
  }
  k_ = section_size;
  B_ = capacity;
  items_.reserve(size_t{B_} + 1);
}

template <typename T, typename C>
uint64_t relative_compactor<T, C>::count_le(const T& item) const {
  ensure_sorted();
  return static_cast<uint64_t>(
      std::upper_bound(items_.begin(), items_.end(), item, comparator_) -
      items_.begin());
}

template <typename T, typename C>
const std::vector<T>& relative_compactor<T, C>::sorted_items() const {
  ensure_sorted();
  return items_;
}

}  // namespace relq

#endif  // RELQ_RELATIVE_COMPACTOR_IMPL_HPP_
