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

#ifndef RELQ_RELATIVE_COMPACTOR_HPP_
#define RELQ_RELATIVE_COMPACTOR_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <relq/coin_rng.hpp>

namespace relq {

/// Start (1-based) and length of the buffer range a compaction removes.
struct compaction_range {
  uint32_t L;  // number of slots compacted
  uint32_t S;  // first compacted slot, 1-based
};

/// Snapshot of one compaction, reported to an optional observer. Spans point
/// into transient storage and are only valid during the callback.
template <typename T>
struct compaction_event {
  uint32_t level;
  uint64_t sigma_before;
  bool scheduled;  // true for capacity-triggered compactions, false for the
                   // fixed half-buffer compactions used while growing/merging
  std::span<const T> removed;
  std::span<const T> promoted;
};

template <typename T>
class compaction_observer {
 public:
  virtual ~compaction_observer() = default;
  virtual void on_compaction(const compaction_event<T>& event) = 0;
};

/**
 * A single level of the sketch: a bounded buffer that, when full, sorts
 * itself and replaces the largest L items by a uniformly chosen half of them
 * (every other item), to be re-inserted one level up with twice the weight.
 *
 * The compaction schedule is derandomized: with state sigma (the number of
 * compactions so far), the compaction removes L = (z(sigma) + 1) * k items
 * where z counts the trailing one bits of sigma. Small states touch only the
 * top section of the buffer; states with long runs of trailing ones reach
 * deeper, and the smallest half of the buffer is never touched by a full
 * buffer's compaction. The one random decision per compaction, whether the
 * odd- or even-indexed items survive, comes from the sketch-level coin_rng.
 *
 * The buffer keeps a sorted prefix plus an unsorted appended tail; full
 * sortedness is restored before any compaction, query, or serialization, so
 * the amortized comparison cost per insert stays logarithmic in the capacity.
 */
template <typename T, typename Comparator = std::less<T>>
class relative_compactor {
 public:
  relative_compactor(uint32_t level, uint32_t section_size, uint32_t capacity,
                     const Comparator& comparator = Comparator());

  /// Number of trailing one bits in the binary representation of sigma.
  static uint32_t trailing_ones(uint64_t sigma);

  /// Range the next compaction removes given the schedule state. Throws
  /// std::logic_error if the schedule calls for more slots than exist
  /// (unreachable while the total input fits the configured horizon).
  static compaction_range compaction_bounds(uint64_t sigma, uint32_t k,
                                            uint32_t B);

  /// Adds one item. If the buffer is at (or beyond) capacity first performs
  /// the scheduled compaction and returns the promoted items; otherwise
  /// returns an empty vector. Storage of the new item happens after the
  /// compaction, so the buffer never exceeds capacity via this path.
  std::vector<T> insert(const T& item, coin_rng& rng);

  /// Sorts the buffer and removes every slot from `start` (1-based) through
  /// the end, returning every other removed item starting at the first
  /// (coin true) or second (coin false) of them. Increments sigma. The
  /// removed range may hold an odd count, in which case the two outcomes
  /// differ in size by one.
  std::vector<T> compact_from(uint32_t start, bool keep_odd_indexed,
                              bool scheduled = false);

  /// Scheduled compaction of everything from the schedule's start index
  /// through the current end; used by insert and by the merge pass.
  std::vector<T> compact_scheduled(coin_rng& rng);

  /// Appends items without triggering compactions (merge/growth plumbing).
  void append_bulk(std::span<const T> items);

  /// Concatenates `other`'s buffer into this one and ORs the schedule states.
  void absorb(relative_compactor&& other);

  /// Re-derives this level's sizing after the sketch's horizon grew.
  void reset_parameters(uint32_t section_size, uint32_t capacity);

  /// Number of stored items strictly ordered before or equal to `item`.
  uint64_t count_le(const T& item) const;

  /// Sorted view of the buffer contents.
  const std::vector<T>& sorted_items() const;

  uint32_t level() const { return level_; }
  uint32_t section_size() const { return k_; }
  uint32_t capacity() const { return B_; }
  uint64_t sigma() const { return sigma_; }
  uint64_t compaction_count() const { return compaction_count_; }
  size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  void set_sigma(uint64_t sigma) {
    sigma_ = sigma;
    compaction_count_ = sigma;
  }
  void set_observer(compaction_observer<T>* observer) { observer_ = observer; }

 private:
  void ensure_sorted() const;

  uint32_t level_;
  uint32_t k_;
  uint32_t B_;
  uint64_t sigma_ = 0;
  uint64_t compaction_count_ = 0;
  Comparator comparator_;
  compaction_observer<T>* observer_ = nullptr;
  mutable std::vector<T> items_;
  mutable size_t sorted_end_ = 0;
};

}  // namespace relq

#include <relq/relative_compactor_impl.hpp>

#endif  // RELQ_RELATIVE_COMPACTOR_HPP_
