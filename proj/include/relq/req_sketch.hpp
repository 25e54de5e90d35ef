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

#ifndef RELQ_REQ_SKETCH_HPP_
#define RELQ_REQ_SKETCH_HPP_

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <relq/coin_rng.hpp>
#include <relq/params.hpp>
#include <relq/relative_compactor.hpp>

namespace relq {

template <typename T, typename C>
class req_sketch;

/**
 * Quantiles sketch with a relative (multiplicative) error guarantee.
 *
 * For a stream of n items and a query value y, let R(y) be the number of
 * stream items not exceeding y. The sketch returns an estimate R^(y) with
 *
 *   |R^(y) - R(y)| <= eps * R(y)
 *
 * with probability at least 1 - delta for each fixed y. The relative form of
 * the bound means low ranks are approximated much more accurately than a
 * uniform-error sketch would, down to exactly zero error for the smallest
 * ranks; accuracy degrades gracefully toward the high end, where a given
 * relative error is cheap. Space grows as
 * O(eps^-1 * log^1.5(eps * n) * sqrt(log(1/delta))).
 *
 * Structure: a short cascade of relative_compactors. Level h stores items
 * representing 2^h stream items each. An update enters level 0; whenever a
 * level fills, a compaction keeps a uniformly chosen half of its largest
 * items' every-other subsequence one level up. The estimate for y is the
 * weighted count of stored items not exceeding y. Estimates are unbiased, and
 * the smallest half of level 0 is never compacted, so the lowest ranks are
 * answered exactly.
 *
 * Modes:
 *  - streaming_known_n: the stream length bound is declared up front and the
 *    per-level sizing is fixed. All compactions move an even number of items,
 *    so total weight is conserved exactly.
 *  - mergeable: no length bound needed. The sizing is derived from a growing
 *    horizon N that squares whenever n would pass it; sketches built with
 *    equal accuracy targets merge freely (see merge.hpp) with the guarantee
 *    intact.
 *  - high_confidence: fixed-length variant whose section size scales with
 *    log log(1/delta), for very small failure probabilities.
 *
 * Randomness: every compaction consumes one fair coin from a per-sketch
 * seeded generator (coin_rng). Two sketches built with the same seed over the
 * same input are bit-for-bit identical, including their serialized form.
 *
 * Thread contract: one writer at a time; concurrent read-only queries are
 * safe only if the host arranges exclusion with updates. Queries may reorder
 * the internal buffers (they batch pending sort work) but never change the
 * logical state.
 *
 * The default universe is double with std::less; NaN updates are rejected.
 * Any totally ordered T works via the Comparator parameter, but only the
 * double instantiation has a serialized form.
 */
template <typename T, typename Comparator = std::less<T>>
class req_sketch {
 public:
  using comparator = Comparator;

  /// Mergeable-mode sketch with the given per-query accuracy target.
  req_sketch(double eps, double delta, uint64_t seed = 0,
             const Comparator& cmp = Comparator())
      : req_sketch(derive_mergeable(eps, delta), seed, cmp) {}

  /// Sketch over explicit sizing, e.g. from derive_streaming or
  /// derive_high_confidence.
  explicit req_sketch(const sketch_params& params, uint64_t seed = 0,
                      const Comparator& cmp = Comparator());

  /// Reconstructs a sketch from captured state; deserialization plumbing.
  /// level_states holds (sigma, ascending items) per level, lowest first.
  req_sketch(const sketch_params& params, uint64_t seed, uint64_t coin_draws,
             uint64_t n,
             std::vector<std::pair<uint64_t, std::vector<T>>> level_states,
             const Comparator& cmp = Comparator());

  /// Adds one item. Rejects NaN for floating-point T. Mergeable-mode
  /// sketches first re-derive their sizing if n would pass the horizon N
  /// (compacting every non-top level to half capacity under the old sizing,
  /// then squaring N).
  void update(const T& item);

  /// Estimated number of stream items x with x <= y. Zero for an empty
  /// sketch. Exact whenever no compaction has touched an item <= y, in
  /// particular for the lowest-ranked half of level 0's capacity.
  uint64_t rank(const T& y) const;

  /// Smallest stored item whose rank estimate reaches r, for r in [1, n].
  /// Throws std::out_of_range on an empty sketch or r outside [1, n].
  T quantile(uint64_t r) const;

  /// Rank-fraction pairs (y, rank(y)/n) for the given query points, sorted
  /// ascending by query. Throws std::out_of_range on an empty sketch.
  std::vector<std::pair<T, double>> cdf(std::vector<T> points) const;

  /// Total items held across all levels.
  size_t stored_items() const;

  uint64_t n() const { return n_; }
  bool is_empty() const { return n_ == 0; }
  const sketch_params& params() const { return params_; }
  sketch_mode mode() const { return params_.mode; }
  uint64_t seed() const { return rng_.seed(); }
  uint64_t coin_draws() const { return rng_.draws(); }
  size_t num_levels() const { return levels_.size(); }
  const std::vector<relative_compactor<T, Comparator>>& levels() const {
    return levels_;
  }
  const Comparator& get_comparator() const { return comparator_; }

  /// Diagnostic hook: receives every compaction this sketch performs.
  void set_compaction_observer(compaction_observer<T>* observer);

  /// Throws std::logic_error if any structural invariant is violated
  /// (buffer over capacity, schedule state over budget, level count over the
  /// growth bound). Intended for tests and debugging.
  void check_structure() const;

  template <typename TT, typename CC>
  friend req_sketch<TT, CC> merge(req_sketch<TT, CC> s1,
                                  req_sketch<TT, CC> s2);

 private:
  void validate_item(const T& item) const;
  void ensure_level(size_t h);
  void cascade(std::vector<T>&& promoted, size_t h);
  /// Compacts every non-top level holding more than half its capacity down
  /// to the smallest half, promoting the survivors. Used before the horizon
  /// grows and when feeding a smaller-horizon sketch into a merge.
  void special_compactions();

  sketch_params params_;
  uint64_t n_ = 0;
  coin_rng rng_;
  Comparator comparator_;
  compaction_observer<T>* observer_ = nullptr;
  std::vector<relative_compactor<T, Comparator>> levels_;
};

}  // namespace relq

#include <relq/req_sketch_impl.hpp>

#endif  // RELQ_REQ_SKETCH_HPP_
