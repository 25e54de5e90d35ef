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

#ifndef RELQ_VERIFY_HPP_
#define RELQ_VERIFY_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <relq/merge.hpp>
#include <relq/params.hpp>
#include <relq/req_sketch.hpp>

// Statistical and structural verification harnesses. Everything here is
// deterministic given the configured seed, so the checks double as
// regression tests: a pass is a pass on every run.
namespace relq {
namespace verify {

/// Ground-truth rank: number of items in `data` not exceeding y. Plain
/// linear count on the raw stream, deliberately sharing nothing with the
/// sketch implementation.
inline uint64_t exact_rank(std::span<const double> data, double y) {
  uint64_t count = 0;
  for (double x : data) {
    if (x <= y) ++count;
  }
  return count;
}

enum class data_distribution {
  uniform,
  sorted_ascending,
  sorted_descending,
  zipf_like  // heavy duplication with a long tail
};

namespace verify_detail {

inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic uniform doubles in [0, 1), independent of any library
/// distribution implementation.
class uniform_gen {
 public:
  explicit uniform_gen(uint64_t seed) : state_(seed) {}
  double next() {
    state_ = mix64(state_ ^ ++counter_);
    return static_cast<double>(state_ >> 11) * 0x1.0p-53;
  }

 private:
  uint64_t state_;
  uint64_t counter_ = 0;
};

inline std::vector<double> make_data(uint64_t n, data_distribution dist,
                                     uint64_t seed) {
  uniform_gen gen(seed);
  std::vector<double> data(n);
  for (auto& x : data) x = gen.next();
  switch (dist) {
    case data_distribution::uniform:
      break;
    case data_distribution::sorted_ascending:
      std::sort(data.begin(), data.end());
      break;
    case data_distribution::sorted_descending:
      std::sort(data.begin(), data.end(), std::greater<>());
      break;
    case data_distribution::zipf_like:
      for (auto& x : data) {
        x = std::floor(1.0 / std::max(x, 1e-6));
      }
      break;
  }
  return data;
}

}  // namespace verify_detail

struct rank_stat {
  uint64_t target_rank;
  uint64_t exact;
  uint32_t trials;
  uint32_t failures;
  double failure_fraction;
  double band;
  double mean_err;
  double stderr_mean;
  bool within_band;
  bool unbiased;
};

struct failure_report {
  std::vector<rank_stat> per_rank;
  bool weight_conserved = true;  // rank(max) == n in every streaming trial
  bool within_bands = true;
  bool unbiased = true;
  bool pass = false;
};

struct failure_config {
  double eps = 0.1;
  double delta = 0.1;
  uint64_t n = uint64_t{1} << 17;
  uint32_t trials = 300;
  sketch_mode mode = sketch_mode::streaming_known_n;
  data_distribution dist = data_distribution::uniform;
  uint64_t seed = 0;
  /// Query ranks; empty selects {2^j : B/2 < 2^j <= n} for the level-0
  /// capacity B of a fresh sketch.
  std::vector<uint64_t> ranks;
};

namespace verify_detail {

inline sketch_params params_for(const failure_config& cfg) {
  switch (cfg.mode) {
    case sketch_mode::streaming_known_n:
      return derive_streaming(cfg.eps, cfg.delta, cfg.n);
    case sketch_mode::mergeable:
      return derive_mergeable(cfg.eps, cfg.delta);
    case sketch_mode::high_confidence:
      return derive_high_confidence(cfg.eps, cfg.delta, cfg.n);
  }
  throw std::invalid_argument("unknown mode");
}

inline std::vector<uint64_t> default_ranks(uint32_t B, uint64_t n) {
  std::vector<uint64_t> ranks;
  for (uint64_t r = 1; r <= n; r *= 2) {
    if (r > B / 2) ranks.push_back(r);
  }
  if (ranks.empty()) ranks.push_back(n);
  return ranks;
}

struct welford {
  uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x) {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }
  double stderr_mean() const {
    if (count < 2) return 0.0;
    const double var = m2 / static_cast<double>(count - 1);
    return std::sqrt(var / static_cast<double>(count));
  }
};

struct query_point {
  uint64_t target_rank;
  double value;
  uint64_t exact;
};

inline std::vector<query_point> make_queries(const std::vector<double>& data,
                                             std::vector<uint64_t> ranks) {
  std::vector<double> sorted(data);
  std::sort(sorted.begin(), sorted.end());
  std::vector<query_point> queries;
  queries.reserve(ranks.size());
  for (uint64_t r : ranks) {
    const double y = sorted[r - 1];
    queries.push_back({r, y, exact_rank(sorted, y)});
  }
  return queries;
}

/// Shared scoring loop: runs `build_estimator` per trial, which must return
/// a sketch over exactly the configured data.
template <typename BuildFn>
failure_report score_trials(const failure_config& cfg,
                            const std::vector<double>& data,
                            const std::vector<query_point>& queries,
                            BuildFn&& build_estimator) {
  const double band =
      cfg.delta +
      3.0 * std::sqrt(cfg.delta * (1.0 - cfg.delta) / cfg.trials);
  const double max_item = *std::max_element(data.begin(), data.end());

  std::vector<uint32_t> failures(queries.size(), 0);
  std::vector<welford> errs(queries.size());
  failure_report report;

  for (uint32_t t = 0; t < cfg.trials; ++t) {
    auto sketch = build_estimator(t);
    if (sketch.n() != data.size()) {
      throw std::logic_error("trial sketch missed part of the stream");
    }
    if (cfg.mode != sketch_mode::mergeable &&
        sketch.rank(max_item) != data.size()) {
      report.weight_conserved = false;
    }
    for (size_t q = 0; q < queries.size(); ++q) {
      const auto est = static_cast<double>(sketch.rank(queries[q].value));
      const auto exact = static_cast<double>(queries[q].exact);
      const double err = est - exact;
      if (std::abs(err) > cfg.eps * exact) ++failures[q];
      errs[q].add(err);
    }
  }

  for (size_t q = 0; q < queries.size(); ++q) {
    rank_stat stat;
    stat.target_rank = queries[q].target_rank;
    stat.exact = queries[q].exact;
    stat.trials = cfg.trials;
    stat.failures = failures[q];
    stat.failure_fraction =
        static_cast<double>(failures[q]) / static_cast<double>(cfg.trials);
    stat.band = band;
    stat.mean_err = errs[q].mean;
    stat.stderr_mean = errs[q].stderr_mean();
    stat.within_band = stat.failure_fraction <= band;
    stat.unbiased = std::abs(stat.mean_err) <= 4.0 * stat.stderr_mean ||
                    errs[q].m2 == 0.0;
    report.within_bands = report.within_bands && stat.within_band;
    report.unbiased = report.unbiased && stat.unbiased;
    report.per_rank.push_back(stat);
  }
  report.pass = report.within_bands && report.weight_conserved;
  return report;
}

}  // namespace verify_detail

/// Builds `trials` independently seeded sketches over one deterministic
/// stream and reports, per query rank, the empirical frequency of missing
/// the eps guarantee together with the signed error moments. The acceptance
/// band is the binomial three-sigma envelope around delta.
inline failure_report failure_rate(const failure_config& cfg) {
  if (cfg.trials < 2) throw std::invalid_argument("need at least 2 trials");
  const auto params = verify_detail::params_for(cfg);
  const auto data =
      verify_detail::make_data(cfg.n, cfg.dist, verify_detail::mix64(cfg.seed));
  const auto queries = verify_detail::make_queries(
      data, cfg.ranks.empty() ? verify_detail::default_ranks(params.B, cfg.n)
                              : cfg.ranks);
  return verify_detail::score_trials(
      cfg, data, queries, [&](uint32_t trial) {
        req_sketch<double> sketch(params, cfg.seed + 1000003ULL * (trial + 1));
        for (double x : data) sketch.update(x);
        return sketch;
      });
}

/// Verifies the derandomized schedule invariant for an m-section budget:
/// between any two compactions reaching exactly j sections there is one
/// reaching more than j. The production rule (sections = trailing ones of
/// sigma, plus one) satisfies this for every m.
inline bool schedule_check(uint32_t m,
                           uint32_t (*sections_of)(uint64_t) = nullptr) {
  const uint64_t states = uint64_t{1} << m;
  std::vector<uint32_t> sections(states);
  for (uint64_t sigma = 0; sigma < states; ++sigma) {
    sections[sigma] =
        sections_of == nullptr
            ? relative_compactor<double>::trailing_ones(sigma) + 1
            : sections_of(sigma);
  }
  for (uint64_t i = 0; i < states; ++i) {
    for (uint64_t j = i + 1; j < states; ++j) {
      if (sections[j] != sections[i]) continue;
      bool separated = false;
      for (uint64_t t = i + 1; t < j && !separated; ++t) {
        separated = sections[t] > sections[i];
      }
      if (!separated) return false;
      break;  // adjacent pairs suffice: the relation is transitive
    }
  }
  return true;
}

/// Negative control: the same check against the buggy mirror rule that
/// counts trailing zeros (a loop that leaves zero at sigma = 0). States 0
/// and 1 then reach one section back to back, so the check must fail.
inline bool schedule_check_trailing_zeros(uint32_t m) {
  return schedule_check(m, [](uint64_t sigma) {
    uint32_t zeros = 0;
    while (sigma != 0 && (sigma & 1) == 0) {
      ++zeros;
      sigma >>= 1;
    }
    return zeros + 1;
  });
}

enum class merge_topology { left_deep, balanced, random_order };

struct merge_config {
  double eps = 0.1;
  double delta = 0.1;
  uint32_t shards = 16;
  uint64_t shard_size = uint64_t{1} << 14;
  uint32_t trials = 300;
  merge_topology topology = merge_topology::left_deep;
  data_distribution dist = data_distribution::uniform;
  uint64_t seed = 0;
  std::vector<uint64_t> ranks;
};

/// Splits one stream into contiguous shards, sketches each shard, merges
/// the shard sketches along the configured tree shape, and scores the merged
/// sketch exactly like failure_rate. Structural merge invariants are
/// enforced inside merge itself and via check_structure here; a violation
/// throws rather than skewing the statistics.
inline failure_report merge_tree_trial(const merge_config& mcfg) {
  const uint64_t n = mcfg.shards * mcfg.shard_size;
  failure_config cfg;
  cfg.eps = mcfg.eps;
  cfg.delta = mcfg.delta;
  cfg.n = n;
  cfg.trials = mcfg.trials;
  cfg.mode = sketch_mode::mergeable;
  cfg.dist = mcfg.dist;
  cfg.seed = mcfg.seed;
  cfg.ranks = mcfg.ranks;

  const auto params = derive_mergeable(mcfg.eps, mcfg.delta);
  const auto data =
      verify_detail::make_data(n, mcfg.dist, verify_detail::mix64(mcfg.seed));
  const auto queries = verify_detail::make_queries(
      data, cfg.ranks.empty() ? verify_detail::default_ranks(params.B, n)
                              : cfg.ranks);

  return verify_detail::score_trials(cfg, data, queries, [&](uint32_t trial) {
    std::vector<req_sketch<double>> shards;
    shards.reserve(mcfg.shards);
    for (uint32_t s = 0; s < mcfg.shards; ++s) {
      req_sketch<double> sketch(
          mcfg.eps, mcfg.delta,
          mcfg.seed + 1000003ULL * (trial + 1) + 7919ULL * s);
      const uint64_t begin = s * mcfg.shard_size;
      for (uint64_t i = 0; i < mcfg.shard_size; ++i) {
        sketch.update(data[begin + i]);
      }
      shards.push_back(std::move(sketch));
    }
    switch (mcfg.topology) {
      case merge_topology::left_deep: {
        auto acc = std::move(shards.front());
        for (size_t s = 1; s < shards.size(); ++s) {
          acc = merge(std::move(acc), std::move(shards[s]));
        }
        shards.clear();
        shards.push_back(std::move(acc));
        break;
      }
      case merge_topology::balanced: {
        while (shards.size() > 1) {
          std::vector<req_sketch<double>> next;
          next.reserve((shards.size() + 1) / 2);
          for (size_t s = 0; s + 1 < shards.size(); s += 2) {
            next.push_back(
                merge(std::move(shards[s]), std::move(shards[s + 1])));
          }
          if (shards.size() % 2 == 1) {
            next.push_back(std::move(shards.back()));
          }
          shards = std::move(next);
        }
        break;
      }
      case merge_topology::random_order: {
        uint64_t pick_state = verify_detail::mix64(mcfg.seed ^ (trial + 17));
        while (shards.size() > 1) {
          pick_state = verify_detail::mix64(pick_state);
          const size_t a = pick_state % shards.size();
          std::swap(shards[a], shards.back());
          auto right = std::move(shards.back());
          shards.pop_back();
          pick_state = verify_detail::mix64(pick_state);
          const size_t b = pick_state % shards.size();
          std::swap(shards[b], shards.back());
          auto left = std::move(shards.back());
          shards.pop_back();
          shards.push_back(merge(std::move(left), std::move(right)));
        }
        break;
      }
    }
    shards.front().check_structure();
    return std::move(shards.front());
  });
}

struct audit_result {
  bool holds = true;
  uint32_t levels = 0;
  /// max over levels and queries of count_h * k - R_h(y); holds iff <= 0.
  int64_t worst_slack = 0;
};

namespace verify_detail {

class audit_observer : public compaction_observer<double> {
 public:
  explicit audit_observer(std::vector<double> queries)
      : queries_(std::move(queries)) {}

  void on_compaction(const compaction_event<double>& event) override {
    ensure_level(event.level + 1);
    auto& counts = important_counts_[event.level];
    auto& next_rank = input_ranks_[event.level + 1];
    for (size_t q = 0; q < queries_.size(); ++q) {
      uint64_t removed_le = 0;
      for (double x : event.removed) {
        if (x <= queries_[q]) ++removed_le;
      }
      if (removed_le % 2 == 1) ++counts[q];
      for (double x : event.promoted) {
        if (x <= queries_[q]) ++next_rank[q];
      }
    }
  }

  void set_level0_ranks(std::span<const double> stream) {
    ensure_level(0);
    for (size_t q = 0; q < queries_.size(); ++q) {
      input_ranks_[0][q] = exact_rank(stream, queries_[q]);
    }
  }

  size_t levels() const { return important_counts_.size(); }
  uint64_t important_count(size_t h, size_t q) const {
    return important_counts_[h][q];
  }
  uint64_t input_rank(size_t h, size_t q) const { return input_ranks_[h][q]; }
  size_t num_queries() const { return queries_.size(); }

 private:
  void ensure_level(size_t h) {
    while (important_counts_.size() <= h) {
      important_counts_.emplace_back(queries_.size(), 0);
      input_ranks_.emplace_back(queries_.size(), 0);
    }
  }

  std::vector<double> queries_;
  std::vector<std::vector<uint64_t>> important_counts_;
  std::vector<std::vector<uint64_t>> input_ranks_;
};

}  // namespace verify_detail

/// Streams `stream` through a fixed-length sketch while counting, per level
/// and query point y, the compactions whose removed range held an odd number
/// of items <= y (the only compactions that can add error at y). Each such
/// count is deterministically bounded by the number of items <= y that ever
/// entered the level, divided by the section size k.
inline audit_result important_step_audit(std::span<const double> stream,
                                         std::span<const double> queries,
                                         double eps, double delta,
                                         uint64_t seed) {
  const auto params = derive_streaming(eps, delta, stream.size());
  verify_detail::audit_observer observer(
      std::vector<double>(queries.begin(), queries.end()));
  observer.set_level0_ranks(stream);

  req_sketch<double> sketch(params, seed);
  sketch.set_compaction_observer(&observer);
  for (double x : stream) sketch.update(x);

  audit_result result;
  result.levels = static_cast<uint32_t>(observer.levels());
  for (size_t h = 0; h < observer.levels(); ++h) {
    for (size_t q = 0; q < observer.num_queries(); ++q) {
      const auto lhs = static_cast<int64_t>(observer.important_count(h, q) *
                                            params.k);
      const auto rhs = static_cast<int64_t>(observer.input_rank(h, q));
      result.worst_slack = std::max(result.worst_slack, lhs - rhs);
      if (lhs > rhs) result.holds = false;
    }
  }
  return result;
}

}  // namespace verify
}  // namespace relq

#endif  // RELQ_VERIFY_HPP_
