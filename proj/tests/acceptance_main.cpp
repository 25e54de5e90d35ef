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

// Acceptance suite: ten independent criteria, one PASS/FAIL line each.
// Exits 0 only if every criterion passes. All tolerances are pinned
// here as literals so a regression cannot hide behind a recomputed bound.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <relq/relq.hpp>

namespace {

using relq::req_sketch;
using relq::sketch_mode;

// Empirical failure fractions are compared against the binomial
// three-sigma envelope around delta = 0.1 at 300 trials.
constexpr double kBand300 = 0.15196152422706632;

std::vector<double> uniform_data(uint64_t n, uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<double> data(n);
  for (auto& x : data) {
    x = static_cast<double>(gen() >> 11) * 0x1.0p-53;
  }
  return data;
}

struct outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int precision = 4) {
  std::ostringstream out;
  out << std::setprecision(precision) << x;
  return out.str();
}

// --------------------------------------------------------------------
// 1. Low ranks are exact: with eps=0.05, delta=0.1 in mergeable mode,
//    every query whose exact rank is at most B0/2 = 2112 must be
//    answered with zero error in all 100 trials.
outcome criterion1() {
  const auto params = relq::derive_mergeable(0.05, 0.1);
  if (params.B != 4224) {
    return {false, "level-0 capacity drifted: B0=" + std::to_string(params.B) +
                       ", pinned 4224"};
  }
  const uint64_t n = uint64_t{1} << 18;
  const auto data = uniform_data(n, 0xC1);
  std::vector<double> sorted(data);
  std::sort(sorted.begin(), sorted.end());

  const uint64_t protected_ranks = params.B / 2;
  std::vector<std::pair<double, uint64_t>> queries;
  for (uint64_t r = 1; r <= protected_ranks; ++r) {
    const double y = sorted[r - 1];
    if (!queries.empty() && queries.back().first == y) continue;
    const auto exact = static_cast<uint64_t>(
        std::upper_bound(sorted.begin(), sorted.end(), y) - sorted.begin());
    queries.emplace_back(y, exact);
  }

  for (uint32_t trial = 0; trial < 100; ++trial) {
    req_sketch<double> sketch(0.05, 0.1, 0xC1000 + trial);
    for (double x : data) sketch.update(x);
    for (const auto& [y, exact] : queries) {
      const uint64_t est = sketch.rank(y);
      if (est != exact) {
        return {false, "trial " + std::to_string(trial) + ": rank " +
                           std::to_string(exact) + " estimated as " +
                           std::to_string(est)};
      }
    }
  }
  return {true, std::to_string(queries.size()) + " ranks <= " +
                    std::to_string(protected_ranks) +
                    " exact across 100 trials"};
}

// --------------------------------------------------------------------
// 2/3/8 share one 300-trial streaming run: eps=0.1, delta=0.1, n=2^17,
// query ranks 2^9..2^17.
std::optional<relq::verify::failure_report> g_streaming_report;

outcome criterion2() {
  relq::verify::failure_config cfg;
  cfg.eps = 0.1;
  cfg.delta = 0.1;
  cfg.n = uint64_t{1} << 17;
  cfg.trials = 300;
  cfg.mode = sketch_mode::streaming_known_n;
  cfg.seed = 0xC2;
  const auto report = relq::verify::failure_rate(cfg);
  g_streaming_report = report;

  if (report.per_rank.size() != 9 ||
      report.per_rank.front().target_rank != 512 ||
      report.per_rank.back().target_rank != cfg.n) {
    return {false, "unexpected query rank grid"};
  }
  double worst = 0.0;
  for (const auto& stat : report.per_rank) {
    if (std::abs(stat.band - kBand300) > 1e-15) {
      return {false, "band drifted from pinned " + fmt(kBand300, 17)};
    }
    worst = std::max(worst, stat.failure_fraction);
    if (!stat.within_band) {
      return {false, "rank " + std::to_string(stat.target_rank) +
                         " failure fraction " + fmt(stat.failure_fraction) +
                         " > " + fmt(kBand300)};
    }
  }
  return {true, "worst failure fraction " + fmt(worst) + " <= " +
                    fmt(kBand300) + " on 9 ranks x 300 trials"};
}

outcome criterion3() {
  if (!g_streaming_report) return {false, "criterion 2 did not run"};
  double worst = 0.0;
  for (const auto& stat : g_streaming_report->per_rank) {
    if (stat.stderr_mean > 0.0) {
      worst = std::max(worst, std::abs(stat.mean_err) / stat.stderr_mean);
    }
    if (!stat.unbiased) {
      return {false, "rank " + std::to_string(stat.target_rank) +
                         " mean err " + fmt(stat.mean_err) + " exceeds 4 x " +
                         fmt(stat.stderr_mean)};
    }
  }
  return {true, "worst |mean err| = " + fmt(worst) + " standard errors <= 4"};
}

// --------------------------------------------------------------------
// 4. Merge trees: random, balanced, and left-deep merges of 16 shards of
//    2^14 items meet the criterion-2/3 bands, and 100 fuzzed merge trees
//    never trip an internal invariant.
outcome criterion4() {
  using relq::verify::merge_topology;
  const std::pair<merge_topology, const char*> shapes[] = {
      {merge_topology::random_order, "random"},
      {merge_topology::balanced, "balanced"},
      {merge_topology::left_deep, "left-deep"},
  };
  for (const auto& [topology, name] : shapes) {
    relq::verify::merge_config mcfg;
    mcfg.eps = 0.1;
    mcfg.delta = 0.1;
    mcfg.shards = 16;
    mcfg.shard_size = uint64_t{1} << 14;
    mcfg.trials = 300;
    mcfg.topology = topology;
    mcfg.seed = 0xC4;
    const auto report = relq::verify::merge_tree_trial(mcfg);
    for (const auto& stat : report.per_rank) {
      if (std::abs(stat.band - kBand300) > 1e-15) {
        return {false, std::string(name) + ": band drifted from pinned value"};
      }
    }
    if (!report.within_bands) {
      return {false, std::string(name) + " tree exceeded the failure band"};
    }
    if (!report.unbiased) {
      return {false, std::string(name) + " tree shows biased errors"};
    }
  }

  std::mt19937_64 fz(0xC4F);
  for (uint32_t t = 0; t < 100; ++t) {
    try {
      const uint32_t shard_count = 2 + static_cast<uint32_t>(fz() % 7);
      std::vector<req_sketch<double>> shards;
      for (uint32_t s = 0; s < shard_count; ++s) {
        const uint64_t size = 100 + fz() % 4901;
        req_sketch<double> sketch(0.1, 0.1, fz());
        for (double x : uniform_data(size, fz())) sketch.update(x);
        shards.push_back(std::move(sketch));
      }
      while (shards.size() > 1) {
        const size_t a = fz() % shards.size();
        std::swap(shards[a], shards.back());
        auto right = std::move(shards.back());
        shards.pop_back();
        const size_t b = fz() % shards.size();
        std::swap(shards[b], shards.back());
        auto left = std::move(shards.back());
        shards.pop_back();
        shards.push_back(relq::merge(std::move(left), std::move(right)));
        shards.back().check_structure();
      }
    } catch (const std::exception& e) {
      return {false, "fuzzed tree " + std::to_string(t) +
                         " tripped an invariant: " + e.what()};
    }
  }
  return {true, "3 topologies within " + fmt(kBand300) +
                    ", 100 fuzzed trees invariant-clean"};
}

// --------------------------------------------------------------------
// 5. Space scaling: stored_items at n in {2^14..2^20} stays below
//    C * eps^-1 * log2^1.5(eps*n) * sqrt(ln(1/delta)) with C frozen from
//    the first measurement plus 25% headroom, and consecutive growth
//    ratios stay within 20% of the model's prediction.
outcome criterion5() {
  const double eps = 0.05;
  const double delta = 0.1;
  const auto model = [&](uint64_t n) {
    return (1.0 / eps) * std::pow(std::log2(eps * static_cast<double>(n)), 1.5) *
           std::sqrt(std::log(1.0 / delta));
  };
  const uint64_t sizes[] = {uint64_t{1} << 14, uint64_t{1} << 16,
                            uint64_t{1} << 18, uint64_t{1} << 20};
  double stored[4] = {};
  for (size_t i = 0; i < 4; ++i) {
    double total = 0.0;
    for (uint64_t seed = 1; seed <= 5; ++seed) {
      const auto params = relq::derive_streaming(eps, delta, sizes[i]);
      req_sketch<double> sketch(params, 0xC5000 + seed);
      for (double x : uniform_data(sizes[i], 0xD5000 + 31 * i + seed)) {
        sketch.update(x);
      }
      total += static_cast<double>(sketch.stored_items());
    }
    stored[i] = total / 5.0;
  }

  const double C = 1.25 * stored[0] / model(sizes[0]);
  std::ostringstream detail;
  detail << "C=" << fmt(C) << ", stored=";
  for (size_t i = 0; i < 4; ++i) {
    detail << (i ? "/" : "") << fmt(stored[i], 5);
  }
  for (size_t i = 0; i < 4; ++i) {
    if (stored[i] > C * model(sizes[i])) {
      return {false, detail.str() + "; n=2^" +
                         std::to_string(14 + 2 * i) + " exceeds bound " +
                         fmt(C * model(sizes[i]), 5)};
    }
  }
  for (size_t i = 1; i < 4; ++i) {
    if (stored[i] <= stored[i - 1]) {
      return {false, detail.str() + "; growth not monotone at n=2^" +
                         std::to_string(14 + 2 * i)};
    }
    const double predicted = model(sizes[i]) / model(sizes[i - 1]);
    const double measured = stored[i] / stored[i - 1];
    if (std::abs(measured / predicted - 1.0) > 0.20) {
      return {false, detail.str() + "; ratio " + fmt(measured) +
                         " vs predicted " + fmt(predicted) + " off by >20%"};
    }
  }
  return {true, detail.str()};
}

// --------------------------------------------------------------------
// 6. Schedule combinatorics for m = 3..12, plus the trailing-zeros
//    negative control, which must fail for every budget.
outcome criterion6() {
  for (uint32_t m = 3; m <= 12; ++m) {
    if (!relq::verify::schedule_check(m)) {
      return {false, "separation property fails at m=" + std::to_string(m)};
    }
    if (relq::verify::schedule_check_trailing_zeros(m)) {
      return {false, "negative control passed at m=" + std::to_string(m)};
    }
  }
  return {true, "separation holds for m=3..12; negative control rejected"};
}

// --------------------------------------------------------------------
// 7. Important-step bound: over sorted, reversed, and 50 shuffled
//    streams, with 20 query points each, count_h * k never exceeds the
//    number of items <= y that entered level h.
outcome criterion7() {
  const uint64_t n = 4096;
  const double eps = 0.1;
  const double delta = 0.1;
  std::vector<double> ascending(n);
  std::iota(ascending.begin(), ascending.end(), 1.0);
  std::vector<double> descending(ascending.rbegin(), ascending.rend());

  std::vector<std::vector<double>> streams = {ascending, descending};
  for (uint32_t s = 0; s < 50; ++s) {
    auto shuffled = ascending;
    std::mt19937_64 gen(0xC7000 + s);
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    streams.push_back(std::move(shuffled));
  }

  std::vector<double> queries;
  for (uint64_t q = 1; q <= 20; ++q) {
    queries.push_back(static_cast<double>(q * n / 20));
  }

  int64_t worst = std::numeric_limits<int64_t>::min();
  uint32_t max_levels = 0;
  for (size_t s = 0; s < streams.size(); ++s) {
    const auto result = relq::verify::important_step_audit(
        streams[s], queries, eps, delta, 0xC7F00 + s);
    worst = std::max(worst, result.worst_slack);
    max_levels = std::max(max_levels, result.levels);
    if (!result.holds) {
      return {false, "stream " + std::to_string(s) + " violates the bound, " +
                         "slack " + std::to_string(result.worst_slack)};
    }
  }
  return {true, "52 streams x 20 queries hold; worst slack " +
                    std::to_string(worst) + ", up to " +
                    std::to_string(max_levels) + " levels"};
}

// --------------------------------------------------------------------
// 8. Weight conservation in streaming mode: rank(max) == n in every
//    criterion-2 trial.
outcome criterion8() {
  if (!g_streaming_report) return {false, "criterion 2 did not run"};
  if (!g_streaming_report->weight_conserved) {
    return {false, "rank(max) != n in at least one streaming trial"};
  }
  return {true, "rank(max) == n in all 300 streaming trials"};
}

// --------------------------------------------------------------------
// 9. High-confidence mode: eps=0.2, delta=1e-6, n=2^16 — the derived k
//    matches the closed form 2^4 * ceil(eps^-1 * log2(ln(1/delta))) = 304
//    and 200 trials observe zero failures.
outcome criterion9() {
  const auto params = relq::derive_high_confidence(0.2, 1e-6, uint64_t{1} << 16);
  const auto closed_form = 16 * static_cast<uint32_t>(std::ceil(
                                    std::log2(std::log(1e6)) / 0.2));
  if (params.k != 304 || params.k != closed_form || params.B != 4864) {
    return {false, "derived k=" + std::to_string(params.k) + ", B=" +
                       std::to_string(params.B) + "; pinned k=304, B=4864"};
  }
  relq::verify::failure_config cfg;
  cfg.eps = 0.2;
  cfg.delta = 1e-6;
  cfg.n = uint64_t{1} << 16;
  cfg.trials = 200;
  cfg.mode = sketch_mode::high_confidence;
  cfg.seed = 0xC9;
  const auto report = relq::verify::failure_rate(cfg);
  uint32_t failures = 0;
  for (const auto& stat : report.per_rank) failures += stat.failures;
  if (failures != 0) {
    return {false, std::to_string(failures) + " failures observed at delta=1e-6"};
  }
  if (!report.weight_conserved) {
    return {false, "rank(max) != n in a high-confidence trial"};
  }
  return {true, "k=304, B=4864; 0 failures across " +
                    std::to_string(report.per_rank.size()) +
                    " ranks x 200 trials"};
}

// --------------------------------------------------------------------
// 10. Codec: 1000 fuzzed inputs only ever raise decode_error; 100 random
//     sketches round-trip to byte- and behavior-identical sketches.
outcome criterion10() {
  std::mt19937_64 fz(0xC10);

  std::vector<std::vector<uint8_t>> bases;
  {
    req_sketch<double> a(0.2, 0.2, 11);
    for (double x : uniform_data(5000, 12)) a.update(x);
    bases.push_back(relq::serialize(a));
    req_sketch<double> b(relq::derive_streaming(0.2, 0.2, 4096), 13);
    for (double x : uniform_data(4096, 14)) b.update(x);
    bases.push_back(relq::serialize(b));
    req_sketch<double> c(relq::derive_high_confidence(0.3, 0.01, 2048), 15);
    for (double x : uniform_data(2048, 16)) c.update(x);
    bases.push_back(relq::serialize(c));
  }

  for (uint32_t t = 0; t < 1000; ++t) {
    std::vector<uint8_t> bytes;
    if (t % 2 == 0) {
      bytes.resize(fz() % 200);
      for (auto& byte : bytes) byte = static_cast<uint8_t>(fz());
    } else {
      bytes = bases[fz() % bases.size()];
      const size_t flips = 1 + fz() % 8;
      for (size_t f = 0; f < flips && !bytes.empty(); ++f) {
        bytes[fz() % bytes.size()] = static_cast<uint8_t>(fz());
      }
      if (fz() % 4 == 0) bytes.resize(fz() % (bytes.size() + 1));
    }
    try {
      auto sketch = relq::deserialize(bytes);
      (void)sketch.rank(0.5);
    } catch (const relq::decode_error&) {
      // expected for malformed input
    } catch (const std::exception& e) {
      return {false, "fuzz case " + std::to_string(t) +
                         " escaped decode_error: " + e.what()};
    }
  }

  for (uint32_t t = 0; t < 100; ++t) {
    const double eps = 0.05 + 0.45 * (static_cast<double>(fz() % 1000) / 999.0);
    const uint32_t mode_pick = t % 3;
    relq::sketch_params params;
    double delta = 0.01 + 0.39 * (static_cast<double>(fz() % 1000) / 999.0);
    if (mode_pick == 0) {
      params = relq::derive_mergeable(eps, delta);
    } else if (mode_pick == 1) {
      params = relq::derive_streaming(eps, delta, 2048);
    } else {
      delta = 0.01 + 0.09 * (static_cast<double>(fz() % 1000) / 999.0);
      params = relq::derive_high_confidence(eps, delta, 2048);
    }
    req_sketch<double> original(params, fz());
    const uint64_t updates = fz() % 2049;
    for (double x : uniform_data(updates, fz())) original.update(x);

    const auto bytes = relq::serialize(original);
    auto restored = relq::deserialize(bytes);
    if (relq::serialize(restored) != bytes) {
      return {false, "round trip " + std::to_string(t) + " not byte-stable"};
    }
    for (int probe = 0; probe <= 10; ++probe) {
      const double y = probe / 10.0;
      if (original.rank(y) != restored.rank(y)) {
        return {false, "round trip " + std::to_string(t) +
                           " diverges at query " + fmt(y, 2)};
      }
    }
    const auto extra = uniform_data(50, fz());
    for (double x : extra) {
      original.update(x);
      restored.update(x);
    }
    if (relq::serialize(original) != relq::serialize(restored)) {
      return {false, "round trip " + std::to_string(t) +
                         " diverges after further updates"};
    }
  }
  return {true, "1000 fuzz inputs structured-error only; "
                "100 round trips byte- and behavior-identical"};
}

}  // namespace

int main() {
  struct criterion {
    int number;
    const char* name;
    std::function<outcome()> body;
    double time_limit_s;  // 0 = no limit
  };
  const criterion criteria[] = {
      {1, "exact low ranks", criterion1, 30.0},
      {2, "relative-error failure band", criterion2, 300.0},
      {3, "unbiased rank errors", criterion3, 0.0},
      {4, "full mergeability", criterion4, 0.0},
      {5, "space scaling", criterion5, 0.0},
      {6, "compaction schedule", criterion6, 0.0},
      {7, "important-step bound", criterion7, 60.0},
      {8, "weight conservation", criterion8, 0.0},
      {9, "high-confidence mode", criterion9, 0.0},
      {10, "codec fuzz and round trip", criterion10, 0.0},
  };

  int passed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    outcome result;
    try {
      result = c.body();
    } catch (const std::exception& e) {
      result = {false, std::string("unexpected exception: ") + e.what()};
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (result.pass && c.time_limit_s > 0.0 && elapsed > c.time_limit_s) {
      result.pass = false;
      result.detail += "; exceeded " + fmt(c.time_limit_s, 3) + "s limit";
    }
    if (result.pass) ++passed;
    std::cout << "criterion " << c.number << " (" << c.name << "): "
              << (result.pass ? "PASS" : "FAIL") << " [" << fmt(elapsed, 3)
              << "s] " << result.detail << '\n';
  }
  std::cout << "acceptance: " << passed << "/10 criteria passed" << std::endl;
  return passed == 10 ? 0 : 1;
}
