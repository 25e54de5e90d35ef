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

#include <relq/relq.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace {

// exit 0: success; 1: data or decode problem; 2: usage; 3: selftest failure.
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (in.bad()) throw data_error("cannot read " + path);
  return bytes;
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw data_error("cannot write " + path);
}

relq::req_sketch<double> load_sketch(const std::string& path) {
  return relq::deserialize(read_file(path));
}

std::string_view trimmed(const std::string& line) {
  const auto begin = line.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = line.find_last_not_of(" \t\r\n");
  return std::string_view(line).substr(begin, end - begin + 1);
}

const char* mode_name(relq::sketch_mode mode) {
  switch (mode) {
    case relq::sketch_mode::streaming_known_n:
      return "streaming";
    case relq::sketch_mode::mergeable:
      return "mergeable";
    case relq::sketch_mode::high_confidence:
      return "highconf";
  }
  return "?";
}

struct build_options {
  double eps = 0.0;
  double delta = 0.0;
  std::string mode = "mergeable";
  uint64_t n = 0;
  bool n_given = false;
  uint64_t seed = 0;
  bool all_quantiles = false;
  std::string output;
};

int run_build(const build_options& opt) {
  if (opt.mode != "mergeable" && !opt.n_given) {
    throw usage_error("--mode " + opt.mode + " requires --n");
  }
  if (opt.all_quantiles && !opt.n_given) {
    throw usage_error("--all-quantiles requires --n");
  }

  double eps = opt.eps;
  double delta = opt.delta;
  if (opt.all_quantiles) {
    std::tie(eps, delta) = relq::all_quantiles_adjust(eps, delta, opt.n);
  }
  relq::sketch_params params;
  if (opt.mode == "streaming") {
    params = relq::derive_streaming(eps, delta, opt.n);
  } else if (opt.mode == "highconf") {
    params = relq::derive_high_confidence(eps, delta, opt.n);
  } else {
    params = relq::derive_mergeable(eps, delta);
  }

  relq::req_sketch<double> sketch(params, opt.seed);
  std::string line;
  for (uint64_t line_no = 1; std::getline(std::cin, line); ++line_no) {
    const auto text = trimmed(line);
    if (text.empty()) continue;
    char* end = nullptr;
    const std::string item_text(text);
    const double item = std::strtod(item_text.c_str(), &end);
    if (end != item_text.c_str() + item_text.size()) {
      throw data_error("stdin:" + std::to_string(line_no) +
                       ": not a number: '" + item_text + "'");
    }
    try {
      sketch.update(item);
    } catch (const std::invalid_argument& e) {
      throw data_error("stdin:" + std::to_string(line_no) + ": " + e.what());
    }
  }
  write_file(opt.output, relq::serialize(sketch));
  return 0;
}

int run_query(const std::string& path, const std::vector<double>& rank_of,
              const std::vector<uint64_t>& quantiles) {
  if (rank_of.empty() == quantiles.empty()) {
    throw usage_error("query needs exactly one of --rank-of or --quantile");
  }
  const auto sketch = load_sketch(path);
  std::cout << std::setprecision(17);
  for (double y : rank_of) std::cout << sketch.rank(y) << '\n';
  for (uint64_t r : quantiles) {
    try {
      std::cout << sketch.quantile(r) << '\n';
    } catch (const std::out_of_range& e) {
      throw data_error(e.what());
    }
  }
  return 0;
}

int run_cdf(const std::string& path, uint64_t points) {
  const auto sketch = load_sketch(path);
  std::vector<double> stored;
  stored.reserve(sketch.stored_items());
  for (const auto& level : sketch.levels()) {
    const auto& items = level.sorted_items();
    stored.insert(stored.end(), items.begin(), items.end());
  }
  if (stored.empty()) throw data_error("sketch is empty, no cdf to report");
  std::sort(stored.begin(), stored.end());

  std::vector<double> query_points;
  query_points.reserve(points);
  for (uint64_t i = 1; i <= points; ++i) {
    const uint64_t pos = std::max<uint64_t>(i * stored.size() / points, 1) - 1;
    query_points.push_back(stored[pos]);
  }
  std::cout << std::setprecision(17);
  for (const auto& [y, fraction] : sketch.cdf(query_points)) {
    std::cout << y << ' ' << fraction << '\n';
  }
  return 0;
}

int run_merge(const std::string& path1, const std::string& path2,
              const std::string& output) {
  auto s1 = load_sketch(path1);
  auto s2 = load_sketch(path2);
  try {
    const auto merged = relq::merge(std::move(s1), std::move(s2));
    write_file(output, relq::serialize(merged));
  } catch (const std::invalid_argument& e) {
    throw data_error(std::string("cannot merge: ") + e.what());
  }
  return 0;
}

int run_inspect(const std::string& path) {
  const auto sketch = load_sketch(path);
  const auto& p = sketch.params();
  std::cout << std::setprecision(17);
  std::cout << "mode: " << mode_name(p.mode) << '\n'
            << "eps: " << p.eps << '\n'
            << "delta: " << p.delta << '\n'
            << "k_hat: " << p.k_hat << '\n'
            << "N: " << p.N << '\n'
            << "n: " << sketch.n() << '\n'
            << "k: " << p.k << '\n'
            << "B: " << p.B << '\n'
            << "H: " << sketch.num_levels() - 1 << '\n'
            << "coin_draws: " << sketch.coin_draws() << '\n'
            << "stored_items: " << sketch.stored_items() << '\n';
  for (const auto& level : sketch.levels()) {
    std::cout << "level " << level.level() << ": count=" << level.size()
              << " sigma=" << level.sigma() << '\n';
  }
  return 0;
}

int run_selftest(double eps, double delta, uint64_t n, uint32_t trials,
                 uint64_t seed) {
  using nlohmann::json;
  bool schedule_ok = true;
  bool control_ok = true;
  for (uint32_t m = 3; m <= 12; ++m) {
    schedule_ok = schedule_ok && relq::verify::schedule_check(m);
    control_ok = control_ok && !relq::verify::schedule_check_trailing_zeros(m);
  }

  relq::verify::failure_config cfg;
  cfg.eps = eps;
  cfg.delta = delta;
  cfg.n = n;
  cfg.trials = trials;
  cfg.mode = relq::sketch_mode::streaming_known_n;
  cfg.seed = seed;
  const auto report = relq::verify::failure_rate(cfg);

  for (const auto& stat : report.per_rank) {
    const json record = {{"rank", stat.target_rank},
                         {"exact", stat.exact},
                         {"trials", stat.trials},
                         {"failures", stat.failures},
                         {"failure_fraction", stat.failure_fraction},
                         {"band", stat.band},
                         {"mean_err", stat.mean_err},
                         {"stderr_mean", stat.stderr_mean},
                         {"within_band", stat.within_band},
                         {"unbiased", stat.unbiased}};
    std::cout << record.dump() << '\n';
  }
  const bool pass = schedule_ok && control_ok && report.pass;
  const json summary = {{"schedule_ok", schedule_ok},
                        {"negative_control_ok", control_ok},
                        {"weight_conserved", report.weight_conserved},
                        {"within_bands", report.within_bands},
                        {"unbiased", report.unbiased},
                        {"pass", pass}};
  std::cout << summary.dump() << '\n';
  if (!pass) {
    std::cerr << "selftest failed" << '\n';
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relative-error streaming quantile sketches"};
  app.require_subcommand(1);

  build_options build_opt;
  auto* build = app.add_subcommand(
      "build", "read one item per line from stdin and write a sketch file");
  build->add_option("--eps", build_opt.eps, "relative error target in (0, 1]")
      ->required();
  build->add_option("--delta", build_opt.delta,
                    "failure probability in (0, 0.5]")
      ->required();
  build
      ->add_option("--mode", build_opt.mode,
                   "mergeable (default), streaming, or highconf")
      ->check(CLI::IsMember({"mergeable", "streaming", "highconf"}));
  auto* n_opt = build->add_option(
      "--n", build_opt.n,
      "declared stream length (required for streaming/highconf and "
      "--all-quantiles)");
  build->add_option("--seed", build_opt.seed, "coin seed");
  build->add_flag("--all-quantiles", build_opt.all_quantiles,
                  "tighten eps/delta so one run covers every rank");
  build->add_option("-o,--output", build_opt.output, "output sketch file")
      ->required();

  std::string query_file;
  std::vector<double> rank_of;
  std::vector<uint64_t> quantiles;
  auto* query = app.add_subcommand("query", "rank or quantile queries");
  query->add_option("file", query_file, "sketch file")->required();
  query->add_option("--rank-of", rank_of,
                    "print the rank estimate of each value");
  query->add_option("--quantile", quantiles,
                    "print the item at each rank (1-based)");

  std::string cdf_file;
  uint64_t cdf_points = 0;
  auto* cdf = app.add_subcommand("cdf", "evenly spaced cdf samples");
  cdf->add_option("file", cdf_file, "sketch file")->required();
  cdf->add_option("--points", cdf_points, "number of samples")
      ->required()
      ->check(CLI::PositiveNumber);

  std::string merge_file1, merge_file2, merge_output;
  auto* merge_cmd = app.add_subcommand("merge", "merge two sketch files");
  merge_cmd->add_option("file1", merge_file1, "first sketch")->required();
  merge_cmd->add_option("file2", merge_file2, "second sketch")->required();
  merge_cmd->add_option("-o,--output", merge_output, "output sketch file")
      ->required();

  std::string inspect_file;
  auto* inspect = app.add_subcommand("inspect", "print sketch parameters");
  inspect->add_option("file", inspect_file, "sketch file")->required();

  double st_eps = 0.0, st_delta = 0.0;
  uint64_t st_n = 0, st_seed = 0;
  uint32_t st_trials = 0;
  auto* selftest = app.add_subcommand(
      "selftest", "schedule checks plus an empirical failure-rate run");
  selftest->add_option("--eps", st_eps)->required();
  selftest->add_option("--delta", st_delta)->required();
  selftest->add_option("--n", st_n)->required();
  selftest->add_option("--trials", st_trials)->required();
  selftest->add_option("--seed", st_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    build_opt.n_given = n_opt->count() > 0;
    if (build->parsed()) return run_build(build_opt);
    if (query->parsed()) return run_query(query_file, rank_of, quantiles);
    if (cdf->parsed()) return run_cdf(cdf_file, cdf_points);
    if (merge_cmd->parsed())
      return run_merge(merge_file1, merge_file2, merge_output);
    if (inspect->parsed()) return run_inspect(inspect_file);
    if (selftest->parsed())
      return run_selftest(st_eps, st_delta, st_n, st_trials, st_seed);
    std::cerr << "error: no subcommand" << '\n';
    return 2;
  } catch (const usage_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const relq::decode_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const data_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
