// Copyright 2026 The ctune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// ctune command line: run / compare / export / list-variants / pilot.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "ctune/harness.hpp"
#include "ctune/vehicle.hpp"

namespace {

// "0-9" or "1,4,7"
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  if (const auto dash = text.find('-'); dash != std::string::npos && text.find(',') == std::string::npos) {
    const auto lo = std::stoull(text.substr(0, dash));
    const auto hi = std::stoull(text.substr(dash + 1));
    if (hi < lo) throw ctune::UsageError("empty seed range " + text);
    for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto token = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!token.empty()) seeds.push_back(std::stoull(token));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (seeds.empty()) throw ctune::UsageError("no seeds in '" + text + "'");
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-objective controller tuning under a simulation-step budget"};
  app.require_subcommand(1);

  std::string config_file;
  std::string problem;
  std::vector<std::string> variants;
  std::int64_t budget_steps = -1;
  std::string seeds_text;
  std::string out_dir;
  std::size_t max_evals = 0;
  std::size_t workers = 0;
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  auto* run = app.add_subcommand("run", "Run variants over seeds and persist one record per seed");
  run->add_option("--config", config_file, "Experiment config (JSON)")->check(CLI::ExistingFile);
  run->add_option("--problem", problem, "Problem name");
  run->add_option("--variant", variants, "Variant name (repeatable)")->delimiter(',');
  run->add_option("--budget-steps", budget_steps, "Budget in simulation steps");
  run->add_option("--seeds", seeds_text, "Seed list '0,1,2' or range '0-9'");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--max-evals", max_evals, "Cap on the number of evaluations");
  run->add_option("--workers", workers, "Concurrent evaluations per batch (0 = hardware)");

  std::string records_dir;
  std::string report_file;
  auto* cmp = app.add_subcommand("compare", "Median HV and rank-sum flags per step-grid point");
  cmp->add_option("--out", records_dir, "Record directory")->required();
  cmp->add_option("--report", report_file, "Report file (default <out>/report.tsv)");

  std::string plot_dir;
  std::vector<std::string> trajectories;
  auto* exp = app.add_subcommand("export", "Write plot-ready series, fronts and trajectories");
  exp->add_option("--out", records_dir, "Record directory")->required();
  exp->add_option("--plot-dir", plot_dir, "Destination (default <out>/plots)");
  exp->add_option("--trajectory", trajectories, "variant:seed:evaluation of a vehicle record (repeatable)");

  auto* list = app.add_subcommand("list-variants", "Print the known variants and problems");

  std::size_t pilot_samples = 200;
  std::uint64_t pilot_seed = 2026;
  auto* pilot = app.add_subcommand("pilot", "Random pilot run on the vehicle problem; prints frozen config values");
  pilot->add_option("--config", config_file, "Vehicle config (JSON)")->check(CLI::ExistingFile);
  pilot->add_option("--samples", pilot_samples, "Number of random samples");
  pilot->add_option("--seed", pilot_seed, "Seed");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*list) {
      std::cout << "variants:";
      for (const auto& v : ctune::harness::variant_names()) std::cout << ' ' << v;
      std::cout << "\nproblems:";
      for (const auto& p : ctune::harness::problem_names()) std::cout << ' ' << p;
      std::cout << '\n';
      return 0;
    }

    if (*run) {
      ctune::harness::ExperimentConfig config;
      if (!config_file.empty()) config = ctune::harness::load_experiment_config(config_file);
      if (!problem.empty()) config.problem = problem;
      if (!variants.empty()) config.variants = variants;
      if (budget_steps >= 0) config.budget_steps = budget_steps;
      if (!seeds_text.empty()) config.seeds = parse_seeds(seeds_text);
      if (!out_dir.empty()) config.output_dir = out_dir;
      if (max_evals > 0) config.max_evaluations = max_evals;
      if (run->count("--workers")) config.workers = workers;
      const auto summary = ctune::harness::run_experiment(config);
      for (const auto& m : summary.messages) std::cerr << m << '\n';
      std::cout << fmt::format("completed {} skipped {} failed {}\n", summary.completed, summary.skipped,
                               summary.failed);
      return summary.ok() ? 0 : 1;
    }

    if (*cmp) {
      const auto records = ctune::harness::load_records(records_dir);
      const auto text = ctune::harness::format_report(ctune::harness::compare(records));
      const std::filesystem::path target =
          report_file.empty() ? std::filesystem::path(records_dir) / "report.tsv" : std::filesystem::path(report_file);
      std::ofstream(target) << text;
      std::cout << text;
      return 0;
    }

    if (*exp) {
      const auto records = ctune::harness::load_records(records_dir);
      const std::filesystem::path dir =
          plot_dir.empty() ? std::filesystem::path(records_dir) / "plots" : std::filesystem::path(plot_dir);
      if (records.size() >= 2) {
        ctune::harness::emit_plot_data(ctune::harness::compare(records), records, dir);
      } else {
        spdlog::warn("fewer than two variants; HV comparison series skipped");
        std::filesystem::create_directories(dir);
      }
      for (const auto& spec : trajectories) {
        const auto a = spec.find(':');
        const auto b = spec.rfind(':');
        if (a == std::string::npos || a == b) throw ctune::UsageError("trajectory must be variant:seed:evaluation");
        const auto variant = spec.substr(0, a);
        const auto seed = std::stoull(spec.substr(a + 1, b - a - 1));
        const auto index = std::stoull(spec.substr(b + 1));
        const auto it = records.find(variant);
        if (it == records.end()) throw ctune::UsageError("no records for " + variant);
        const auto rec = std::find_if(it->second.begin(), it->second.end(), [&](const auto& r) { return r.seed == seed; });
        if (rec == it->second.end()) throw ctune::UsageError("no record for seed " + std::to_string(seed));
        const auto file = dir / fmt::format("trajectory_{}_seed_{}_eval_{}.tsv", variant, seed, index);
        const auto rows = ctune::harness::export_trajectory(*rec, index, file);
        std::cout << fmt::format("{} ({} rows)\n", file.string(), rows);
      }
      return 0;
    }

    if (*pilot) {
      const auto vc = config_file.empty() ? ctune::vehicle::VehicleConfig{} : ctune::vehicle::load_vehicle_config(config_file);
      const auto summary = ctune::vehicle::run_pilot(vc, pilot_samples, pilot_seed);
      nlohmann::json j{{"reference_point", summary.reference_point},
                       {"mean_steps_per_eval", summary.mean_steps_per_eval},
                       {"successes", summary.successes},
                       {"samples", pilot_samples}};
      std::cout << j.dump(2) << '\n';
      return 0;
    }
  } catch (const ctune::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
