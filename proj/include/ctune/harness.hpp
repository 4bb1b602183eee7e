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

#ifndef CTUNE_HARNESS_HPP
#define CTUNE_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctune/baselines.hpp"
#include "ctune/evaluator.hpp"
#include "ctune/mobo.hpp"
#include "ctune/mopso.hpp"
#include "ctune/nsga2.hpp"
#include "ctune/problem.hpp"
#include "ctune/run_record.hpp"

namespace ctune::harness {

const std::vector<std::string>& variant_names();
const std::vector<std::string>& problem_names();

/// Algorithm settings shared by all variants of one experiment.
struct OptimizerSettings {
  mobo::MoboConfig mobo;
  nsga2::GaConfig ga;
  mopso::PsoConfig pso;
  GridSpec grid;
};

/// Reads overrides on top of the defaults. Keys: "mobo", "nsga2", "mopso", "grid".
OptimizerSettings optimizer_settings_from_json(const nlohmann::json& j);
nlohmann::json to_json(const OptimizerSettings& s);

/// `params` may hold "dim" for the synthetic problems, or vehicle configuration fields
/// (optionally "config_file" naming a JSON file that is loaded first).
BenchmarkProblem make_problem(const std::string& name, const nlohmann::json& params = nlohmann::json::object());

/// Runs a single variant on a problem. Variant names are those of variant_names(). The observer
/// only sees the model-based variants.
RunRecord run_variant(const BenchmarkProblem& problem, const std::string& variant, const OptimizerSettings& settings,
                      const RunLimits& limits, std::uint64_t seed, const mobo::IterationObserver& observer = {});

struct ExperimentConfig {
  std::string problem = "zdt1";
  nlohmann::json problem_params = nlohmann::json::object();
  std::vector<std::string> variants;
  std::int64_t budget_steps = 0;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::filesystem::path output_dir = "out";
  std::optional<std::size_t> max_evaluations;
  std::size_t workers = 0;
  OptimizerSettings settings;

  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

std::filesystem::path record_dir(const std::filesystem::path& root, const std::string& variant, std::uint64_t seed);

struct ExperimentSummary {
  std::size_t completed = 0;
  /// Seeds whose complete record already existed.
  std::size_t skipped = 0;
  std::size_t failed = 0;
  std::vector<std::string> messages;

  bool ok() const { return failed == 0; }
};

/// One record per (variant, seed) under <output>/<variant>/seed_<s>/. Existing complete records are
/// kept; a seed that throws is persisted as an incomplete record and does not stop the others.
ExperimentSummary run_experiment(const ExperimentConfig& config);

/// All records found below `root`, grouped by variant name (sorted by seed).
std::map<std::string, std::vector<RunRecord>> load_records(const std::filesystem::path& root);

struct ComparisonReport {
  std::vector<std::int64_t> grid;
  std::vector<std::string> variants;
  /// [variant][grid point]
  std::vector<std::vector<double>> median_hv;
  std::vector<std::vector<double>> p_value;
  std::vector<std::vector<bool>> significantly_worse;
  /// Index of the variant with the highest median per grid point.
  std::vector<std::size_t> best;
};

/// Medians on a shared log grid with LOCF resampling and one-sided rank-sum tests against the best
/// variant at each grid point. Requires at least two variants with equal seed counts.
ComparisonReport compare(const std::map<std::string, std::vector<RunRecord>>& records, double alpha = 0.05);

/// Tab-separated table, one row per grid point.
std::string format_report(const ComparisonReport& report);

/// Cumulative overhead steps divided by cumulative evaluation steps after each iteration.
std::vector<std::pair<std::int64_t, double>> relative_overhead_series(const RunRecord& record);

/// Indices of the record's final non-dominated successful evaluations.
std::vector<std::size_t> final_front(const RunRecord& record);

/// Writes hv_series.tsv, overhead.tsv and fronts.tsv into `dir`.
void emit_plot_data(const ComparisonReport& report, const std::map<std::string, std::vector<RunRecord>>& records,
                    const std::filesystem::path& dir);

/// Re-simulates evaluation `index` of a vehicle record and writes its trajectory; returns the row count.
std::size_t export_trajectory(const RunRecord& record, std::size_t index, const std::filesystem::path& file);

}  // namespace ctune::harness

#endif  // CTUNE_HARNESS_HPP
