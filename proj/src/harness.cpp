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

#include "ctune/harness.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ctune/metrics.hpp"
#include "ctune/synthetic.hpp"
#include "ctune/vehicle.hpp"

namespace ctune::harness {

using nlohmann::json;

const std::vector<std::string>& variant_names() {
  static const std::vector<std::string> names{"TSEMO-1-C", "TSEMO-A-C", "TSEMO-1-VDP", "TSEMO-A-VDP", "EIM-1-VDP",
                                              "NSGA-II",   "MOPSO",     "Rand",        "Grid"};
  return names;
}

const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names{"vehicle", "zdt1", "dtlz2", "zdt1-crash", "dtlz2-crash"};
  return names;
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

void read_fit(const json& j, gp::FitOptions& fit) {
  read(j, "restarts", fit.restarts);
  read(j, "max_iterations", fit.max_iterations);
  read(j, "max_fit_points", fit.max_fit_points);
  read(j, "noise_floor", fit.noise_floor);
}

}  // namespace

OptimizerSettings optimizer_settings_from_json(const json& j) {
  OptimizerSettings s;
  if (j.contains("mobo")) {
    const auto& m = j.at("mobo");
    auto& c = s.mobo;
    read(m, "n_init", c.n_init);
    read(m, "p_overhead_desired", c.p_overhead_desired);
    read(m, "gamma_init", c.gamma_init);
    read(m, "gamma_step", c.gamma_step);
    read(m, "max_gamma_escalations", c.max_gamma_escalations);
    read(m, "batch_schedule", c.batch_schedule);
    if (m.contains("penalty") && !m.at("penalty").is_null()) c.penalty = m.at("penalty").get<ObjectiveVector>();
    if (m.contains("fit")) read_fit(m.at("fit"), c.fit);
    if (m.contains("tsemo")) {
      const auto& t = m.at("tsemo");
      read(t, "n_pop", c.tsemo.ga.n_pop);
      read(t, "n_gen", c.tsemo.ga.n_gen);
      read(t, "features", c.tsemo.features);
    }
    if (m.contains("eim")) {
      const auto& e = m.at("eim");
      read(e, "probes", c.eim.probes);
      read(e, "local_starts", c.eim.local_starts);
      read(e, "local_iterations", c.eim.local_iterations);
      read(e, "initial_step", c.eim.initial_step);
    }
  }
  if (j.contains("nsga2")) {
    const auto& g = j.at("nsga2");
    read(g, "n_pop", s.ga.n_pop);
    read(g, "n_gen", s.ga.n_gen);
    read(g, "mutation_scale", s.ga.mutation_scale);
    if (g.contains("mutation_prob") && !g.at("mutation_prob").is_null()) {
      s.ga.mutation_prob = g.at("mutation_prob").get<double>();
    }
  }
  if (j.contains("mopso")) {
    const auto& p = j.at("mopso");
    read(p, "n_pop", s.pso.n_pop);
    read(p, "n_rep", s.pso.n_rep);
    read(p, "n_gen", s.pso.n_gen);
    read(p, "inertia", s.pso.inertia);
    read(p, "cognitive", s.pso.cognitive);
    read(p, "social", s.pso.social);
    read(p, "grid_divisions", s.pso.grid_divisions);
    read(p, "grid_inflation", s.pso.grid_inflation);
    read(p, "mutation_rate", s.pso.mutation_rate);
  }
  if (j.contains("grid")) read(j.at("grid"), "levels_per_dim", s.grid.levels_per_dim);
  return s;
}

json to_json(const OptimizerSettings& s) {
  const auto& c = s.mobo;
  return json{
      {"mobo",
       {{"n_init", c.n_init},
        {"p_overhead_desired", c.p_overhead_desired},
        {"gamma_init", c.gamma_init},
        {"gamma_step", c.gamma_step},
        {"max_gamma_escalations", c.max_gamma_escalations},
        {"batch_schedule", c.batch_schedule},
        {"penalty", c.penalty ? json(*c.penalty) : json(nullptr)},
        {"fit",
         {{"restarts", c.fit.restarts},
          {"max_iterations", c.fit.max_iterations},
          {"max_fit_points", c.fit.max_fit_points},
          {"noise_floor", c.fit.noise_floor}}},
        {"tsemo", {{"n_pop", c.tsemo.ga.n_pop}, {"n_gen", c.tsemo.ga.n_gen}, {"features", c.tsemo.features}}},
        {"eim",
         {{"probes", c.eim.probes},
          {"local_starts", c.eim.local_starts},
          {"local_iterations", c.eim.local_iterations},
          {"initial_step", c.eim.initial_step}}}}},
      {"nsga2",
       {{"n_pop", s.ga.n_pop},
        {"n_gen", s.ga.n_gen},
        {"mutation_scale", s.ga.mutation_scale},
        {"mutation_prob", s.ga.mutation_prob ? json(*s.ga.mutation_prob) : json(nullptr)}}},
      {"mopso",
       {{"n_pop", s.pso.n_pop},
        {"n_rep", s.pso.n_rep},
        {"n_gen", s.pso.n_gen},
        {"inertia", s.pso.inertia},
        {"cognitive", s.pso.cognitive},
        {"social", s.pso.social},
        {"grid_divisions", s.pso.grid_divisions},
        {"grid_inflation", s.pso.grid_inflation},
        {"mutation_rate", s.pso.mutation_rate}}},
      {"grid", {{"levels_per_dim", s.grid.levels_per_dim}}}};
}

namespace {

vehicle::VehicleConfig vehicle_config(const json& params) {
  json merged = json::object();
  if (params.contains("config_file")) {
    std::ifstream in(params.at("config_file").get<std::string>());
    if (!in) throw UsageError("cannot open vehicle config " + params.at("config_file").get<std::string>());
    merged = json::parse(in);
  }
  json rest = params;
  rest.erase("config_file");
  merged.merge_patch(rest);
  return vehicle::vehicle_config_from_json(merged);
}

}  // namespace

BenchmarkProblem make_problem(const std::string& name, const json& params) {
  if (name == "vehicle") return vehicle::make_vehicle_problem(vehicle_config(params));
  const auto dim = params.value("dim", std::size_t{5});
  if (name == "zdt1") return make_zdt1(dim);
  if (name == "dtlz2") return make_dtlz2(dim);
  if (name == "zdt1-crash") return make_zdt1_crash(dim);
  if (name == "dtlz2-crash") return make_dtlz2_crash(dim);
  throw UsageError("unknown problem '" + name + "'");
}

RunRecord run_variant(const BenchmarkProblem& problem, const std::string& variant, const OptimizerSettings& settings,
                      const RunLimits& limits, std::uint64_t seed, const mobo::IterationObserver& observer) {
  auto tsemo = [&](bool adaptive, mobo::CrashHandling crash) {
    mobo::MoboConfig c = settings.mobo;
    c.acquisition = mobo::Acquisition::tsemo;
    c.adaptive_batch = adaptive;
    c.constant_batch = 1;
    c.crash_handling = crash;
    if (!adaptive) c.batch_schedule.clear();
    return mobo::run_mobo(problem, c, limits, seed, variant, observer);
  };
  using mobo::CrashHandling;
  if (variant == "TSEMO-1-C") return tsemo(false, CrashHandling::constant_penalty);
  if (variant == "TSEMO-A-C") return tsemo(true, CrashHandling::constant_penalty);
  if (variant == "TSEMO-1-VDP") return tsemo(false, CrashHandling::virtual_points);
  if (variant == "TSEMO-A-VDP") return tsemo(true, CrashHandling::virtual_points);
  if (variant == "EIM-1-VDP") {
    mobo::MoboConfig c = settings.mobo;
    c.acquisition = mobo::Acquisition::eim;
    c.crash_handling = CrashHandling::virtual_points;
    return mobo::run_mobo(problem, c, limits, seed, variant, observer);
  }
  if (variant == "NSGA-II") return nsga2::run_nsga2(problem, settings.ga, limits, seed);
  if (variant == "MOPSO") {
    auto r = mopso::run_mopso(problem, settings.pso, limits, seed);
    r.variant = variant;
    return r;
  }
  if (variant == "Rand") return run_random(problem, limits, seed);
  if (variant == "Grid") return run_grid(problem, settings.grid, limits);
  throw UsageError("unknown variant '" + variant + "'");
}

void ExperimentConfig::validate() const {
  if (std::find(problem_names().begin(), problem_names().end(), problem) == problem_names().end()) {
    throw UsageError("unknown problem '" + problem + "'");
  }
  if (variants.empty()) throw UsageError("no variant selected");
  for (const auto& v : variants) {
    if (std::find(variant_names().begin(), variant_names().end(), v) == variant_names().end()) {
      throw UsageError("unknown variant '" + v + "'");
    }
  }
  if (budget_steps < 0) throw UsageError("budget_steps must be non-negative");
  if (seeds.empty()) throw UsageError("no seeds given");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw UsageError("duplicate seeds");
  }
}

json to_json(const ExperimentConfig& c) {
  return json{{"problem", c.problem},
              {"problem_params", c.problem_params},
              {"variants", c.variants},
              {"budget_steps", c.budget_steps},
              {"seeds", c.seeds},
              {"output_dir", c.output_dir.string()},
              {"max_evaluations", c.max_evaluations ? json(*c.max_evaluations) : json(nullptr)},
              {"workers", c.workers},
              {"optimizer", to_json(c.settings)}};
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  read(j, "problem", c.problem);
  if (j.contains("problem_params")) c.problem_params = j.at("problem_params");
  if (j.contains("variant")) c.variants = {j.at("variant").get<std::string>()};
  read(j, "variants", c.variants);
  read(j, "budget_steps", c.budget_steps);
  read(j, "seeds", c.seeds);
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("max_evaluations") && !j.at("max_evaluations").is_null()) {
    c.max_evaluations = j.at("max_evaluations").get<std::size_t>();
  }
  read(j, "workers", c.workers);
  if (j.contains("optimizer")) c.settings = optimizer_settings_from_json(j.at("optimizer"));
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  return experiment_config_from_json(json::parse(in));
}

std::filesystem::path record_dir(const std::filesystem::path& root, const std::string& variant, std::uint64_t seed) {
  return root / variant / fmt::format("seed_{}", seed);
}

namespace {

bool has_complete_record(const std::filesystem::path& dir) {
  std::ifstream in(dir / "meta.json");
  if (!in) return false;
  try {
    return json::parse(in).value("complete", false);
  } catch (const json::exception&) {
    return false;
  }
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentSummary summary;
  const auto problem = make_problem(config.problem, config.problem_params);
  const RunLimits limits{config.budget_steps, config.max_evaluations, config.workers};
  json snapshot = to_json(config);

  for (const auto& variant : config.variants) {
    for (const auto seed : config.seeds) {
      const auto dir = record_dir(config.output_dir, variant, seed);
      if (has_complete_record(dir)) {
        ++summary.skipped;
        continue;
      }
      json run_config = snapshot;
      run_config["variant"] = variant;
      run_config["seed"] = seed;
      RunRecord record;
      if (config.budget_steps == 0) {
        record.problem = problem.name;
        record.variant = variant;
        record.seed = seed;
        record.notes.push_back("budget is zero; no evaluation performed");
        summary.messages.push_back(fmt::format("{} seed {}: budget is zero, empty record written", variant, seed));
      } else {
        try {
          record = run_variant(problem, variant, config.settings, limits, seed);
        } catch (const std::exception& e) {
          record = RunRecord{};
          record.problem = problem.name;
          record.variant = variant;
          record.seed = seed;
          record.budget_steps = config.budget_steps;
          record.complete = false;
          record.error = e.what();
          ++summary.failed;
          summary.messages.push_back(fmt::format("{} seed {} failed: {}", variant, seed, e.what()));
          spdlog::error("{} seed {} failed: {}", variant, seed, e.what());
        }
      }
      record.config = run_config;
      save_run_record(record, dir);
      if (record.complete) ++summary.completed;
    }
  }
  return summary;
}

std::map<std::string, std::vector<RunRecord>> load_records(const std::filesystem::path& root) {
  std::map<std::string, std::vector<RunRecord>> out;
  if (!std::filesystem::is_directory(root)) throw UsageError("no record directory at " + root.string());
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().filename() == "meta.json") dirs.push_back(entry.path().parent_path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    auto r = load_run_record(d);
    out[r.variant].push_back(std::move(r));
  }
  for (auto& [_, runs] : out) {
    std::sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) { return a.seed < b.seed; });
  }
  return out;
}

ComparisonReport compare(const std::map<std::string, std::vector<RunRecord>>& records, double alpha) {
  if (records.size() < 2) throw UsageError("compare needs at least two variants");
  const std::size_t n_seeds = records.begin()->second.size();
  std::int64_t budget = 0;
  std::int64_t first = 0;
  for (const auto& [variant, runs] : records) {
    if (runs.size() != n_seeds) throw UsageError("compare: variants have different seed counts");
    if (runs.empty()) throw UsageError("compare: variant " + variant + " has no records");
    for (const auto& r : runs) {
      budget = std::max(budget, r.budget_steps);
      if (!r.hv_curve.empty() && (first == 0 || r.hv_curve.front().steps < first)) first = r.hv_curve.front().steps;
    }
  }

  ComparisonReport report;
  report.grid = log_step_grid(first == 0 ? 1 : first, budget);
  const std::size_t g = report.grid.size();
  std::vector<std::vector<std::vector<double>>> samples;  // [variant][grid][seed]
  for (const auto& [variant, runs] : records) {
    report.variants.push_back(variant);
    std::vector<std::vector<double>> per_point(g);
    for (const auto& r : runs) {
      const auto values = resample_locf(r.hv_curve, report.grid);
      for (std::size_t i = 0; i < g; ++i) per_point[i].push_back(values[i]);
    }
    std::vector<double> medians(g);
    for (std::size_t i = 0; i < g; ++i) medians[i] = median(per_point[i]);
    report.median_hv.push_back(std::move(medians));
    samples.push_back(std::move(per_point));
  }

  const std::size_t v = report.variants.size();
  report.p_value.assign(v, std::vector<double>(g, 1.0));
  report.significantly_worse.assign(v, std::vector<bool>(g, false));
  report.best.assign(g, 0);
  for (std::size_t i = 0; i < g; ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < v; ++k) {
      if (report.median_hv[k][i] > report.median_hv[best][i]) best = k;
    }
    report.best[i] = best;
    for (std::size_t k = 0; k < v; ++k) {
      if (k == best) continue;
      const auto test = wilcoxon_one_sided(samples[k][i], samples[best][i], alpha);
      report.p_value[k][i] = test.p_value;
      report.significantly_worse[k][i] = test.significant;
    }
  }
  return report;
}

std::string format_report(const ComparisonReport& report) {
  std::ostringstream out;
  out << "steps\tbest";
  for (const auto& v : report.variants) out << '\t' << v << "_median\t" << v << "_p\t" << v << "_worse";
  out << '\n';
  for (std::size_t i = 0; i < report.grid.size(); ++i) {
    out << report.grid[i] << '\t' << report.variants[report.best[i]];
    for (std::size_t k = 0; k < report.variants.size(); ++k) {
      out << fmt::format("\t{:.12g}\t{:.6g}\t{}", report.median_hv[k][i], report.p_value[k][i],
                         report.significantly_worse[k][i] ? 1 : 0);
    }
    out << '\n';
  }
  return out.str();
}

std::vector<std::pair<std::int64_t, double>> relative_overhead_series(const RunRecord& record) {
  std::vector<std::pair<std::int64_t, double>> out;
  std::int64_t overhead = 0;
  for (const auto& t : record.iterations) {
    overhead += t.overhead_steps;
    const std::int64_t eval_steps = t.steps_after - overhead;
    out.emplace_back(t.steps_after, eval_steps > 0 ? static_cast<double>(overhead) / static_cast<double>(eval_steps)
                                                   : 0.0);
  }
  return out;
}

std::vector<std::size_t> final_front(const RunRecord& record) {
  const auto front = current_front(record.dataset());
  return front ? front->member_indices : std::vector<std::size_t>{};
}

namespace {

std::ofstream open_file(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void emit_plot_data(const ComparisonReport& report, const std::map<std::string, std::vector<RunRecord>>& records,
                    const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_file(dir / "hv_series.tsv");
    out << "variant\tsteps\tmedian_hv\tis_best\tsignificantly_worse\tp_value\n";
    for (std::size_t k = 0; k < report.variants.size(); ++k) {
      for (std::size_t i = 0; i < report.grid.size(); ++i) {
        out << fmt::format("{}\t{}\t{:.12g}\t{}\t{}\t{:.6g}\n", report.variants[k], report.grid[i],
                           report.median_hv[k][i], report.best[i] == k ? 1 : 0,
                           report.significantly_worse[k][i] ? 1 : 0, report.p_value[k][i]);
      }
    }
  }
  {
    auto out = open_file(dir / "overhead.tsv");
    out << "variant\tseed\tsteps\trelative_overhead\n";
    for (const auto& [variant, runs] : records) {
      for (const auto& r : runs) {
        for (const auto& [steps, ratio] : relative_overhead_series(r)) {
          out << fmt::format("{}\t{}\t{}\t{:.6g}\n", variant, r.seed, steps, ratio);
        }
      }
    }
  }
  {
    auto out = open_file(dir / "fronts.tsv");
    out << "variant\tseed\tevaluation\ttheta\tobjectives\n";
    for (const auto& [variant, runs] : records) {
      for (const auto& r : runs) {
        for (auto i : final_front(r)) {
          const auto& e = r.evaluations[i];
          out << fmt::format("{}\t{}\t{}\t{:.17g}\t{:.17g}\n", variant, r.seed, i, fmt::join(e.theta, ","),
                             fmt::join(*e.objectives, ","));
        }
      }
    }
  }
}

std::size_t export_trajectory(const RunRecord& record, std::size_t index, const std::filesystem::path& file) {
  if (record.problem != "vehicle") throw UsageError("trajectory export needs a vehicle record");
  if (index >= record.evaluations.size()) throw UsageError("evaluation index out of range");
  const json params = record.config.contains("problem_params") ? record.config.at("problem_params") : json::object();
  const auto result = vehicle::simulate_vehicle(record.evaluations[index].theta, vehicle_config(params));
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  auto out = open_file(file);
  vehicle::write_trajectory(result.log, out);
  return result.log.size();
}

}  // namespace ctune::harness
