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

#include "ctune/run_record.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace ctune {

using nlohmann::json;

json to_json(const Evaluation& e) {
  json j;
  j["theta"] = e.theta;
  j["l"] = e.crash_ok ? 1 : 0;
  j["J"] = e.objectives ? json(*e.objectives) : json(nullptr);
  j["steps"] = e.sim_steps;
  j["wall_time"] = e.wall_time;
  return j;
}

Evaluation evaluation_from_json(const json& j) {
  Evaluation e;
  e.theta = j.at("theta").get<ParameterVector>();
  e.crash_ok = j.at("l").get<int>() == 1;
  if (!j.at("J").is_null()) e.objectives = j.at("J").get<ObjectiveVector>();
  e.sim_steps = j.at("steps").get<std::int64_t>();
  e.wall_time = j.at("wall_time").get<double>();
  if (e.crash_ok != e.objectives.has_value()) {
    throw std::runtime_error("evaluation record: objectives must be present iff l = 1");
  }
  return e;
}

namespace {

json trace_to_json(const IterationTrace& t) {
  return json{{"k", t.iteration},
              {"batch_size", t.batch_size},
              {"overhead_seconds", t.overhead_seconds},
              {"overhead_steps", t.overhead_steps},
              {"mean_eval_seconds", t.mean_eval_seconds},
              {"gamma", t.gamma},
              {"evaluations_after", t.evaluations_after},
              {"steps_after", t.steps_after},
              {"front", t.front_indices}};
}

IterationTrace trace_from_json(const json& j) {
  IterationTrace t;
  t.iteration = j.at("k").get<std::int64_t>();
  t.batch_size = j.at("batch_size").get<std::int64_t>();
  t.overhead_seconds = j.at("overhead_seconds").get<double>();
  t.overhead_steps = j.at("overhead_steps").get<std::int64_t>();
  t.mean_eval_seconds = j.at("mean_eval_seconds").get<double>();
  t.gamma = j.at("gamma").get<double>();
  t.evaluations_after = j.at("evaluations_after").get<std::int64_t>();
  t.steps_after = j.at("steps_after").get<std::int64_t>();
  t.front_indices = j.at("front").get<std::vector<std::size_t>>();
  return t;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return in;
}

}  // namespace

void save_run_record(const RunRecord& record, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "evaluations.jsonl");
    for (const auto& e : record.evaluations) out << to_json(e).dump() << '\n';
  }
  {
    auto out = open_out(dir / "iterations.jsonl");
    for (const auto& t : record.iterations) out << trace_to_json(t).dump() << '\n';
  }
  {
    auto out = open_out(dir / "hv_curve.tsv");
    out << "steps\thv\n";
    for (const auto& p : record.hv_curve) out << fmt::format("{}\t{}\n", p.steps, p.hv);
  }
  // Metadata last: its presence marks the record as fully written.
  json meta{{"config", record.config},
            {"problem", record.problem},
            {"variant", record.variant},
            {"seed", record.seed},
            {"budget_steps", record.budget_steps},
            {"total_overhead_seconds", record.total_overhead_seconds},
            {"total_overhead_steps", record.total_overhead_steps},
            {"total_eval_steps", record.total_eval_steps},
            {"total_steps", record.total_steps},
            {"num_evaluations", record.evaluations.size()},
            {"complete", record.complete},
            {"error", record.error},
            {"notes", record.notes}};
  auto out = open_out(dir / "meta.json");
  out << meta.dump(2) << '\n';
}

RunRecord load_run_record(const std::filesystem::path& dir) {
  RunRecord r;
  json meta;
  open_in(dir / "meta.json") >> meta;
  r.config = meta.at("config");
  r.problem = meta.at("problem").get<std::string>();
  r.variant = meta.at("variant").get<std::string>();
  r.seed = meta.at("seed").get<std::uint64_t>();
  r.budget_steps = meta.at("budget_steps").get<std::int64_t>();
  r.total_overhead_seconds = meta.at("total_overhead_seconds").get<double>();
  r.total_overhead_steps = meta.at("total_overhead_steps").get<std::int64_t>();
  r.total_eval_steps = meta.at("total_eval_steps").get<std::int64_t>();
  r.total_steps = meta.at("total_steps").get<std::int64_t>();
  r.complete = meta.at("complete").get<bool>();
  r.error = meta.at("error").get<std::string>();
  r.notes = meta.at("notes").get<std::vector<std::string>>();

  std::string line;
  {
    auto in = open_in(dir / "evaluations.jsonl");
    while (std::getline(in, line)) {
      if (!line.empty()) r.evaluations.push_back(evaluation_from_json(json::parse(line)));
    }
  }
  {
    auto in = open_in(dir / "iterations.jsonl");
    while (std::getline(in, line)) {
      if (!line.empty()) r.iterations.push_back(trace_from_json(json::parse(line)));
    }
  }
  {
    auto in = open_in(dir / "hv_curve.tsv");
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream row(line);
      std::string steps;
      std::string hv;
      std::getline(row, steps, '\t');
      std::getline(row, hv);
      r.hv_curve.push_back({std::stoll(steps), std::stod(hv)});
    }
  }
  if (meta.at("num_evaluations").get<std::size_t>() != r.evaluations.size()) {
    throw std::runtime_error("run record in " + dir.string() + " is truncated");
  }
  return r;
}

}  // namespace ctune
