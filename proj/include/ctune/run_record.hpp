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

#ifndef CTUNE_RUN_RECORD_HPP
#define CTUNE_RUN_RECORD_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctune/core.hpp"
#include "ctune/metrics.hpp"

namespace ctune {

/// One optimizer iteration (a BO iteration or an evolutionary generation).
struct IterationTrace {
  std::int64_t iteration = 0;
  std::int64_t batch_size = 1;
  double overhead_seconds = 0.0;
  std::int64_t overhead_steps = 0;
  /// Mean charged seconds per evaluation of this iteration's batch.
  double mean_eval_seconds = 0.0;
  /// VDP safety factor finally used; 0 when not applicable.
  double gamma = 0.0;
  std::int64_t evaluations_after = 0;
  std::int64_t steps_after = 0;
  std::vector<std::size_t> front_indices;

  bool operator==(const IterationTrace&) const = default;
};

struct RunRecord {
  nlohmann::json config;
  std::string problem;
  std::string variant;
  std::uint64_t seed = 0;
  std::int64_t budget_steps = 0;

  std::vector<Evaluation> evaluations;
  std::vector<IterationTrace> iterations;
  HvCurve hv_curve;

  double total_overhead_seconds = 0.0;
  std::int64_t total_overhead_steps = 0;
  std::int64_t total_eval_steps = 0;
  std::int64_t total_steps = 0;

  bool complete = true;
  std::string error;
  /// Noteworthy events raised during the run (fallbacks, caps).
  std::vector<std::string> notes;

  Dataset dataset() const { return Dataset(evaluations); }
  bool operator==(const RunRecord&) const = default;
};

nlohmann::json to_json(const Evaluation& e);
Evaluation evaluation_from_json(const nlohmann::json& j);

/// Writes meta.json, evaluations.jsonl, iterations.jsonl and hv_curve.tsv into `dir`.
void save_run_record(const RunRecord& record, const std::filesystem::path& dir);
RunRecord load_run_record(const std::filesystem::path& dir);

}  // namespace ctune

#endif  // CTUNE_RUN_RECORD_HPP
