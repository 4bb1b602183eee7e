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

#ifndef CTUNE_PROBLEM_HPP
#define CTUNE_PROBLEM_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "ctune/core.hpp"

namespace ctune {

/// A black-box evaluation target. `evaluate` must be deterministic in theta and reentrant.
struct BenchmarkProblem {
  BenchmarkProblem(std::string problem_name, BoxBounds box) : name(std::move(problem_name)), bounds(std::move(box)) {}

  std::string name;
  BoxBounds bounds;
  std::size_t num_objectives = 2;
  /// Frozen HV reference point used for reporting.
  ObjectiveVector reference_point;
  std::int64_t mean_steps_per_eval = 8400;
  /// Simulated cost of one evaluation. When set, budgets and batch sizing use this instead
  /// of measured wall time (synthetic problems evaluate in microseconds).
  std::optional<double> nominal_eval_seconds;
  std::function<Evaluation(const ParameterVector&)> evaluate;

  std::size_t dim() const { return bounds.dim(); }
};

}  // namespace ctune

#endif  // CTUNE_PROBLEM_HPP
