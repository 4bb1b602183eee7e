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

#ifndef CTUNE_BASELINES_HPP
#define CTUNE_BASELINES_HPP

#include <cstdint>
#include <vector>

#include "ctune/core.hpp"
#include "ctune/evaluator.hpp"
#include "ctune/problem.hpp"
#include "ctune/run_record.hpp"

namespace ctune {

struct GridSpec {
  std::size_t levels_per_dim = 6;
};

/// Equally spaced levels per dimension, endpoints included.
std::vector<std::vector<double>> grid_levels(const BoxBounds& bounds, const GridSpec& spec);

/// Number of grid points, or nullopt on overflow.
std::optional<std::size_t> grid_size(std::size_t dim, const GridSpec& spec);

/// The `index`-th grid point in lexicographic order (first dimension varies slowest).
ParameterVector grid_point(const std::vector<std::vector<double>>& levels, std::size_t index);

/// Uniform random search until the budget is spent.
RunRecord run_random(const BenchmarkProblem& problem, const RunLimits& limits, std::uint64_t seed);

/// Full-factorial grid search in lexicographic order, truncated at the budget.
RunRecord run_grid(const BenchmarkProblem& problem, const GridSpec& spec, const RunLimits& limits);

}  // namespace ctune

#endif  // CTUNE_BASELINES_HPP
