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

#ifndef CTUNE_SYNTHETIC_HPP
#define CTUNE_SYNTHETIC_HPP

#include <span>
#include <variant>
#include <vector>

#include "ctune/core.hpp"
#include "ctune/problem.hpp"

namespace ctune {

inline constexpr std::int64_t kNominalStepsPerEval = 8400;
inline constexpr double kNominalSecondsPerEval = 20.0;

/// ZDT1 on unit-cube inputs.
ObjectiveVector zdt1(std::span<const double> x);
/// Three-objective DTLZ2 on unit-cube inputs.
ObjectiveVector dtlz2(std::span<const double> x, std::size_t num_objectives = 3);

/// Points of the analytic ZDT1 front, f2 = 1 - sqrt(f1), f1 evenly spaced in [0, 1].
std::vector<ObjectiveVector> zdt1_front(std::size_t count);

/// Synthetic problems map `bounds` affinely onto the unit cube; reference point is the nadir times 1.1.
BenchmarkProblem make_zdt1(std::size_t dim = 5);
BenchmarkProblem make_dtlz2(std::size_t dim = 5);

struct BoxRegion {
  std::vector<double> lower;
  std::vector<double> upper;
};

struct BallRegion {
  std::vector<double> center;
  double radius = 0.0;
};

/// Crash region in the problem's own parameter coordinates (closed set).
using CrashRegion = std::variant<BoxRegion, BallRegion>;

bool region_contains(const CrashRegion& region, std::span<const double> theta);

/// Evaluations inside the region crash; outside they match the base problem.
BenchmarkProblem with_crash_region(BenchmarkProblem base, CrashRegion region, std::string name);

/// The crash-wrapped variants used in experiments.
BenchmarkProblem make_zdt1_crash(std::size_t dim = 5);
BenchmarkProblem make_dtlz2_crash(std::size_t dim = 5);

}  // namespace ctune

#endif  // CTUNE_SYNTHETIC_HPP
