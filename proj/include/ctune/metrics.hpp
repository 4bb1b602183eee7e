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

#ifndef CTUNE_METRICS_HPP
#define CTUNE_METRICS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "ctune/core.hpp"

namespace ctune {

// ---------------------------------------------------------------------------
// Hypervolume
// ---------------------------------------------------------------------------

/// Exact dominated volume between `points` and `ref` (minimization).
/// Points that do not strictly dominate `ref` contribute nothing. M must be 2, 3 or 4;
/// M = 2 uses the sweep, larger M the recursive slicing routine.
double hypervolume(std::span<const ObjectiveVector> points, std::span<const double> ref);

/// Two-objective sweep over points sorted by the first objective.
double hypervolume_sweep_2d(std::span<const ObjectiveVector> points, std::span<const double> ref);

/// Recursive slicing along the last objective; works for any M >= 1.
double hypervolume_slicing(std::span<const ObjectiveVector> points, std::span<const double> ref);

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Uniform sampling in the box spanned by the ideal point of the contributing set and `ref`.
MonteCarloEstimate hypervolume_mc(std::span<const ObjectiveVector> points, std::span<const double> ref,
                                  std::int64_t n_samples, Rng& rng);

// ---------------------------------------------------------------------------
// Budget accounting
// ---------------------------------------------------------------------------

/// ceil(overhead_seconds / seconds_per_step)
std::int64_t overhead_to_steps(double overhead_seconds, double seconds_per_step);

// ---------------------------------------------------------------------------
// HV curves
// ---------------------------------------------------------------------------

struct HvPoint {
  std::int64_t steps = 0;
  double hv = 0.0;
  bool operator==(const HvPoint&) const = default;
};

using HvCurve = std::vector<HvPoint>;

/// `count` log-spaced integer steps ending at `budget`, starting at `first` (deduplicated).
std::vector<std::int64_t> log_step_grid(std::int64_t first, std::int64_t budget, std::size_t count = 100);

/// Last observation carried forward; grid points before the first observation read 0.
std::vector<double> resample_locf(const HvCurve& curve, std::span<const std::int64_t> grid);

/// Pointwise median on `grid`.
HvCurve median_hv_curve(std::span<const HvCurve> runs, std::span<const std::int64_t> grid);
/// Pointwise median on the union of all observed step values.
HvCurve median_hv_curve(std::span<const HvCurve> runs);

double median(std::vector<double> values);

// ---------------------------------------------------------------------------
// One-sided Wilcoxon rank-sum test
// ---------------------------------------------------------------------------

struct StatTestResult {
  double p_value = 1.0;
  bool significant = false;
  /// True when the alternative is "first sample is stochastically smaller".
  bool first_smaller = true;
  double rank_sum = 0.0;
  bool exact = false;
};

/// H1: `a` is stochastically smaller than `b`. Midranks for ties; exact null distribution
/// for |a|+|b| <= 20 without ties, otherwise the normal approximation with tie and
/// continuity correction.
StatTestResult wilcoxon_one_sided(std::span<const double> a, std::span<const double> b, double alpha = 0.05);

/// Midranks (1-based) of the pooled sample.
std::vector<double> midranks(std::span<const double> pooled);

double normal_cdf(double z);

}  // namespace ctune

#endif  // CTUNE_METRICS_HPP
