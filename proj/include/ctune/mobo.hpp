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

#ifndef CTUNE_MOBO_HPP
#define CTUNE_MOBO_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctune/core.hpp"
#include "ctune/evaluator.hpp"
#include "ctune/gpr.hpp"
#include "ctune/nsga2.hpp"
#include "ctune/problem.hpp"
#include "ctune/run_record.hpp"

namespace ctune::mobo {

enum class Acquisition { tsemo, eim };
enum class CrashHandling { virtual_points, constant_penalty };

struct TsemoOptions {
  nsga2::GaConfig ga{.n_pop = 100, .n_gen = 100, .mutation_scale = 0.1, .mutation_prob = std::nullopt};
  std::size_t features = 500;
};

struct EimOptions {
  std::size_t probes = 2000;
  std::size_t local_starts = 5;
  std::size_t local_iterations = 200;
  /// Initial pattern-search step as a fraction of each range.
  double initial_step = 0.1;
};

struct MoboConfig {
  std::size_t n_init = 5;
  Acquisition acquisition = Acquisition::tsemo;
  bool adaptive_batch = true;
  /// Batch size when not adaptive.
  std::size_t constant_batch = 1;
  double p_overhead_desired = 0.2;
  CrashHandling crash_handling = CrashHandling::virtual_points;
  /// Explicit per-objective penalty; by default the worst successful value observed so far.
  std::optional<ObjectiveVector> penalty;
  double gamma_init = 3.0;
  double gamma_step = 0.5;
  std::size_t max_gamma_escalations = 100;
  gp::FitOptions fit;
  TsemoOptions tsemo;
  EimOptions eim;
  /// Replays these batch sizes (iteration k uses entry k-1) instead of computing them.
  std::vector<std::size_t> batch_schedule;

  void validate() const;
};

/// S_k = max(1, ceil(t_overhead_prev / (p_des * t_sim_prev)))
std::size_t calc_batch_size(double t_overhead_prev, double t_sim_prev, double p_des);

/// Pessimistic prediction mu + gamma * sigma, bounded by the worst successful value.
double virtual_value(double mu, double sigma, double gamma, double j_max);

struct VirtualPoints {
  std::vector<ObjectiveVector> values;  // one per crashed evaluation
  double gamma = 0.0;
  std::size_t escalations = 0;
  /// True when the escalation limit was hit and every value was set to the worst successful one.
  bool capped = false;
};

/// Raises gamma until no virtual point dominates a front member. `predictions[c][m]` is the
/// success-only model's prediction of objective m at crashed point c.
VirtualPoints resolve_virtual_points(std::span<const std::vector<gp::Prediction>> predictions,
                                     std::span<const ObjectiveVector> front, std::span<const double> j_max,
                                     double gamma_init, double gamma_step, std::size_t max_escalations = 100);

struct VdpResult {
  VirtualPoints points;
  /// Per-objective models trained on the successful evaluations only.
  std::vector<gp::GPModel> success_models;
};

/// Fits success-only models and resolves a virtual point for every crashed evaluation.
VdpResult compute_vdp(const Dataset& dataset, const ParetoFront& front, const BoxBounds& bounds,
                      double gamma_init, double gamma_step, const gp::FitOptions& fit, Rng& rng,
                      std::size_t max_escalations = 100);

/// Componentwise worst successful values times 1.1 after shifting into the positive orthant.
ObjectiveVector internal_reference_point(std::span<const ObjectiveVector> successes);

/// Hypervolume gained by adding `candidate` to `points`.
double hv_improvement(std::span<const double> candidate, std::span<const ObjectiveVector> points,
                      std::span<const double> ref);

/// Greedy selection of `count` candidates, each maximizing the HV improvement over `front` plus
/// the already selected ones. Returns candidate indices in selection order.
std::vector<std::size_t> greedy_hv_selection(std::span<const ObjectiveVector> candidates,
                                             std::span<const ObjectiveVector> front, std::span<const double> ref,
                                             std::size_t count);

struct Proposal {
  std::vector<ParameterVector> batch;
  bool fallback = false;
};

Proposal tsemo_propose(std::span<const gp::GPModel> models, std::span<const ObjectiveVector> front,
                       std::size_t batch_size, std::span<const double> ref, const TsemoOptions& options, Rng& rng);

/// Expected improvement below `best` for a Gaussian N(mu, sigma^2); max(best - mu, 0) when sigma = 0.
double expected_improvement(double best, double mu, double sigma);

/// min over front points of the Euclidean norm of the per-objective expected improvements.
double eim_value(std::span<const gp::Prediction> prediction, std::span<const ObjectiveVector> front);

ParameterVector eim_propose(std::span<const gp::GPModel> models, std::span<const ObjectiveVector> front,
                            const EimOptions& options, Rng& rng);

/// State handed to an observer after the proposal step of every model-based iteration.
struct IterationSnapshot {
  std::int64_t iteration = 0;
  std::vector<ObjectiveVector> front;
  std::vector<ObjectiveVector> virtual_points;
  double gamma = 0.0;
  std::vector<ParameterVector> batch;
};

using IterationObserver = std::function<void(const IterationSnapshot&)>;

RunRecord run_mobo(const BenchmarkProblem& problem, const MoboConfig& config, const RunLimits& limits,
                   std::uint64_t seed, std::string variant_name = "MOBO", const IterationObserver& observer = {});

}  // namespace ctune::mobo

#endif  // CTUNE_MOBO_HPP
