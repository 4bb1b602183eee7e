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

#include "ctune/baselines.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <thread>

namespace ctune {

namespace {

std::size_t chunk_size(std::size_t workers) {
  return std::max<std::size_t>(1, workers != 0 ? workers : std::thread::hardware_concurrency());
}

}  // namespace

std::vector<std::vector<double>> grid_levels(const BoxBounds& bounds, const GridSpec& spec) {
  if (spec.levels_per_dim < 2) throw UsageError("GridSpec: levels_per_dim must be >= 2");
  std::vector<std::vector<double>> levels(bounds.dim());
  const double denom = static_cast<double>(spec.levels_per_dim - 1);
  for (std::size_t i = 0; i < bounds.dim(); ++i) {
    levels[i].resize(spec.levels_per_dim);
    for (std::size_t j = 0; j < spec.levels_per_dim; ++j) {
      levels[i][j] = bounds.lower(i) + bounds.range(i) * static_cast<double>(j) / denom;
    }
    levels[i].back() = bounds.upper(i);
  }
  return levels;
}

std::optional<std::size_t> grid_size(std::size_t dim, const GridSpec& spec) {
  std::size_t total = 1;
  for (std::size_t i = 0; i < dim; ++i) {
    if (total > std::numeric_limits<std::size_t>::max() / spec.levels_per_dim) return std::nullopt;
    total *= spec.levels_per_dim;
  }
  return total;
}

ParameterVector grid_point(const std::vector<std::vector<double>>& levels, std::size_t index) {
  ParameterVector theta(levels.size());
  for (std::size_t i = levels.size(); i-- > 0;) {
    const std::size_t base = levels[i].size();
    theta[i] = levels[i][index % base];
    index /= base;
  }
  return theta;
}

RunRecord run_random(const BenchmarkProblem& problem, const RunLimits& limits, std::uint64_t seed) {
  if (limits.budget_steps <= 0) throw UsageError("run_random: budget must be positive");
  Rng rng(seed);
  BudgetedEvaluator evaluator(problem, limits);
  const std::size_t chunk = chunk_size(limits.workers);
  std::vector<IterationTrace> traces;
  for (std::int64_t k = 0; !evaluator.exhausted(); ++k) {
    Stopwatch watch;
    std::vector<ParameterVector> batch(chunk);
    for (auto& t : batch) t = problem.bounds.sample_uniform(rng);
    const double overhead = watch.seconds();
    const auto committed = evaluator.evaluate_within_budget(batch);
    traces.push_back(evaluator.close_iteration(k, committed, overhead));
  }
  return evaluator.finish("Rand", seed, std::move(traces), {});
}

RunRecord run_grid(const BenchmarkProblem& problem, const GridSpec& spec, const RunLimits& limits) {
  if (limits.budget_steps <= 0) throw UsageError("run_grid: budget must be positive");
  const auto levels = grid_levels(problem.bounds, spec);
  const auto total = grid_size(problem.dim(), spec);
  if (!total) throw UsageError("run_grid: grid too large");
  BudgetedEvaluator evaluator(problem, limits);
  std::vector<std::string> notes;
  const std::size_t chunk = chunk_size(limits.workers);
  std::vector<IterationTrace> traces;
  std::size_t next = 0;
  for (std::int64_t k = 0; next < *total && !evaluator.exhausted(); ++k) {
    Stopwatch watch;
    std::vector<ParameterVector> batch;
    for (; batch.size() < chunk && next < *total; ++next) batch.push_back(grid_point(levels, next));
    const double overhead = watch.seconds();
    const auto committed = evaluator.evaluate_within_budget(batch);
    traces.push_back(evaluator.close_iteration(k, committed, overhead));
  }
  if (evaluator.num_evaluations() < *total) {
    notes.push_back("grid truncated by budget after " + std::to_string(evaluator.num_evaluations()) + " of " +
                    std::to_string(*total) + " points");
  }
  return evaluator.finish("Grid", 0, std::move(traces), std::move(notes));
}

}  // namespace ctune
