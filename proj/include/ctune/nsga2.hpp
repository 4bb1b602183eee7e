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

#ifndef CTUNE_NSGA2_HPP
#define CTUNE_NSGA2_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ctune/core.hpp"
#include "ctune/evaluator.hpp"
#include "ctune/problem.hpp"
#include "ctune/run_record.hpp"

namespace ctune::nsga2 {

struct GaConfig {
  std::size_t n_pop = 100;
  std::size_t n_gen = 50;
  /// Mutation standard deviation as a fraction of each gene's range.
  double mutation_scale = 0.1;
  /// Per-gene mutation probability; defaults to 1/N.
  std::optional<double> mutation_prob;
};

/// An individual whose cost is +inf in every objective when it crashed (or was never evaluated).
struct Individual {
  ParameterVector theta;
  ObjectiveVector cost;
  bool crash_ok = false;
};

struct RankedPopulation {
  std::vector<Individual> individuals;
  std::vector<std::size_t> rank;
  std::vector<double> crowding;

  std::size_t size() const { return individuals.size(); }
};

/// child = a + lambda (b - a), lambda ~ U[0, 1]
ParameterVector crossover_interpolate(std::span<const double> parent_a, std::span<const double> parent_b, Rng& rng);
ParameterVector crossover_interpolate_at(std::span<const double> parent_a, std::span<const double> parent_b, double lambda);

/// Adds N(0, (scale * range_i)^2) to each gene with probability `per_gene_prob`, then clips.
ParameterVector mutate_gaussian(std::span<const double> theta, const BoxBounds& bounds, double scale,
                                double per_gene_prob, Rng& rng);

/// Domination rank per point (0 = non-dominated). +inf entries are allowed.
std::vector<std::size_t> nondominated_sort(std::span<const ObjectiveVector> costs);

/// Crowding distance of the members of one rank; extremes get +inf.
std::vector<double> crowding_distance(std::span<const ObjectiveVector> rank_members);

/// Ranks and crowding for a whole pool.
RankedPopulation rank_population(std::vector<Individual> pool);

/// Sorts by (rank, -crowding) and keeps the first `n_pop`.
RankedPopulation truncate(const RankedPopulation& ranked, std::size_t n_pop);

/// Binary-tournament parent selection, interpolation crossover and Gaussian mutation.
std::vector<ParameterVector> make_offspring(const RankedPopulation& parents, const BoxBounds& bounds,
                                            const GaConfig& config, std::size_t count, Rng& rng);

/// Gives every crashed survivor fresh uniform random parameters (cost stays +inf).
std::size_t replace_crashed(RankedPopulation& population, const BoxBounds& bounds, Rng& rng);

Individual to_individual(const Evaluation& e, std::size_t num_objectives);

using BatchObjective = std::function<std::vector<ObjectiveVector>(std::span<const ParameterVector>)>;

/// Full NSGA-II on a cheap deterministic function; returns the final ranked population.
RankedPopulation minimize(const BoxBounds& bounds, std::size_t num_objectives, const BatchObjective& objective,
                          const GaConfig& config, Rng& rng);

/// NSGA-II against a benchmark problem under a step budget.
RunRecord run_nsga2(const BenchmarkProblem& problem, const GaConfig& config, const RunLimits& limits, std::uint64_t seed);

}  // namespace ctune::nsga2

#endif  // CTUNE_NSGA2_HPP
