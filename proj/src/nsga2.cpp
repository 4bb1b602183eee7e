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

#include "ctune/nsga2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <spdlog/spdlog.h>

namespace ctune::nsga2 {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

ParameterVector crossover_interpolate_at(std::span<const double> parent_a, std::span<const double> parent_b,
                                         double lambda) {
  if (parent_a.size() != parent_b.size()) throw UsageError("crossover: parents differ in dimension");
  ParameterVector child(parent_a.size());
  for (std::size_t i = 0; i < child.size(); ++i) child[i] = parent_a[i] + lambda * (parent_b[i] - parent_a[i]);
  return child;
}

ParameterVector crossover_interpolate(std::span<const double> parent_a, std::span<const double> parent_b, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return crossover_interpolate_at(parent_a, parent_b, u(rng));
}

ParameterVector mutate_gaussian(std::span<const double> theta, const BoxBounds& bounds, double scale,
                                double per_gene_prob, Rng& rng) {
  if (!(scale > 0.0)) throw UsageError("mutate_gaussian: scale must be positive");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  ParameterVector out(theta.begin(), theta.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (u(rng) < per_gene_prob) out[i] += normal(rng) * scale * bounds.range(i);
  }
  return bounds.clip(out);
}

std::vector<std::size_t> nondominated_sort(std::span<const ObjectiveVector> costs) {
  const std::size_t n = costs.size();
  std::vector<std::size_t> rank(n, 0);
  std::vector<std::vector<std::size_t>> dominated_by_me(n);
  std::vector<std::size_t> domination_count(n, 0);
  std::vector<std::size_t> current;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      if (dominates(costs[p], costs[q])) {
        dominated_by_me[p].push_back(q);
        ++domination_count[q];
      } else if (dominates(costs[q], costs[p])) {
        dominated_by_me[q].push_back(p);
        ++domination_count[p];
      }
    }
  }
  for (std::size_t p = 0; p < n; ++p) {
    if (domination_count[p] == 0) current.push_back(p);
  }
  std::size_t level = 0;
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (auto p : current) {
      rank[p] = level;
      for (auto q : dominated_by_me[p]) {
        if (--domination_count[q] == 0) next.push_back(q);
      }
    }
    current = std::move(next);
    ++level;
  }
  return rank;
}

std::vector<double> crowding_distance(std::span<const ObjectiveVector> rank_members) {
  const std::size_t n = rank_members.size();
  std::vector<double> distance(n, 0.0);
  if (n == 0) return distance;
  if (n <= 2) return std::vector<double>(n, kInf);
  const std::size_t m = rank_members.front().size();
  std::vector<std::size_t> order(n);
  for (std::size_t obj = 0; obj < m; ++obj) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return rank_members[a][obj] < rank_members[b][obj]; });
    const double lo = rank_members[order.front()][obj];
    const double hi = rank_members[order.back()][obj];
    const double span = hi - lo;
    if (!std::isfinite(span) || span <= 0.0) continue;
    distance[order.front()] = kInf;
    distance[order.back()] = kInf;
    for (std::size_t k = 1; k + 1 < n; ++k) {
      distance[order[k]] += (rank_members[order[k + 1]][obj] - rank_members[order[k - 1]][obj]) / span;
    }
  }
  return distance;
}

RankedPopulation rank_population(std::vector<Individual> pool) {
  RankedPopulation out;
  std::vector<ObjectiveVector> costs;
  costs.reserve(pool.size());
  for (const auto& ind : pool) costs.push_back(ind.cost);
  out.rank = nondominated_sort(costs);
  out.crowding.assign(pool.size(), 0.0);
  const std::size_t levels = out.rank.empty() ? 0 : *std::max_element(out.rank.begin(), out.rank.end()) + 1;
  for (std::size_t level = 0; level < levels; ++level) {
    std::vector<std::size_t> members;
    std::vector<ObjectiveVector> points;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (out.rank[i] == level) {
        members.push_back(i);
        points.push_back(costs[i]);
      }
    }
    const auto d = crowding_distance(points);
    for (std::size_t k = 0; k < members.size(); ++k) out.crowding[members[k]] = d[k];
  }
  out.individuals = std::move(pool);
  return out;
}

RankedPopulation truncate(const RankedPopulation& ranked, std::size_t n_pop) {
  std::vector<std::size_t> order(ranked.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    if (ranked.rank[a] != ranked.rank[b]) return ranked.rank[a] < ranked.rank[b];
    return ranked.crowding[a] > ranked.crowding[b];
  });
  order.resize(std::min(n_pop, order.size()));
  RankedPopulation out;
  for (auto i : order) {
    out.individuals.push_back(ranked.individuals[i]);
    out.rank.push_back(ranked.rank[i]);
    out.crowding.push_back(ranked.crowding[i]);
  }
  return out;
}

std::vector<ParameterVector> make_offspring(const RankedPopulation& parents, const BoxBounds& bounds,
                                            const GaConfig& config, std::size_t count, Rng& rng) {
  if (parents.size() == 0) throw UsageError("make_offspring: empty parent population");
  std::uniform_int_distribution<std::size_t> pick(0, parents.size() - 1);
  auto tournament = [&]() {
    const auto a = pick(rng);
    const auto b = pick(rng);
    if (parents.rank[a] != parents.rank[b]) return parents.rank[a] < parents.rank[b] ? a : b;
    return parents.crowding[b] > parents.crowding[a] ? b : a;
  };
  const double prob = config.mutation_prob.value_or(1.0 / static_cast<double>(bounds.dim()));
  std::vector<ParameterVector> children;
  children.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    const auto& pa = parents.individuals[tournament()].theta;
    const auto& pb = parents.individuals[tournament()].theta;
    auto child = crossover_interpolate(pa, pb, rng);
    children.push_back(mutate_gaussian(child, bounds, config.mutation_scale, prob, rng));
  }
  return children;
}

std::size_t replace_crashed(RankedPopulation& population, const BoxBounds& bounds, Rng& rng) {
  std::size_t replaced = 0;
  for (auto& ind : population.individuals) {
    if (!ind.crash_ok) {
      ind.theta = bounds.sample_uniform(rng);
      ++replaced;
    }
  }
  return replaced;
}

Individual to_individual(const Evaluation& e, std::size_t num_objectives) {
  if (e.crash_ok) return {e.theta, *e.objectives, true};
  return {e.theta, ObjectiveVector(num_objectives, kInf), false};
}

namespace {

void validate(const GaConfig& config) {
  if (config.n_pop == 0 || config.n_pop % 2 != 0) throw UsageError("GaConfig: n_pop must be even and positive");
  if (config.n_gen < 1) throw UsageError("GaConfig: n_gen must be >= 1");
}

}  // namespace

RankedPopulation minimize(const BoxBounds& bounds, std::size_t num_objectives, const BatchObjective& objective,
                          const GaConfig& config, Rng& rng) {
  validate(config);
  auto evaluate = [&](const std::vector<ParameterVector>& thetas) {
    const auto values = objective(thetas);
    std::vector<Individual> out;
    out.reserve(thetas.size());
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      if (values[i].size() == num_objectives && all_finite(values[i])) {
        out.push_back({thetas[i], values[i], true});
      } else {
        out.push_back({thetas[i], ObjectiveVector(num_objectives, kInf), false});
      }
    }
    return out;
  };

  std::vector<ParameterVector> init(config.n_pop);
  for (auto& t : init) t = bounds.sample_uniform(rng);
  auto population = rank_population(evaluate(init));
  for (std::size_t gen = 0; gen < config.n_gen; ++gen) {
    auto children = evaluate(make_offspring(population, bounds, config, config.n_pop, rng));
    auto pool = population.individuals;
    pool.insert(pool.end(), children.begin(), children.end());
    population = truncate(rank_population(std::move(pool)), config.n_pop);
    if (replace_crashed(population, bounds, rng) > 0) population = rank_population(std::move(population.individuals));
  }
  return population;
}

RunRecord run_nsga2(const BenchmarkProblem& problem, const GaConfig& config, const RunLimits& limits,
                    std::uint64_t seed) {
  validate(config);
  if (limits.budget_steps <= 0) throw UsageError("run_nsga2: budget must be positive");
  Rng rng(seed);
  BudgetedEvaluator evaluator(problem, limits);
  std::vector<IterationTrace> traces;
  std::vector<std::string> notes;
  const std::size_t m = problem.num_objectives;

  Stopwatch watch;
  std::vector<ParameterVector> init(config.n_pop);
  for (auto& t : init) t = problem.bounds.sample_uniform(rng);
  double overhead = watch.seconds();

  auto results = evaluator.evaluate(init);
  watch.reset();
  std::vector<Individual> individuals;
  for (const auto& e : results) individuals.push_back(to_individual(e, m));
  auto population = rank_population(std::move(individuals));
  if (const auto replaced = replace_crashed(population, problem.bounds, rng); replaced > 0) {
    population = rank_population(std::move(population.individuals));
  }
  overhead += watch.seconds();
  traces.push_back(evaluator.close_iteration(0, results.size(), overhead));

  for (std::size_t gen = 1; gen <= config.n_gen && !evaluator.exhausted(); ++gen) {
    watch.reset();
    const auto children = make_offspring(population, problem.bounds, config, config.n_pop, rng);
    overhead = watch.seconds();

    results = evaluator.evaluate(children);

    watch.reset();
    auto pool = population.individuals;
    for (const auto& e : results) pool.push_back(to_individual(e, m));
    population = truncate(rank_population(std::move(pool)), config.n_pop);
    if (const auto replaced = replace_crashed(population, problem.bounds, rng); replaced > 0) {
      spdlog::debug("nsga2: generation {} replaced {} crashed survivors", gen, replaced);
      population = rank_population(std::move(population.individuals));
    }
    overhead += watch.seconds();
    traces.push_back(evaluator.close_iteration(static_cast<std::int64_t>(gen), results.size(), overhead));
  }
  return evaluator.finish("NSGA-II", seed, std::move(traces), std::move(notes));
}

}  // namespace ctune::nsga2
