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

#include "ctune/mopso.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <spdlog/spdlog.h>

namespace ctune::mopso {

Repository::Repository(std::size_t capacity, std::size_t divisions, double inflation)
    : capacity_(capacity), divisions_(divisions), inflation_(inflation) {
  if (capacity_ < 1 || divisions_ < 1) throw UsageError("Repository: capacity and divisions must be >= 1");
}

bool Repository::outside_grid(const ObjectiveVector& f) const {
  if (grid_lo_.empty()) return true;
  for (std::size_t m = 0; m < f.size(); ++m) {
    if (f[m] < grid_lo_[m] || f[m] > grid_hi_[m]) return true;
  }
  return false;
}

void Repository::rebuild_grid() {
  const std::size_t m = entries_.front().objectives.size();
  grid_lo_.assign(m, 0.0);
  grid_hi_.assign(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    double lo = entries_.front().objectives[k];
    double hi = lo;
    for (const auto& e : entries_) {
      lo = std::min(lo, e.objectives[k]);
      hi = std::max(hi, e.objectives[k]);
    }
    const double pad = std::max(hi - lo, 1e-12) * inflation_;
    grid_lo_[k] = lo - pad;
    grid_hi_[k] = hi + pad;
  }
  cubes_.clear();
  for (const auto& e : entries_) cubes_.push_back(cube_index(e.objectives));
  ++rebuilds_;
}

std::size_t Repository::cube_index(const ObjectiveVector& f) const {
  std::size_t index = 0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double width = (grid_hi_[k] - grid_lo_[k]) / static_cast<double>(divisions_);
    auto cell = static_cast<std::int64_t>(std::floor((f[k] - grid_lo_[k]) / width));
    cell = std::clamp<std::int64_t>(cell, 0, static_cast<std::int64_t>(divisions_) - 1);
    index = index * divisions_ + static_cast<std::size_t>(cell);
  }
  return index;
}

bool Repository::insert(const ArchiveEntry& entry, Rng& rng) {
  for (const auto& e : entries_) {
    if (dominates(e.objectives, entry.objectives) || e.objectives == entry.objectives) return false;
  }
  std::vector<ArchiveEntry> kept;
  std::vector<std::size_t> kept_cubes;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!dominates(entry.objectives, entries_[i].objectives)) {
      kept.push_back(std::move(entries_[i]));
      kept_cubes.push_back(cubes_[i]);
    }
  }
  entries_ = std::move(kept);
  cubes_ = std::move(kept_cubes);
  entries_.push_back(entry);
  if (outside_grid(entry.objectives)) {
    rebuild_grid();
  } else {
    cubes_.push_back(cube_index(entry.objectives));
  }
  if (entries_.size() > capacity_) truncate(rng);
  return true;
}

void Repository::truncate(Rng& rng) {
  while (entries_.size() > capacity_) {
    std::map<std::size_t, std::vector<std::size_t>> occupants;
    for (std::size_t i = 0; i < entries_.size(); ++i) occupants[cubes_[i]].push_back(i);
    const std::vector<std::size_t>* crowded = nullptr;
    for (const auto& [cube, members] : occupants) {
      if (!crowded || members.size() > crowded->size()) crowded = &members;
    }
    std::uniform_int_distribution<std::size_t> pick(0, crowded->size() - 1);
    const std::size_t victim = (*crowded)[pick(rng)];
    entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(victim));
    cubes_.erase(cubes_.begin() + static_cast<std::ptrdiff_t>(victim));
  }
}

const ArchiveEntry& Repository::select_leader(Rng& rng) const {
  if (entries_.empty()) throw UsageError("select_leader: empty repository");
  std::map<std::size_t, std::vector<std::size_t>> occupants;
  for (std::size_t i = 0; i < entries_.size(); ++i) occupants[cubes_[i]].push_back(i);
  std::vector<double> weights;
  std::vector<const std::vector<std::size_t>*> cells;
  for (const auto& [cube, members] : occupants) {
    weights.push_back(10.0 / static_cast<double>(members.size()));
    cells.push_back(&members);
  }
  std::discrete_distribution<std::size_t> roulette(weights.begin(), weights.end());
  const auto& members = *cells[roulette(rng)];
  std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
  return entries_[members[pick(rng)]];
}

bool replaces_personal_best(const Evaluation& candidate, const Evaluation& incumbent, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  if (candidate.crash_ok && incumbent.crash_ok) {
    if (dominates(*candidate.objectives, *incumbent.objectives)) return true;
    if (dominates(*incumbent.objectives, *candidate.objectives)) return false;
    return coin(rng);
  }
  if (candidate.crash_ok != incumbent.crash_ok) return candidate.crash_ok;
  return coin(rng);
}

namespace {

void validate(const PsoConfig& c) {
  if (c.n_pop < 1 || c.n_rep < 1 || c.n_gen < 1 || c.grid_divisions < 1) {
    throw UsageError("PsoConfig: counts must be >= 1");
  }
  if (c.mutation_rate < 0.0 || c.mutation_rate > 1.0) throw UsageError("PsoConfig: mutation_rate must be in [0, 1]");
}

}  // namespace

RunRecord run_mopso(const BenchmarkProblem& problem, const PsoConfig& config, const RunLimits& limits,
                    std::uint64_t seed, const GenerationObserver& observer) {
  validate(config);
  if (limits.budget_steps <= 0) throw UsageError("run_mopso: budget must be positive");
  Rng rng(seed);
  BudgetedEvaluator evaluator(problem, limits);
  Repository repository(config.n_rep, config.grid_divisions, config.grid_inflation);
  std::vector<IterationTrace> traces;
  std::vector<std::string> notes;
  const auto& bounds = problem.bounds;
  const std::size_t n = bounds.dim();
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Stopwatch watch;
  std::vector<ParameterVector> position(config.n_pop);
  std::vector<std::vector<double>> velocity(config.n_pop, std::vector<double>(n, 0.0));
  for (auto& x : position) x = bounds.sample_uniform(rng);
  double overhead = watch.seconds();

  auto current = evaluator.evaluate(position);
  watch.reset();
  std::vector<Evaluation> best = current;
  for (const auto& e : current) {
    if (e.crash_ok) repository.insert({e.theta, *e.objectives}, rng);
  }
  overhead += watch.seconds();
  traces.push_back(evaluator.close_iteration(0, current.size(), overhead));
  if (observer) observer(0, repository);

  bool warned_empty = false;
  for (std::size_t gen = 1; gen <= config.n_gen && !evaluator.exhausted(); ++gen) {
    watch.reset();
    const double mutation_prob =
        config.mutation_rate * (1.0 - static_cast<double>(gen - 1) / static_cast<double>(config.n_gen));
    if (repository.empty() && !warned_empty) {
      spdlog::info("mopso: repository empty at generation {}, leaders drawn from the population", gen);
      notes.push_back("repository empty at generation " + std::to_string(gen) + "; leaders drawn from population");
      warned_empty = true;
    }
    std::uniform_int_distribution<std::size_t> pick_particle(0, config.n_pop - 1);
    for (std::size_t i = 0; i < config.n_pop; ++i) {
      const ParameterVector leader =
          repository.empty() ? position[pick_particle(rng)] : repository.select_leader(rng).theta;
      auto& x = position[i];
      auto& v = velocity[i];
      for (std::size_t d = 0; d < n; ++d) {
        const double r1 = unit(rng);
        const double r2 = unit(rng);
        v[d] = config.inertia * v[d] + config.cognitive * r1 * (best[i].theta[d] - x[d]) +
               config.social * r2 * (leader[d] - x[d]);
        x[d] += v[d];
        if (x[d] < bounds.lower(d) || x[d] > bounds.upper(d)) {
          x[d] = std::clamp(x[d], bounds.lower(d), bounds.upper(d));
          v[d] = 0.0;
        }
      }
      if (unit(rng) < mutation_prob) {
        std::uniform_int_distribution<std::size_t> pick_dim(0, n - 1);
        const std::size_t d = pick_dim(rng);
        const double reach = bounds.range(d) * mutation_prob;
        const double lo = std::max(x[d] - reach, bounds.lower(d));
        const double hi = std::min(x[d] + reach, bounds.upper(d));
        x[d] = lo + (hi - lo) * unit(rng);
      }
    }
    overhead = watch.seconds();

    current = evaluator.evaluate(position);

    watch.reset();
    for (std::size_t i = 0; i < current.size(); ++i) {
      const auto& e = current[i];
      if (e.crash_ok) repository.insert({e.theta, *e.objectives}, rng);
      if (replaces_personal_best(e, best[i], rng)) best[i] = e;
    }
    overhead += watch.seconds();
    traces.push_back(evaluator.close_iteration(static_cast<std::int64_t>(gen), current.size(), overhead));
    if (observer) observer(gen, repository);
  }
  return evaluator.finish("MOPSO", seed, std::move(traces), std::move(notes));
}

}  // namespace ctune::mopso
