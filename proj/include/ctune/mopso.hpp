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

#ifndef CTUNE_MOPSO_HPP
#define CTUNE_MOPSO_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ctune/core.hpp"
#include "ctune/evaluator.hpp"
#include "ctune/problem.hpp"
#include "ctune/run_record.hpp"

namespace ctune::mopso {

struct PsoConfig {
  std::size_t n_pop = 100;
  std::size_t n_rep = 250;
  std::size_t n_gen = 50;
  double inertia = 0.4;
  double cognitive = 2.0;
  double social = 2.0;
  std::size_t grid_divisions = 7;
  /// Grid bounds are widened by this fraction of the objective range on each side.
  double grid_inflation = 0.1;
  /// Mutation probability at generation 0; decays linearly to 0 at n_gen.
  double mutation_rate = 0.5;
};

struct ArchiveEntry {
  ParameterVector theta;
  ObjectiveVector objectives;
};

/// Bounded archive of mutually non-dominated feasible points with an adaptive hypercube grid.
class Repository {
public:
  Repository(std::size_t capacity, std::size_t divisions, double inflation);

  /// Inserts if not dominated by (or equal to) a member; returns whether it was added.
  bool insert(const ArchiveEntry& entry, Rng& rng);

  /// Roulette over occupied cubes (weight 10 / occupancy), then a uniform member of the cube.
  const ArchiveEntry& select_leader(Rng& rng) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<ArchiveEntry>& entries() const { return entries_; }
  std::size_t cube_of(std::size_t member) const { return cubes_[member]; }
  std::size_t num_grid_rebuilds() const { return rebuilds_; }

private:
  bool outside_grid(const ObjectiveVector& f) const;
  void rebuild_grid();
  std::size_t cube_index(const ObjectiveVector& f) const;
  void truncate(Rng& rng);

  std::size_t capacity_;
  std::size_t divisions_;
  double inflation_;
  std::vector<ArchiveEntry> entries_;
  std::vector<std::size_t> cubes_;
  std::vector<double> grid_lo_;
  std::vector<double> grid_hi_;
  std::size_t rebuilds_ = 0;
};

/// Personal-best comparison under a binary crash signal. Returns true when the candidate
/// should replace the incumbent.
bool replaces_personal_best(const Evaluation& candidate, const Evaluation& incumbent, Rng& rng);

/// Per-generation observer for tests: generation index and repository after its update.
using GenerationObserver = std::function<void(std::size_t, const Repository&)>;

RunRecord run_mopso(const BenchmarkProblem& problem, const PsoConfig& config, const RunLimits& limits,
                    std::uint64_t seed, const GenerationObserver& observer = {});

}  // namespace ctune::mopso

#endif  // CTUNE_MOPSO_HPP
