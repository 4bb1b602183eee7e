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

#ifndef CTUNE_CORE_HPP
#define CTUNE_CORE_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctune {

/// Raised when a caller violates an operation's preconditions.
class UsageError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

using Rng = std::mt19937_64;

using ParameterVector = std::vector<double>;
using ObjectiveVector = std::vector<double>;

/// Axis-aligned box [lower, upper] of the decision space.
class BoxBounds {
public:
  BoxBounds(std::vector<double> lower, std::vector<double> upper);

  /// Same interval [lo, hi] in each of `dim` dimensions.
  static BoxBounds uniform(std::size_t dim, double lo, double hi);

  std::size_t dim() const { return lower_.size(); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  double lower(std::size_t i) const { return lower_[i]; }
  double upper(std::size_t i) const { return upper_[i]; }
  double range(std::size_t i) const { return upper_[i] - lower_[i]; }

  bool contains(std::span<const double> theta) const;
  ParameterVector clip(std::span<const double> theta) const;
  ParameterVector sample_uniform(Rng& rng) const;

  /// Affine maps between the box and the unit cube.
  std::vector<double> to_unit(std::span<const double> theta) const;
  ParameterVector from_unit(std::span<const double> unit) const;

  bool operator==(const BoxBounds&) const = default;

private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

/// Result of one black-box query. Objectives are present iff the query did not crash.
struct Evaluation {
  ParameterVector theta;
  bool crash_ok = false;
  std::optional<ObjectiveVector> objectives;
  std::int64_t sim_steps = 0;
  double wall_time = 0.0;

  static Evaluation success(ParameterVector theta, ObjectiveVector objectives,
                            std::int64_t sim_steps, double wall_time);
  static Evaluation crash(ParameterVector theta, std::int64_t sim_steps, double wall_time);

  bool operator==(const Evaluation&) const = default;
};

/// Append-only ordered evaluation history.
class Dataset {
public:
  Dataset() = default;
  explicit Dataset(std::vector<Evaluation> evaluations);

  std::size_t size() const { return evaluations_.size(); }
  bool empty() const { return evaluations_.empty(); }
  const Evaluation& operator[](std::size_t i) const { return evaluations_[i]; }
  const std::vector<Evaluation>& evaluations() const { return evaluations_; }
  auto begin() const { return evaluations_.begin(); }
  auto end() const { return evaluations_.end(); }

  std::size_t num_successes() const;
  std::size_t num_crashes() const { return size() - num_successes(); }

  /// Decision-space dimension, or nullopt for an empty dataset.
  std::optional<std::size_t> dim() const;
  /// Objective count, or nullopt when there is no successful evaluation.
  std::optional<std::size_t> num_objectives() const;

private:
  std::vector<Evaluation> evaluations_;
};

/// Ordered concatenation: old elements first, then `added` in order.
Dataset augment(const Dataset& dataset, std::span<const Evaluation> added);

struct ParetoFront {
  std::vector<std::size_t> member_indices;
  std::vector<ObjectiveVector> objective_points;

  std::size_t size() const { return member_indices.size(); }
  bool empty() const { return member_indices.empty(); }
};

/// Strict Pareto dominance for minimization.
bool dominates(std::span<const double> a, std::span<const double> b);

/// Indices of the non-dominated points. Duplicates of a front point are all kept.
std::vector<std::size_t> pareto_filter(std::span<const ObjectiveVector> points);

/// Front over the successful evaluations, or nullopt when none succeeded yet.
std::optional<ParetoFront> current_front(const Dataset& dataset);

/// Componentwise max over successful objective vectors (nullopt without successes).
std::optional<ObjectiveVector> worst_successful(const Dataset& dataset);

bool all_finite(std::span<const double> values);

}  // namespace ctune

#endif  // CTUNE_CORE_HPP
