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

#include "ctune/core.hpp"

#include <algorithm>
#include <cmath>

namespace ctune {

BoxBounds::BoxBounds(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.empty() || lower_.size() != upper_.size()) {
    throw UsageError("BoxBounds: lower/upper must be non-empty and of equal length");
  }
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (!(lower_[i] < upper_[i]) || !std::isfinite(lower_[i]) || !std::isfinite(upper_[i])) {
      throw UsageError("BoxBounds: require finite lower[i] < upper[i]");
    }
  }
}

BoxBounds BoxBounds::uniform(std::size_t dim, double lo, double hi) {
  return BoxBounds(std::vector<double>(dim, lo), std::vector<double>(dim, hi));
}

bool BoxBounds::contains(std::span<const double> theta) const {
  if (theta.size() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (!(theta[i] >= lower_[i] && theta[i] <= upper_[i])) return false;
  }
  return true;
}

ParameterVector BoxBounds::clip(std::span<const double> theta) const {
  if (theta.size() != dim()) throw UsageError("BoxBounds::clip: dimension mismatch");
  ParameterVector out(theta.begin(), theta.end());
  for (std::size_t i = 0; i < dim(); ++i) out[i] = std::clamp(out[i], lower_[i], upper_[i]);
  return out;
}

ParameterVector BoxBounds::sample_uniform(Rng& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ParameterVector out(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    out[i] = std::min(upper_[i], lower_[i] + u(rng) * range(i));
  }
  return out;
}

std::vector<double> BoxBounds::to_unit(std::span<const double> theta) const {
  std::vector<double> out(dim());
  for (std::size_t i = 0; i < dim(); ++i) out[i] = (theta[i] - lower_[i]) / range(i);
  return out;
}

ParameterVector BoxBounds::from_unit(std::span<const double> unit) const {
  ParameterVector out(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    out[i] = std::clamp(lower_[i] + unit[i] * range(i), lower_[i], upper_[i]);
  }
  return out;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

Evaluation Evaluation::success(ParameterVector theta, ObjectiveVector objectives,
                               std::int64_t sim_steps, double wall_time) {
  if (objectives.empty() || !all_finite(objectives)) {
    throw UsageError("Evaluation: successful evaluations need finite objective values");
  }
  if (sim_steps < 0) throw UsageError("Evaluation: negative step count");
  return Evaluation{std::move(theta), true, std::move(objectives), sim_steps, wall_time};
}

Evaluation Evaluation::crash(ParameterVector theta, std::int64_t sim_steps, double wall_time) {
  if (sim_steps < 0) throw UsageError("Evaluation: negative step count");
  return Evaluation{std::move(theta), false, std::nullopt, sim_steps, wall_time};
}

Dataset::Dataset(std::vector<Evaluation> evaluations) : evaluations_(std::move(evaluations)) {
  const auto n = dim();
  const auto m = num_objectives();
  for (const auto& e : evaluations_) {
    if (e.theta.size() != *n) throw UsageError("Dataset: inconsistent parameter dimension");
    if (e.crash_ok != e.objectives.has_value()) {
      throw UsageError("Dataset: objectives must be present iff the evaluation succeeded");
    }
    if (e.objectives && e.objectives->size() != *m) {
      throw UsageError("Dataset: inconsistent objective count");
    }
  }
}

std::size_t Dataset::num_successes() const {
  return static_cast<std::size_t>(
      std::count_if(evaluations_.begin(), evaluations_.end(), [](const Evaluation& e) { return e.crash_ok; }));
}

std::optional<std::size_t> Dataset::dim() const {
  if (evaluations_.empty()) return std::nullopt;
  return evaluations_.front().theta.size();
}

std::optional<std::size_t> Dataset::num_objectives() const {
  for (const auto& e : evaluations_) {
    if (e.objectives) return e.objectives->size();
  }
  return std::nullopt;
}

Dataset augment(const Dataset& dataset, std::span<const Evaluation> added) {
  std::vector<Evaluation> all;
  all.reserve(dataset.size() + added.size());
  all.insert(all.end(), dataset.begin(), dataset.end());
  all.insert(all.end(), added.begin(), added.end());
  return Dataset(std::move(all));
}

bool dominates(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw UsageError("dominates: objective vectors differ in length");
  bool strictly_better = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strictly_better = true;
  }
  return strictly_better;
}

std::vector<std::size_t> pareto_filter(std::span<const ObjectiveVector> points) {
  std::vector<std::size_t> front;
  if (points.empty()) return front;
  const auto m = points.front().size();
  for (const auto& p : points) {
    if (p.size() != m) throw UsageError("pareto_filter: objective vectors differ in length");
  }

  // Lexicographic order means a dominator always precedes the point it dominates,
  // so each point only has to be checked against the front collected so far.
  std::vector<std::size_t> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
  for (auto idx : order) {
    const bool dominated = std::any_of(front.begin(), front.end(), [&](std::size_t f) {
      return dominates(points[f], points[idx]);
    });
    if (!dominated) front.push_back(idx);
  }
  std::sort(front.begin(), front.end());
  return front;
}

std::optional<ParetoFront> current_front(const Dataset& dataset) {
  std::vector<std::size_t> success_index;
  std::vector<ObjectiveVector> points;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].crash_ok) {
      success_index.push_back(i);
      points.push_back(*dataset[i].objectives);
    }
  }
  if (points.empty()) return std::nullopt;

  ParetoFront front;
  for (auto k : pareto_filter(points)) {
    front.member_indices.push_back(success_index[k]);
    front.objective_points.push_back(points[k]);
  }
  return front;
}

std::optional<ObjectiveVector> worst_successful(const Dataset& dataset) {
  std::optional<ObjectiveVector> worst;
  for (const auto& e : dataset) {
    if (!e.crash_ok) continue;
    if (!worst) {
      worst = *e.objectives;
    } else {
      for (std::size_t m = 0; m < worst->size(); ++m) (*worst)[m] = std::max((*worst)[m], (*e.objectives)[m]);
    }
  }
  return worst;
}

}  // namespace ctune
