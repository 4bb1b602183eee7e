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

#include "ctune/synthetic.hpp"

#include <cmath>
#include <numbers>

namespace ctune {

ObjectiveVector zdt1(std::span<const double> x) {
  if (x.size() < 2) throw UsageError("zdt1: needs at least 2 variables");
  double tail = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) tail += x[i];
  const double g = 1.0 + 9.0 * tail / static_cast<double>(x.size() - 1);
  const double f1 = x[0];
  return {f1, g * (1.0 - std::sqrt(f1 / g))};
}

ObjectiveVector dtlz2(std::span<const double> x, std::size_t num_objectives) {
  const std::size_t m = num_objectives;
  if (m < 2 || x.size() < m) throw UsageError("dtlz2: needs at least M variables");
  double g = 0.0;
  for (std::size_t i = m - 1; i < x.size(); ++i) g += (x[i] - 0.5) * (x[i] - 0.5);
  constexpr double half_pi = std::numbers::pi / 2.0;
  ObjectiveVector f(m, 1.0 + g);
  for (std::size_t k = 0; k < m; ++k) {
    // f_k uses cos of the first (m - 1 - k) angles and sin of the next one
    const std::size_t n_cos = m - 1 - k;
    for (std::size_t j = 0; j < n_cos; ++j) f[k] *= std::cos(x[j] * half_pi);
    if (k > 0) f[k] *= std::sin(x[n_cos] * half_pi);
  }
  return f;
}

std::vector<ObjectiveVector> zdt1_front(std::size_t count) {
  std::vector<ObjectiveVector> front;
  front.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double f1 = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    front.push_back({f1, 1.0 - std::sqrt(f1)});
  }
  return front;
}

namespace {

BenchmarkProblem make_synthetic(std::string name, std::size_t dim, std::size_t m,
                                ObjectiveVector (*fn)(std::span<const double>, std::size_t)) {
  BenchmarkProblem p(std::move(name), BoxBounds::uniform(dim, 0.0, 1.0));
  p.num_objectives = m;
  p.reference_point.assign(m, 1.1);
  p.mean_steps_per_eval = kNominalStepsPerEval;
  p.nominal_eval_seconds = kNominalSecondsPerEval;
  const BoxBounds bounds = p.bounds;
  p.evaluate = [bounds, m, fn](const ParameterVector& theta) {
    const auto unit = bounds.to_unit(theta);
    return Evaluation::success(theta, fn(unit, m), kNominalStepsPerEval, 0.0);
  };
  return p;
}

ObjectiveVector zdt1_adapter(std::span<const double> x, std::size_t) { return zdt1(x); }

}  // namespace

BenchmarkProblem make_zdt1(std::size_t dim) { return make_synthetic("zdt1", dim, 2, zdt1_adapter); }

BenchmarkProblem make_dtlz2(std::size_t dim) { return make_synthetic("dtlz2", dim, 3, dtlz2); }

bool region_contains(const CrashRegion& region, std::span<const double> theta) {
  if (const auto* box = std::get_if<BoxRegion>(&region)) {
    if (box->lower.size() != theta.size() || box->upper.size() != theta.size()) {
      throw UsageError("crash region: dimension mismatch");
    }
    for (std::size_t i = 0; i < theta.size(); ++i) {
      if (theta[i] < box->lower[i] || theta[i] > box->upper[i]) return false;
    }
    return true;
  }
  const auto& ball = std::get<BallRegion>(region);
  if (ball.center.size() != theta.size()) throw UsageError("crash region: dimension mismatch");
  double d2 = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) d2 += (theta[i] - ball.center[i]) * (theta[i] - ball.center[i]);
  return d2 <= ball.radius * ball.radius;
}

BenchmarkProblem with_crash_region(BenchmarkProblem base, CrashRegion region, std::string name) {
  const std::size_t n = base.dim();
  if (const auto* box = std::get_if<BoxRegion>(&region)) {
    if (box->lower.size() != n || box->upper.size() != n) throw UsageError("crash region: dimension mismatch");
  } else if (std::get<BallRegion>(region).center.size() != n || !(std::get<BallRegion>(region).radius > 0.0)) {
    throw UsageError("crash region: bad ball");
  }
  auto inner = std::move(base.evaluate);
  const std::int64_t steps = base.mean_steps_per_eval;
  base.evaluate = [inner, region, steps](const ParameterVector& theta) {
    if (region_contains(region, theta)) return Evaluation::crash(theta, steps, 0.0);
    return inner(theta);
  };
  base.name = std::move(name);
  return base;
}

BenchmarkProblem make_zdt1_crash(std::size_t dim) {
  // cuts the middle of the front (x1 in [0.2, 0.7] with x2 = 0)
  BoxRegion box{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
  box.lower[0] = 0.2;
  box.upper[0] = 0.7;
  box.upper[1] = 0.6;
  return with_crash_region(make_zdt1(dim), box, "zdt1-crash");
}

BenchmarkProblem make_dtlz2_crash(std::size_t dim) {
  return with_crash_region(make_dtlz2(dim), BallRegion{std::vector<double>(dim, 0.5), 0.5}, "dtlz2-crash");
}

}  // namespace ctune
