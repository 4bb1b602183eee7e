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

#include "ctune/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace ctune {

namespace {

std::vector<ObjectiveVector> contributing(std::span<const ObjectiveVector> points, std::span<const double> ref) {
  std::vector<ObjectiveVector> out;
  for (const auto& p : points) {
    if (p.size() != ref.size()) throw UsageError("hypervolume: point/reference dimension mismatch");
    bool inside = true;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!(p[i] < ref[i])) {
        inside = false;
        break;
      }
    }
    if (inside) out.push_back(p);
  }
  return out;
}

double slice_recursive(std::vector<ObjectiveVector> pts, std::span<const double> ref, std::size_t dims) {
  if (pts.empty()) return 0.0;
  if (dims == 1) {
    double best = ref[0];
    for (const auto& p : pts) best = std::min(best, p[0]);
    return ref[0] - best;
  }
  const std::size_t last = dims - 1;
  std::sort(pts.begin(), pts.end(), [last](const auto& a, const auto& b) { return a[last] < b[last]; });

  double volume = 0.0;
  if (dims == 2) {
    // Each slab's 1-D measure is ref[0] minus the running minimum of the first objective.
    double best = ref[0];
    for (std::size_t i = 0; i < pts.size(); ++i) {
      best = std::min(best, pts[i][0]);
      const double upper = (i + 1 < pts.size()) ? pts[i + 1][1] : ref[1];
      if (upper > pts[i][1]) volume += (upper - pts[i][1]) * (ref[0] - best);
    }
    return volume;
  }
  std::vector<ObjectiveVector> active;
  active.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    active.push_back(pts[i]);
    const double upper = (i + 1 < pts.size()) ? pts[i + 1][last] : ref[last];
    const double depth = upper - pts[i][last];
    if (depth <= 0.0) continue;
    volume += depth * slice_recursive(active, ref, last);
  }
  return volume;
}

}  // namespace

double hypervolume_sweep_2d(std::span<const ObjectiveVector> points, std::span<const double> ref) {
  if (ref.size() != 2) throw UsageError("hypervolume_sweep_2d: needs two objectives");
  auto pts = contributing(points, ref);
  std::sort(pts.begin(), pts.end());
  double volume = 0.0;
  double floor = ref[1];
  for (const auto& p : pts) {
    if (p[1] < floor) {
      volume += (ref[0] - p[0]) * (floor - p[1]);
      floor = p[1];
    }
  }
  return volume;
}

double hypervolume_slicing(std::span<const ObjectiveVector> points, std::span<const double> ref) {
  if (ref.empty()) throw UsageError("hypervolume_slicing: empty reference point");
  auto pts = contributing(points, ref);
  // Dominated points never change the union; dropping them keeps the recursion small.
  std::vector<ObjectiveVector> front;
  for (auto idx : pareto_filter(pts)) front.push_back(pts[idx]);
  std::sort(front.begin(), front.end());
  front.erase(std::unique(front.begin(), front.end()), front.end());
  return slice_recursive(std::move(front), ref, ref.size());
}

double hypervolume(std::span<const ObjectiveVector> points, std::span<const double> ref) {
  switch (ref.size()) {
    case 2:
      return hypervolume_sweep_2d(points, ref);
    case 3:
    case 4:
      return hypervolume_slicing(points, ref);
    default:
      throw UsageError("hypervolume: supported objective counts are 2, 3 and 4");
  }
}

MonteCarloEstimate hypervolume_mc(std::span<const ObjectiveVector> points, std::span<const double> ref,
                                  std::int64_t n_samples, Rng& rng) {
  if (n_samples < 1) throw UsageError("hypervolume_mc: need at least one sample");
  const auto pts = contributing(points, ref);
  if (pts.empty()) return {};
  const std::size_t m = ref.size();
  std::vector<double> ideal(ref.begin(), ref.end());
  for (const auto& p : pts) {
    for (std::size_t i = 0; i < m; ++i) ideal[i] = std::min(ideal[i], p[i]);
  }
  double box = 1.0;
  for (std::size_t i = 0; i < m; ++i) box *= ref[i] - ideal[i];
  if (!(box > 0.0)) return {};

  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> z(m);
  std::int64_t hits = 0;
  for (std::int64_t s = 0; s < n_samples; ++s) {
    for (std::size_t i = 0; i < m; ++i) z[i] = ideal[i] + u(rng) * (ref[i] - ideal[i]);
    for (const auto& p : pts) {
      bool covered = true;
      for (std::size_t i = 0; i < m; ++i) {
        if (p[i] > z[i]) {
          covered = false;
          break;
        }
      }
      if (covered) {
        ++hits;
        break;
      }
    }
  }
  const double frac = static_cast<double>(hits) / static_cast<double>(n_samples);
  return {frac * box, box * std::sqrt(frac * (1.0 - frac) / static_cast<double>(n_samples))};
}

std::int64_t overhead_to_steps(double overhead_seconds, double seconds_per_step) {
  if (!(seconds_per_step > 0.0)) throw UsageError("overhead_to_steps: seconds_per_step must be positive");
  if (overhead_seconds <= 0.0) return 0;
  return static_cast<std::int64_t>(std::ceil(overhead_seconds / seconds_per_step));
}

std::vector<std::int64_t> log_step_grid(std::int64_t first, std::int64_t budget, std::size_t count) {
  std::vector<std::int64_t> grid;
  if (budget <= 0 || count == 0) return grid;
  first = std::clamp<std::int64_t>(first, 1, budget);
  if (count == 1 || first == budget) return {budget};
  const double lo = std::log(static_cast<double>(first));
  const double hi = std::log(static_cast<double>(budget));
  for (std::size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(count - 1);
    auto step = static_cast<std::int64_t>(std::llround(std::exp(lo + t * (hi - lo))));
    step = std::clamp(step, first, budget);
    if (grid.empty() || step > grid.back()) grid.push_back(step);
  }
  grid.back() = budget;
  return grid;
}

std::vector<double> resample_locf(const HvCurve& curve, std::span<const std::int64_t> grid) {
  std::vector<double> out(grid.size(), 0.0);
  std::size_t j = 0;
  double current = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    while (j < curve.size() && curve[j].steps <= grid[i]) current = curve[j++].hv;
    out[i] = current;
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw UsageError("median: empty sample");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return (n % 2 == 1) ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

HvCurve median_hv_curve(std::span<const HvCurve> runs, std::span<const std::int64_t> grid) {
  if (runs.empty()) throw UsageError("median_hv_curve: need at least one run");
  std::vector<std::vector<double>> sampled;
  sampled.reserve(runs.size());
  for (const auto& r : runs) sampled.push_back(resample_locf(r, grid));
  HvCurve out(grid.size());
  std::vector<double> column(runs.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t r = 0; r < runs.size(); ++r) column[r] = sampled[r][i];
    out[i] = {grid[i], median(column)};
  }
  return out;
}

HvCurve median_hv_curve(std::span<const HvCurve> runs) {
  std::set<std::int64_t> steps;
  for (const auto& r : runs) {
    for (const auto& p : r) steps.insert(p.steps);
  }
  const std::vector<std::int64_t> grid(steps.begin(), steps.end());
  return median_hv_curve(runs, grid);
}

std::vector<double> midranks(std::span<const double> pooled) {
  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return pooled[a] < pooled[b]; });
  std::vector<double> ranks(pooled.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

// P(W <= w) where W is the sum of `na` distinct ranks drawn from 1..n.
double exact_lower_tail(std::size_t na, std::size_t n, long long w) {
  const long long max_sum = static_cast<long long>(n * (n + 1) / 2);
  // counts[k][s]: number of k-subsets of the ranks seen so far with sum s.
  std::vector<std::vector<double>> counts(na + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
  counts[0][0] = 1.0;
  for (std::size_t r = 1; r <= n; ++r) {
    for (std::size_t k = std::min(na, r); k >= 1; --k) {
      for (long long s = max_sum; s >= static_cast<long long>(r); --s) {
        counts[k][static_cast<std::size_t>(s)] += counts[k - 1][static_cast<std::size_t>(s) - r];
      }
    }
  }
  double total = 0.0;
  double tail = 0.0;
  for (long long s = 0; s <= max_sum; ++s) {
    total += counts[na][static_cast<std::size_t>(s)];
    if (s <= w) tail += counts[na][static_cast<std::size_t>(s)];
  }
  return tail / total;
}

}  // namespace

StatTestResult wilcoxon_one_sided(std::span<const double> a, std::span<const double> b, double alpha) {
  if (a.empty() || b.empty()) throw UsageError("wilcoxon_one_sided: both samples need at least one value");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = midranks(pooled);

  const auto na = a.size();
  const auto nb = b.size();
  const auto n = na + nb;
  double w = 0.0;
  for (std::size_t i = 0; i < na; ++i) w += ranks[i];

  // Tie correction term sum(t^3 - t) over tie groups.
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  bool has_ties = false;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    if (t > 1) has_ties = true;
    tie_term += t * t * t - t;
    i = j;
  }

  StatTestResult result;
  result.rank_sum = w;
  result.first_smaller = true;

  if (n <= 20 && !has_ties) {
    result.exact = true;
    result.p_value = exact_lower_tail(na, n, std::llround(w));
  } else {
    const double dn = static_cast<double>(n);
    const double mean = 0.5 * static_cast<double>(na) * (dn + 1.0);
    const double var = static_cast<double>(na * nb) / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
    if (!(var > 0.0)) {
      result.p_value = 1.0;
    } else {
      const double z = (w - mean + 0.5) / std::sqrt(var);
      result.p_value = std::min(1.0, normal_cdf(z));
    }
  }
  result.significant = result.p_value < alpha;
  return result;
}

}  // namespace ctune
