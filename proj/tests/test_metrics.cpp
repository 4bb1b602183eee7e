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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "ctune/metrics.hpp"

using namespace ctune;

namespace {

// Exact union volume by coordinate compression: every cell of the grid spanned by the point
// coordinates and the reference is either fully covered or not.
double cell_oracle(const std::vector<ObjectiveVector>& pts, const ObjectiveVector& ref) {
  const std::size_t m = ref.size();
  std::vector<std::vector<double>> axes(m);
  for (std::size_t k = 0; k < m; ++k) {
    std::set<double> c{ref[k]};
    for (const auto& p : pts) {
      if (p[k] < ref[k]) c.insert(p[k]);
    }
    axes[k].assign(c.begin(), c.end());
  }
  std::vector<std::size_t> idx(m, 0);
  double total = 0.0;
  for (;;) {
    bool valid = true;
    for (std::size_t k = 0; k < m; ++k) valid = valid && idx[k] + 1 < axes[k].size();
    if (valid) {
      const auto covered = std::any_of(pts.begin(), pts.end(), [&](const auto& p) {
        for (std::size_t k = 0; k < m; ++k) {
          if (p[k] > axes[k][idx[k]]) return false;
        }
        return true;
      });
      if (covered) {
        double vol = 1.0;
        for (std::size_t k = 0; k < m; ++k) vol *= axes[k][idx[k] + 1] - axes[k][idx[k]];
        total += vol;
      }
    }
    std::size_t k = 0;
    while (k < m && ++idx[k] >= axes[k].size()) idx[k++] = 0;
    if (k == m) break;
  }
  return total;
}

std::vector<ObjectiveVector> random_set(std::size_t n, std::size_t m, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ObjectiveVector> pts(n, ObjectiveVector(m));
  for (auto& p : pts) {
    for (auto& v : p) v = u(rng);
  }
  return pts;
}

// P(W <= observed) by enumerating every assignment of na of the n pooled ranks to the first sample.
double permutation_p(std::size_t na, std::size_t nb, double observed) {
  const std::size_t n = na + nb;
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(na), true);
  std::size_t total = 0;
  std::size_t below = 0;
  do {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (pick[i]) w += static_cast<double>(i + 1);
    }
    ++total;
    if (w <= observed + 1e-9) ++below;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return static_cast<double>(below) / static_cast<double>(total);
}

}  // namespace

TEST_CASE("hypervolume hand examples") {
  CHECK(hypervolume(std::vector<ObjectiveVector>{{1, 1}}, std::vector{2.0, 2.0}) == 1.0);
  CHECK(hypervolume(std::vector<ObjectiveVector>{{1, 3}, {3, 1}}, std::vector{4.0, 4.0}) == 5.0);
  CHECK(hypervolume(std::vector<ObjectiveVector>{}, std::vector{4.0, 4.0}) == 0.0);
  CHECK(hypervolume(std::vector<ObjectiveVector>{{5, 1}}, std::vector{4.0, 4.0}) == 0.0);
  CHECK(hypervolume(std::vector<ObjectiveVector>{{0, 0, 0}}, std::vector{1.0, 2.0, 3.0}) == 6.0);
  CHECK(hypervolume(std::vector<ObjectiveVector>{{0, 0, 0, 0}}, std::vector{1.0, 2.0, 3.0, 0.5}) == 3.0);
}

TEST_CASE("hypervolume matches the cell oracle for M = 2, 3, 4") {
  Rng rng(21);
  for (std::size_t m = 2; m <= 4; ++m) {
    for (int trial = 0; trial < 30; ++trial) {
      const auto pts = random_set(m == 4 ? 6 : 10, m, rng);
      const ObjectiveVector ref(m, 1.05);
      CHECK(hypervolume(pts, ref) == doctest::Approx(cell_oracle(pts, ref)).epsilon(1e-12));
    }
  }
}

TEST_CASE("2-objective slicing agrees with the sweep") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto pts = random_set(25, 2, rng);
    const std::vector<double> ref{1.1, 1.1};
    CHECK(std::abs(hypervolume_slicing(pts, ref) - hypervolume_sweep_2d(pts, ref)) <= 1e-12);
  }
}

TEST_CASE("hypervolume monotonicity, permutation and duplicate invariance") {
  Rng rng(9);
  const std::vector<double> ref{1.0, 1.0, 1.0};
  std::vector<ObjectiveVector> pts;
  double previous = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto p = random_set(1, 3, rng).front();
    pts.push_back(p);
    const double hv = hypervolume(pts, ref);
    CHECK(hv >= previous);
    previous = hv;
  }
  auto shuffled = pts;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  CHECK(hypervolume(shuffled, ref) == doctest::Approx(previous).epsilon(1e-12));
  auto doubled = pts;
  doubled.insert(doubled.end(), pts.begin(), pts.end());
  CHECK(hypervolume(doubled, ref) == doctest::Approx(previous).epsilon(1e-12));
}

TEST_CASE("hypervolume_mc oracle") {
  Rng rng(2);
  const std::vector<double> ref{2.0, 2.0};
  CHECK(hypervolume_mc(std::vector<ObjectiveVector>{}, ref, 1000, rng).estimate == 0.0);
  // bounding box [0,2]x[0,2]; the box [0,1]x[0,2] covers half of it
  const std::vector<ObjectiveVector> half{{0, 0}, {1, 0}};
  const auto est = hypervolume_mc(std::vector<ObjectiveVector>{{1, 0}, {0, 0}}, ref, 100000, rng);
  CHECK(std::abs(est.estimate - hypervolume(half, ref)) <= 3 * est.std_error + 1e-12);
  const std::vector<ObjectiveVector> ideal_at_ref{{2, 2}};
  CHECK(hypervolume_mc(ideal_at_ref, ref, 100, rng).estimate == 0.0);
  CHECK_THROWS_AS(hypervolume_mc(half, ref, 0, rng), UsageError);

  Rng r1(5), r2(5);
  const std::vector<ObjectiveVector> a{{0.2, 0.7}, {0.6, 0.1}};
  const std::vector<ObjectiveVector> b{{0.6, 0.1}, {0.2, 0.7}};
  CHECK(hypervolume_mc(a, ref, 5000, r1).estimate == hypervolume_mc(b, ref, 5000, r2).estimate);
}

TEST_CASE("overhead_to_steps") {
  CHECK(overhead_to_steps(0.0, 0.01) == 0);
  CHECK(overhead_to_steps(10.0, 0.0025) == 4000);
  CHECK(overhead_to_steps(0.001, 0.01) == 1);
  std::int64_t prev = 0;
  for (double s = 0.0; s < 5.0; s += 0.173) {
    const auto steps = overhead_to_steps(s, 0.0031);
    CHECK(steps >= prev);
    prev = steps;
  }
  CHECK_THROWS_AS(overhead_to_steps(1.0, 0.0), UsageError);
}

TEST_CASE("log step grid and locf resampling") {
  const auto grid = log_step_grid(8400, 840000);
  CHECK(grid.size() <= 100);
  CHECK(grid.front() == 8400);
  CHECK(grid.back() == 840000);
  CHECK(std::is_sorted(grid.begin(), grid.end()));
  CHECK(std::adjacent_find(grid.begin(), grid.end()) == grid.end());

  const HvCurve curve{{10, 0.1}, {30, 0.5}, {35, 0.7}};
  const std::vector<std::int64_t> g{5, 10, 20, 34, 100};
  CHECK(resample_locf(curve, g) == std::vector<double>{0.0, 0.1, 0.1, 0.5, 0.7});
}

TEST_CASE("median curves") {
  const std::vector<std::int64_t> grid{1, 2, 3};
  const HvCurve a{{1, 1.0}};
  const HvCurve b{{1, 2.0}};
  const HvCurve c{{1, 9.0}};
  const std::vector<HvCurve> runs{a, b, c};
  const auto med = median_hv_curve(runs, grid);
  REQUIRE(med.size() == 3);
  for (const auto& p : med) CHECK(p.hv == 2.0);
  const std::vector<HvCurve> reordered{c, a, b};
  CHECK(median_hv_curve(reordered, grid) == med);
  const HvCurve x{{1, 0.2}, {3, 0.4}};
  const std::vector<HvCurve> same{x, x, x};
  const auto m = median_hv_curve(same, grid);
  CHECK(m[0].hv == 0.2);
  CHECK(m[2].hv == 0.4);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
}

TEST_CASE("wilcoxon examples") {
  const std::vector<double> same{0.3, 0.5, 0.5, 0.9};
  CHECK_FALSE(wilcoxon_one_sided(same, same).significant);

  std::vector<double> low(10), high(10);
  std::iota(low.begin(), low.end(), 1.0);
  std::iota(high.begin(), high.end(), 11.0);
  const auto r = wilcoxon_one_sided(low, high);
  CHECK(r.exact);
  CHECK(r.significant);
  CHECK(r.p_value == doctest::Approx(1.0 / 184756.0).epsilon(1e-12));
  CHECK_FALSE(wilcoxon_one_sided(high, low).significant);

  const std::vector<double> flat{1.0, 1.0, 1.0};
  const auto t = wilcoxon_one_sided(flat, flat);
  CHECK(t.p_value == 1.0);
  CHECK_FALSE(t.significant);
  CHECK_THROWS_AS(wilcoxon_one_sided(std::vector<double>{}, flat), UsageError);
}

TEST_CASE("wilcoxon exact p-values match permutation enumeration") {
  Rng rng(17);
  std::uniform_int_distribution<std::size_t> size(1, 9);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto na = size(rng);
    const auto nb = size(rng);
    std::vector<double> a(na), b(nb);
    for (auto& v : a) v = normal(rng);
    for (auto& v : b) v = normal(rng) + 0.7;
    const auto r = wilcoxon_one_sided(a, b);
    REQUIRE(r.exact);
    CHECK(std::abs(r.p_value - permutation_p(na, nb, r.rank_sum)) <= 1e-9);
    CHECK(r.significant == (r.p_value < 0.05));
  }
}

TEST_CASE("midranks average tied positions") {
  CHECK(midranks(std::vector{3.0, 1.0, 3.0, 2.0}) == std::vector{3.5, 1.0, 3.5, 2.0});
}
