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
#include <limits>
#include <numeric>

#include "ctune/metrics.hpp"
#include "ctune/nsga2.hpp"
#include "ctune/synthetic.hpp"

using namespace ctune;
using namespace ctune::nsga2;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Ranks by repeatedly removing the brute-force non-dominated set.
std::vector<std::size_t> peel(const std::vector<ObjectiveVector>& pts) {
  std::vector<std::size_t> rank(pts.size(), 0);
  std::vector<bool> removed(pts.size(), false);
  std::size_t left = pts.size();
  for (std::size_t level = 0; left > 0; ++level) {
    std::vector<std::size_t> layer;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (removed[i]) continue;
      bool dominated = false;
      for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
        if (!removed[j] && j != i) dominated = dominates(pts[j], pts[i]);
      }
      if (!dominated) layer.push_back(i);
    }
    for (auto i : layer) {
      rank[i] = level;
      removed[i] = true;
      --left;
    }
  }
  return rank;
}

BenchmarkProblem always_crash() {
  BenchmarkProblem p("always-crash", BoxBounds::uniform(3, -3.0, 4.0));
  p.reference_point = {1.0, 1.0};
  p.nominal_eval_seconds = 1.0;
  p.mean_steps_per_eval = 10;
  p.evaluate = [](const ParameterVector& x) { return Evaluation::crash(x, 10, 0.0); };
  return p;
}

}  // namespace

TEST_CASE("interpolation crossover") {
  const ParameterVector a{0.0, 0.0, 0.0};
  const ParameterVector b{1.0, 1.0, 1.0};
  CHECK(crossover_interpolate_at(a, b, 0.0) == a);
  CHECK(crossover_interpolate_at(a, b, 0.5) == ParameterVector{0.5, 0.5, 0.5});
  const ParameterVector p{-2.0, 3.0, 0.5};
  const ParameterVector q{1.0, -1.0, 0.5};
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto c = crossover_interpolate(p, q, rng);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(c[k] >= std::min(p[k], q[k]));
      CHECK(c[k] <= std::max(p[k], q[k]));
    }
  }
}

TEST_CASE("gaussian mutation") {
  const auto b = BoxBounds::uniform(4, -3.0, 4.0);
  Rng rng(2);
  const ParameterVector x{0.5, 0.5, -3.0, 4.0};
  CHECK(mutate_gaussian(x, b, 0.1, 0.0, rng) == x);
  for (int i = 0; i < 10000; ++i) CHECK(b.contains(mutate_gaussian(b.sample_uniform(rng), b, 0.5, 1.0, rng)));
  CHECK_THROWS_AS(mutate_gaussian(x, b, 0.0, 1.0, rng), UsageError);

  // far from the walls so clipping does not bias the spread
  const auto wide = BoxBounds::uniform(1, -100.0, 100.0);
  const ParameterVector centre{0.0};
  constexpr int trials = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < trials; ++i) {
    const double d = mutate_gaussian(centre, wide, 0.01, 1.0, rng)[0];
    sum += d;
    sq += d * d;
  }
  const double mean = sum / trials;
  const double sd = std::sqrt(sq / trials - mean * mean);
  CHECK(sd == doctest::Approx(0.01 * 200.0).epsilon(0.05));
}

TEST_CASE("non-dominated sorting") {
  const std::vector<ObjectiveVector> chain{{1, 1}, {2, 2}, {3, 3}};
  CHECK(nondominated_sort(chain) == std::vector<std::size_t>{0, 1, 2});

  const std::vector<ObjectiveVector> with_crash{{1, 5}, {kInf, kInf}, {5, 1}, {3, 3}, {6, 6}};
  const auto r = nondominated_sort(with_crash);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (i != 1) CHECK(r[1] > r[i]);
  }

  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ObjectiveVector> pts(30, ObjectiveVector(3));
    for (auto& p : pts) {
      for (auto& v : p) v = std::round(u(rng) * 8.0);
    }
    const auto ranks = nondominated_sort(pts);
    CHECK(ranks == peel(pts));
    std::vector<std::size_t> zero;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
      if (ranks[i] == 0) zero.push_back(i);
    }
    CHECK(zero == pareto_filter(pts));
  }
}

TEST_CASE("crowding distance") {
  CHECK(crowding_distance(std::vector<ObjectiveVector>{{0, 1}, {1, 0}}) == std::vector<double>{kInf, kInf});
  const auto d = crowding_distance(std::vector<ObjectiveVector>{{0, 2}, {1, 1}, {2, 0}});
  CHECK(d[0] == kInf);
  CHECK(d[2] == kInf);
  CHECK(d[1] == doctest::Approx(2.0));

  Rng rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ObjectiveVector> pts(12, ObjectiveVector(2));
  for (auto& p : pts) {
    p[0] = u(rng);
    p[1] = 1.0 - p[0];
  }
  const auto base = crowding_distance(pts);
  std::vector<std::size_t> perm(pts.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<ObjectiveVector> shuffled;
  for (auto i : perm) shuffled.push_back(pts[i]);
  const auto again = crowding_distance(shuffled);
  for (std::size_t k = 0; k < perm.size(); ++k) {
    if (std::isinf(base[perm[k]])) {
      CHECK(std::isinf(again[k]));
    } else {
      CHECK(again[k] == doctest::Approx(base[perm[k]]).epsilon(1e-12));
    }
  }

  // a flat objective contributes nothing
  const auto flat = crowding_distance(std::vector<ObjectiveVector>{{0, 1}, {1, 1}, {3, 1}});
  CHECK(flat[1] == doctest::Approx(1.0));
}

TEST_CASE("crashed survivors are replaced by fresh uniform individuals") {
  const auto b = BoxBounds::uniform(3, -3.0, 4.0);
  Rng rng(5);
  std::vector<Individual> pool;
  for (int i = 0; i < 20; ++i) pool.push_back({ParameterVector{0.0, 0.0, 0.0}, {kInf, kInf}, false});
  auto pop = rank_population(pool);
  CHECK(replace_crashed(pop, b, rng) == 20);
  for (const auto& ind : pop.individuals) {
    CHECK(b.contains(ind.theta));
    CHECK(ind.theta != ParameterVector{0.0, 0.0, 0.0});
  }

  const auto record = run_nsga2(always_crash(), {.n_pop = 10, .n_gen = 3, .mutation_scale = 0.1, .mutation_prob = {}},
                                {1'000'000, std::nullopt, 1}, 9);
  CHECK(record.evaluations.size() == 40);
  std::vector<ParameterVector> thetas;
  for (const auto& e : record.evaluations) thetas.push_back(e.theta);
  std::sort(thetas.begin(), thetas.end());
  CHECK(std::adjacent_find(thetas.begin(), thetas.end()) == thetas.end());
}

TEST_CASE("truncation keeps exactly n_pop sorted by rank then crowding") {
  Rng rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Individual> pool;
  for (int i = 0; i < 40; ++i) pool.push_back({{u(rng)}, {u(rng), u(rng)}, true});
  const auto kept = truncate(rank_population(pool), 16);
  REQUIRE(kept.size() == 16);
  for (std::size_t i = 1; i < kept.size(); ++i) {
    CHECK(kept.rank[i] >= kept.rank[i - 1]);
    if (kept.rank[i] == kept.rank[i - 1]) CHECK(kept.crowding[i] <= kept.crowding[i - 1]);
  }
}

TEST_CASE("same seed gives the same evaluation sequence") {
  const auto problem = make_zdt1_crash();
  const GaConfig cfg{.n_pop = 20, .n_gen = 5, .mutation_scale = 0.1, .mutation_prob = {}};
  const auto a = run_nsga2(problem, cfg, {1'000'000'000, std::nullopt, 1}, 3);
  const auto b = run_nsga2(problem, cfg, {1'000'000'000, std::nullopt, 1}, 3);
  CHECK(a.evaluations == b.evaluations);
  for (const auto& e : a.evaluations) CHECK(problem.bounds.contains(e.theta));
}

TEST_CASE("NSGA-II approaches the analytic ZDT1 front") {
  const auto problem = make_zdt1();
  const auto target = hypervolume(zdt1_front(1000), problem.reference_point);
  int good = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = run_nsga2(problem, {}, {1'000'000'000'000, std::nullopt, 1}, seed);
    std::vector<ObjectiveVector> pts;
    for (const auto& e : r.evaluations) {
      if (e.crash_ok) pts.push_back(*e.objectives);
    }
    if (hypervolume(pts, problem.reference_point) >= 0.95 * target) ++good;
  }
  CHECK(good >= 8);
}
