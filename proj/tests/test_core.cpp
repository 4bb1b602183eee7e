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
#include <limits>

#include "ctune/core.hpp"

using namespace ctune;

namespace {

std::vector<std::size_t> brute_force_front(const std::vector<ObjectiveVector>& pts) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
      if (i == j) continue;
      bool no_worse = true;
      bool better = false;
      for (std::size_t k = 0; k < pts[i].size(); ++k) {
        no_worse = no_worse && pts[j][k] <= pts[i][k];
        better = better || pts[j][k] < pts[i][k];
      }
      dominated = no_worse && better;
    }
    if (!dominated) out.push_back(i);
  }
  return out;
}

std::vector<ObjectiveVector> random_points(std::size_t n, std::size_t m, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ObjectiveVector> pts(n, ObjectiveVector(m));
  for (auto& p : pts) {
    for (auto& v : p) v = u(rng);
  }
  return pts;
}

}  // namespace

TEST_CASE("dominance examples") {
  CHECK(dominates(std::vector{1.0, 2.0, 3.0}, std::vector{2.0, 3.0, 4.0}));
  CHECK_FALSE(dominates(std::vector{1.0, 2.0}, std::vector{1.0, 2.0}));
  CHECK_FALSE(dominates(std::vector{1.0, 3.0}, std::vector{2.0, 2.0}));
  CHECK_FALSE(dominates(std::vector{2.0, 2.0}, std::vector{1.0, 3.0}));
  CHECK_THROWS_AS(dominates(std::vector{1.0}, std::vector{1.0, 2.0}), UsageError);
}

TEST_CASE("dominance is irreflexive and transitive on random triples") {
  Rng rng(11);
  std::uniform_int_distribution<int> level(0, 3);
  for (int trial = 0; trial < 5000; ++trial) {
    ObjectiveVector a(3), b(3), c(3);
    for (int k = 0; k < 3; ++k) {
      a[k] = level(rng);
      b[k] = level(rng);
      c[k] = level(rng);
    }
    CHECK_FALSE(dominates(a, a));
    if (dominates(a, b) && dominates(b, c)) CHECK(dominates(a, c));
  }
}

TEST_CASE("pareto_filter examples") {
  const std::vector<ObjectiveVector> pts{{1, 2}, {2, 1}, {2, 2}};
  CHECK(pareto_filter(pts) == std::vector<std::size_t>{0, 1});
  CHECK(pareto_filter(std::vector<ObjectiveVector>{{5, 5}}) == std::vector<std::size_t>{0});
  CHECK(pareto_filter(std::vector<ObjectiveVector>{}).empty());
  CHECK(pareto_filter(std::vector<ObjectiveVector>{{1, 1}, {1, 1}, {2, 2}}) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("pareto_filter matches all-pairs oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto pts = random_points(20, 3, rng);
    CHECK(pareto_filter(pts) == brute_force_front(pts));
  }
}

TEST_CASE("pareto_filter output is internally non-dominated and covers excluded points") {
  Rng rng(5);
  const auto pts = random_points(60, 2, rng);
  const auto front = pareto_filter(pts);
  for (auto i : front) {
    for (auto j : front) CHECK_FALSE(dominates(pts[i], pts[j]));
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (std::find(front.begin(), front.end(), i) != front.end()) continue;
    CHECK(std::any_of(front.begin(), front.end(), [&](auto j) { return dominates(pts[j], pts[i]); }));
  }
}

TEST_CASE("current_front examples") {
  SUBCASE("three successes, one dominated") {
    Dataset d({Evaluation::success({0.0}, {1, 2}, 1, 0), Evaluation::success({1.0}, {2, 1}, 1, 0),
               Evaluation::success({2.0}, {3, 3}, 1, 0)});
    const auto f = current_front(d);
    REQUIRE(f);
    CHECK(f->size() == 2);
  }
  SUBCASE("crashes are excluded") {
    std::vector<Evaluation> ev;
    for (int i = 0; i < 5; ++i) ev.push_back(Evaluation::crash({double(i)}, 1, 0));
    ev.push_back(Evaluation::success({9.0}, {4, 4}, 1, 0));
    const auto f = current_front(Dataset(ev));
    REQUIRE(f);
    CHECK(f->member_indices == std::vector<std::size_t>{5});
    CHECK(f->objective_points == std::vector<ObjectiveVector>{{4, 4}});
  }
  SUBCASE("no feasible point yet") {
    CHECK_FALSE(current_front(Dataset({Evaluation::crash({0.0}, 1, 0)})));
    CHECK_FALSE(current_front(Dataset{}));
  }
}

TEST_CASE("current_front equals pareto_filter over successes") {
  Rng rng(8);
  std::bernoulli_distribution crash(0.4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pts = random_points(30, 3, rng);
    std::vector<Evaluation> ev;
    std::vector<std::size_t> success_index;
    std::vector<ObjectiveVector> successes;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (crash(rng)) {
        ev.push_back(Evaluation::crash({double(i)}, 1, 0));
      } else {
        ev.push_back(Evaluation::success({double(i)}, pts[i], 1, 0));
        success_index.push_back(i);
        successes.push_back(pts[i]);
      }
    }
    const auto f = current_front(Dataset(ev));
    if (successes.empty()) {
      CHECK_FALSE(f);
      continue;
    }
    std::vector<std::size_t> expected;
    for (auto k : pareto_filter(successes)) expected.push_back(success_index[k]);
    CHECK(f->member_indices == expected);
    for (auto i : f->member_indices) CHECK(ev[i].crash_ok);
  }
}

TEST_CASE("augment keeps order") {
  auto e = [](double x) { return Evaluation::success({x}, {x, -x}, 1, 0); };
  const Dataset abc({e(1), e(2), e(3)});
  const std::vector<Evaluation> de{e(4), e(5)};
  const auto out = augment(abc, de);
  REQUIRE(out.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(out[i].theta[0] == double(i + 1));
  CHECK(abc.size() == 3);
  CHECK(augment(abc, std::vector<Evaluation>{}).evaluations() == abc.evaluations());
  CHECK(augment(Dataset{}, std::vector<Evaluation>{e(7)}).evaluations() == std::vector<Evaluation>{e(7)});
  const std::vector<Evaluation> wrong{Evaluation::success({1.0, 2.0}, {1, 1}, 1, 0)};
  CHECK_THROWS_AS(augment(abc, wrong), UsageError);
}

TEST_CASE("evaluation and bounds invariants") {
  CHECK_THROWS_AS(Evaluation::success({0.0}, {1.0, std::numeric_limits<double>::infinity()}, 1, 0), UsageError);
  CHECK_THROWS_AS(Evaluation::crash({0.0}, -1, 0), UsageError);
  const auto c = Evaluation::crash({0.0}, 3, 0.1);
  CHECK_FALSE(c.crash_ok);
  CHECK_FALSE(c.objectives.has_value());

  CHECK_THROWS_AS(BoxBounds({0.0}, {0.0}), UsageError);
  CHECK_THROWS_AS(BoxBounds({}, {}), UsageError);
  const auto b = BoxBounds::uniform(3, -3, 4);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) CHECK(b.contains(b.sample_uniform(rng)));
  CHECK(b.clip(std::vector{-9.0, 0.5, 9.0}) == ParameterVector{-3.0, 0.5, 4.0});
  const ParameterVector x{-3.0, 0.5, 4.0};
  const auto u = b.to_unit(x);
  CHECK(u[0] == 0.0);
  CHECK(u[2] == 1.0);
  CHECK(b.from_unit(u)[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("worst_successful is componentwise max over successes") {
  Dataset d({Evaluation::success({0.0}, {1, 5}, 1, 0), Evaluation::crash({1.0}, 1, 0),
             Evaluation::success({2.0}, {3, 2}, 1, 0)});
  CHECK(*worst_successful(d) == ObjectiveVector{3, 5});
  CHECK_FALSE(worst_successful(Dataset({Evaluation::crash({1.0}, 1, 0)})));
  CHECK(d.num_successes() == 2);
  CHECK(d.num_crashes() == 1);
  CHECK(*d.num_objectives() == 2);
}
