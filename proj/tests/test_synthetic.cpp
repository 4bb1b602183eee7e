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

#include <cmath>

#include "ctune/synthetic.hpp"

using namespace ctune;

TEST_CASE("ZDT1 values") {
  CHECK(zdt1(std::vector<double>(5, 0.0)) == ObjectiveVector{0.0, 1.0});
  for (double f1 : {0.0, 0.09, 0.25, 0.64, 1.0}) {
    const auto f = zdt1(std::vector<double>{f1, 0.0, 0.0, 0.0, 0.0});
    CHECK(f[1] == doctest::Approx(1.0 - std::sqrt(f1)).epsilon(1e-14));
  }
  for (const auto& p : zdt1_front(50)) CHECK(p[1] == doctest::Approx(1.0 - std::sqrt(p[0])).epsilon(1e-14));
  CHECK_THROWS_AS(zdt1(std::vector<double>{0.5}), UsageError);
}

TEST_CASE("DTLZ2 optimal points lie on the unit sphere") {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x{u(rng), u(rng), 0.5, 0.5, 0.5};
    const auto f = dtlz2(x);
    double norm = 0.0;
    for (double v : f) norm += v * v;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-12));
  }
  const auto off = dtlz2(std::vector<double>{0.3, 0.3, 0.0, 1.0, 0.5});
  double norm = 0.0;
  for (double v : off) norm += v * v;
  CHECK(std::sqrt(norm) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("synthetic problems report the nominal cost") {
  const auto p = make_zdt1();
  const auto e = p.evaluate(ParameterVector(5, 0.0));
  CHECK(e.sim_steps == kNominalStepsPerEval);
  CHECK(*p.nominal_eval_seconds == kNominalSecondsPerEval);
  CHECK(p.reference_point == ObjectiveVector{1.1, 1.1});
  CHECK(make_dtlz2().reference_point == ObjectiveVector{1.1, 1.1, 1.1});
}

TEST_CASE("crash regions") {
  const auto base = make_zdt1(2);
  const auto wrapped = make_zdt1_crash(2);
  const auto inside = wrapped.evaluate({0.5, 0.1});
  CHECK_FALSE(inside.crash_ok);
  CHECK_FALSE(inside.objectives.has_value());
  CHECK(wrapped.evaluate({0.9, 0.1}) == base.evaluate({0.9, 0.1}));
  CHECK(region_contains(BallRegion{{0.0, 0.0}, 1.0}, std::vector<double>{1.0, 0.0}));
  CHECK_FALSE(region_contains(BallRegion{{0.0, 0.0}, 1.0}, std::vector<double>{1.0, 0.1}));
  CHECK_THROWS_AS(with_crash_region(make_zdt1(2), BallRegion{{0.0}, 1.0}, "bad"), UsageError);

  const auto ball = make_dtlz2_crash(5);
  CHECK_FALSE(ball.evaluate(ParameterVector(5, 0.5)).crash_ok);
  CHECK(ball.evaluate(ParameterVector(5, 0.0)).crash_ok);
}

TEST_CASE("wrapped front restricted to the feasible preimage equals the base front there") {
  const auto base = make_zdt1(2);
  const auto wrapped = make_zdt1_crash(2);
  std::vector<ObjectiveVector> from_base, from_wrapped;
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      const ParameterVector x{i / 100.0, j / 100.0};
      const auto w = wrapped.evaluate(x);
      if (!w.crash_ok) continue;
      CHECK(w == base.evaluate(x));
      from_wrapped.push_back(*w.objectives);
      from_base.push_back(*base.evaluate(x).objectives);
    }
  }
  CHECK(pareto_filter(from_wrapped) == pareto_filter(from_base));
  // the crash box removes the middle of the analytic front
  for (auto k : pareto_filter(from_wrapped)) {
    const double f1 = from_wrapped[k][0];
    CHECK((f1 < 0.2 || f1 > 0.7));
  }
}
