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
#include <numbers>

#include "ctune/metrics.hpp"
#include "ctune/mobo.hpp"
#include "ctune/synthetic.hpp"

using namespace ctune;
using namespace ctune::mobo;

namespace {

// Expected improvement by trapezoidal integration of max(best - y, 0) against the normal density.
double ei_quadrature(double best, double mu, double sigma) {
  constexpr int n = 200000;
  const double lo = mu - 12.0 * sigma;
  const double hi = mu + 12.0 * sigma;
  const double h = (hi - lo) / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double y = lo + i * h;
    const double z = (y - mu) / sigma;
    const double f = std::max(best - y, 0.0) * std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
    sum += (i == 0 || i == n) ? 0.5 * f : f;
  }
  return sum * h;
}

MoboConfig light_config() {
  MoboConfig c;
  c.fit.restarts = 2;
  c.fit.max_iterations = 30;
  c.tsemo.ga.n_pop = 40;
  c.tsemo.ga.n_gen = 20;
  c.tsemo.features = 200;
  c.eim.probes = 300;
  c.eim.local_iterations = 40;
  return c;
}

std::vector<gp::GPModel> fit_zdt1(std::size_t n, Rng& rng) {
  const auto p = make_zdt1(3);
  std::vector<ParameterVector> x;
  std::vector<double> y0, y1;
  for (std::size_t i = 0; i < n; ++i) {
    x.push_back(p.bounds.sample_uniform(rng));
    const auto f = *p.evaluate(x.back()).objectives;
    y0.push_back(f[0]);
    y1.push_back(f[1]);
  }
  gp::FitOptions fit;
  fit.restarts = 2;
  return {gp::GPModel::fit(p.bounds, x, y0, fit, rng), gp::GPModel::fit(p.bounds, x, y1, fit, rng)};
}

}  // namespace

TEST_CASE("adaptive batch size") {
  CHECK(calc_batch_size(40, 20, 0.2) == 10);
  CHECK(calc_batch_size(1, 20, 0.2) == 1);
  CHECK(calc_batch_size(0, 20, 0.2) == 1);
  CHECK(calc_batch_size(41, 20, 0.2) == 11);
  CHECK_THROWS_AS(calc_batch_size(1, 0, 0.2), UsageError);
  CHECK_THROWS_AS(calc_batch_size(1, 20, 0.0), UsageError);
}

TEST_CASE("virtual data points") {
  CHECK(virtual_value(1.0, 0.5, 3.0, 10.0) == doctest::Approx(2.5));
  CHECK(virtual_value(9.0, 1.0, 3.0, 10.0) == 10.0);

  // at gamma 3 the virtual point (0.9, 0.9) dominates the front member (1, 1)
  const std::vector<std::vector<gp::Prediction>> pred{{{0.0, 0.3}, {0.0, 0.3}}};
  const std::vector<ObjectiveVector> front{{1.0, 1.0}, {0.5, 3.0}};
  const std::vector<double> j_max{10.0, 10.0};
  const auto vp = resolve_virtual_points(pred, front, j_max, 3.0, 0.5);
  CHECK(vp.gamma >= 3.5);
  CHECK(vp.escalations >= 1);
  CHECK_FALSE(vp.capped);
  for (const auto& v : vp.values) {
    for (const auto& f : front) CHECK_FALSE(dominates(v, f));
  }

  // no escalation when nothing is dominated
  const auto calm = resolve_virtual_points(std::vector<std::vector<gp::Prediction>>{{{5.0, 0.1}, {5.0, 0.1}}}, front,
                                           j_max, 3.0, 0.5);
  CHECK(calm.gamma == 3.0);
  CHECK(calm.escalations == 0);

  // zero variance can never escalate away from the front: the guard caps at the worst values
  const auto stuck = resolve_virtual_points(std::vector<std::vector<gp::Prediction>>{{{0.0, 0.0}, {0.0, 0.0}}}, front,
                                            j_max, 3.0, 0.5, 10);
  CHECK(stuck.capped);
  CHECK(stuck.values.front() == ObjectiveVector{10.0, 10.0});
}

TEST_CASE("expected improvement") {
  for (const auto& [best, mu, sigma] : std::vector<std::array<double, 3>>{{1.0, 0.5, 1.0}, {0.0, 1.0, 0.3}, {2.0, 2.0, 0.7}}) {
    CHECK(expected_improvement(best, mu, sigma) == doctest::Approx(ei_quadrature(best, mu, sigma)).epsilon(1e-6));
  }
  CHECK(expected_improvement(1.0, 0.4, 0.0) == doctest::Approx(0.6));
  CHECK(expected_improvement(1.0, 1.4, 0.0) == 0.0);

  // one front point and one objective: the norm is the scalar improvement
  const std::vector<gp::Prediction> p{{0.5, 1.0}};
  const std::vector<ObjectiveVector> f{{1.0}};
  CHECK(eim_value(p, f) == doctest::Approx(expected_improvement(1.0, 0.5, 1.0)).epsilon(1e-12));

  // at a known front point with no uncertainty there is nothing to gain
  const std::vector<ObjectiveVector> front{{1.0, 2.0}, {2.0, 1.0}};
  const std::vector<gp::Prediction> at_front{{1.0, 0.0}, {2.0, 0.0}};
  CHECK(eim_value(at_front, front) == 0.0);

  Rng rng(3);
  const auto models = fit_zdt1(12, rng);
  const std::vector<ObjectiveVector> zfront{{0.1, 0.9}, {0.5, 0.4}};
  for (int i = 0; i < 100; ++i) {
    const auto theta = models[0].bounds().sample_uniform(rng);
    const std::vector<gp::Prediction> q{models[0].predict(theta), models[1].predict(theta)};
    CHECK(eim_value(q, zfront) >= 0.0);
  }
  const auto x = eim_propose(models, zfront, light_config().eim, rng);
  CHECK(models[0].bounds().contains(x));
}

TEST_CASE("hypervolume improvement and greedy selection") {
  const std::vector<double> ref{4.0, 4.0};
  const std::vector<ObjectiveVector> front{{1.0, 3.0}, {3.0, 1.0}};
  CHECK(hv_improvement(std::vector<double>{2.0, 2.0}, front, ref) == doctest::Approx(1.0));
  CHECK(hv_improvement(std::vector<double>{3.5, 3.5}, front, ref) == 0.0);
  CHECK(hv_improvement(std::vector<double>{1.0, 1.0}, std::vector<ObjectiveVector>{}, ref) == doctest::Approx(9.0));

  Rng rng(4);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ObjectiveVector> cand(15, ObjectiveVector(2));
    for (auto& c : cand) c = {u(rng), u(rng)};
    const auto picked = greedy_hv_selection(cand, front, ref, 4);
    REQUIRE(picked.size() == 4);
    std::vector<ObjectiveVector> current = front;
    for (auto idx : picked) {
      const double base = hypervolume(current, ref);
      auto with = current;
      with.push_back(cand[idx]);
      const double gain = hypervolume(with, ref) - base;
      for (std::size_t j = 0; j < cand.size(); ++j) {
        if (std::find(picked.begin(), picked.end(), j) != picked.end()) continue;
        auto other = current;
        other.push_back(cand[j]);
        CHECK(gain >= hypervolume(other, ref) - base - 1e-12);
      }
      current.push_back(cand[idx]);
    }
  }
  const std::vector<ObjectiveVector> single{{3.0, 3.0}, {1.0, 1.0}, {2.0, 0.5}};
  CHECK(greedy_hv_selection(single, std::vector<ObjectiveVector>{}, ref, 1) == std::vector<std::size_t>{1});
}

TEST_CASE("tsemo proposals stay in bounds") {
  Rng rng(5);
  const auto models = fit_zdt1(10, rng);
  const std::vector<ObjectiveVector> front{{0.2, 2.0}, {0.8, 1.5}};
  const std::vector<double> ref{1.2, 6.0};
  const auto cfg = light_config();
  for (std::size_t s : {1, 5, 60}) {
    const auto p = tsemo_propose(models, front, s, ref, cfg.tsemo, rng);
    CHECK(p.batch.size() == s);
    for (const auto& x : p.batch) CHECK(models[0].bounds().contains(x));
  }
  const auto lone = tsemo_propose(models, std::vector<ObjectiveVector>{}, 1, ref, cfg.tsemo, rng);
  CHECK(lone.batch.size() == 1);
}

TEST_CASE("budget below the initial design stops after it") {
  const auto p = make_zdt1(3);
  const auto r = run_mobo(p, light_config(), {3 * kNominalStepsPerEval, std::nullopt, 1}, 1);
  CHECK(r.evaluations.size() <= 5);
  CHECK(r.iterations.size() == 1);
  CHECK(r.iterations.front().iteration == 0);
}

TEST_CASE("same seed gives the same evaluation sequence") {
  const auto p = make_zdt1_crash(3);
  auto cfg = light_config();
  cfg.batch_schedule = {1, 3, 2};
  const RunLimits limits{1'000'000'000, 14, 2};
  const auto a = run_mobo(p, cfg, limits, 6);
  const auto b = run_mobo(p, cfg, limits, 6);
  REQUIRE(a.evaluations.size() == 14);
  CHECK(a.evaluations == b.evaluations);
}

TEST_CASE("model-based search improves on the initial design") {
  const auto p = make_zdt1(3);
  auto cfg = light_config();
  cfg.adaptive_batch = false;
  const auto r = run_mobo(p, cfg, {1'000'000'000, 60, 1}, 2);
  REQUIRE(r.evaluations.size() == 60);
  std::vector<ObjectiveVector> init, all;
  for (std::size_t i = 0; i < r.evaluations.size(); ++i) {
    all.push_back(*r.evaluations[i].objectives);
    if (i < cfg.n_init) init.push_back(all.back());
  }
  CHECK(hypervolume(all, p.reference_point) >= hypervolume(init, p.reference_point));
  CHECK(r.hv_curve.back().hv >= r.hv_curve[cfg.n_init - 1].hv);
}

TEST_CASE("every crash gets exactly one virtual point that dominates no front member") {
  const auto p = make_zdt1_crash(3);
  auto cfg = light_config();
  cfg.adaptive_batch = false;
  cfg.n_init = 10;
  std::size_t checked = 0;
  std::vector<IterationSnapshot> snaps;
  const auto r = run_mobo(p, cfg, {1'000'000'000, 25, 1}, 3, "TSEMO-1-VDP",
                          [&](const IterationSnapshot& s) { snaps.push_back(s); });
  for (const auto& s : snaps) {
    // evaluations before iteration k: n_init + (k - 1) with unit batches
    const auto before = cfg.n_init + static_cast<std::size_t>(s.iteration - 1);
    std::size_t crashes = 0;
    for (std::size_t i = 0; i < before; ++i) crashes += r.evaluations[i].crash_ok ? 0 : 1;
    CHECK(s.virtual_points.size() == crashes);
    for (const auto& v : s.virtual_points) {
      for (const auto& f : s.front) CHECK_FALSE(dominates(v, f));
    }
    checked += crashes;
  }
  CHECK(checked > 0);
}

TEST_CASE("constant penalty mode and eim run end to end") {
  const auto p = make_zdt1_crash(3);
  auto cfg = light_config();
  cfg.crash_handling = CrashHandling::constant_penalty;
  cfg.adaptive_batch = false;
  const auto a = run_mobo(p, cfg, {1'000'000'000, 12, 1}, 4, "TSEMO-1-C");
  CHECK(a.evaluations.size() == 12);
  cfg.crash_handling = CrashHandling::virtual_points;
  cfg.acquisition = Acquisition::eim;
  const auto b = run_mobo(p, cfg, {1'000'000'000, 12, 1}, 4, "EIM-1-VDP");
  CHECK(b.evaluations.size() == 12);
  CHECK(b.variant == "EIM-1-VDP");
  for (const auto& it : b.iterations) CHECK(it.batch_size <= 5);
}
