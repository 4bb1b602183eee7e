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

#include "ctune/evaluator.hpp"
#include "ctune/synthetic.hpp"

using namespace ctune;

namespace {

// x < 0.25 crashes; steps grow with x so that evaluation order is visible in the accounting
BenchmarkProblem toy(bool nominal) {
  BenchmarkProblem p("toy", BoxBounds::uniform(1, 0.0, 1.0));
  p.reference_point = {2.0, 2.0};
  p.mean_steps_per_eval = 100;
  if (nominal) p.nominal_eval_seconds = 1.0;
  p.evaluate = [](const ParameterVector& x) {
    const auto steps = 50 + static_cast<std::int64_t>(100 * x[0]);
    if (x[0] < 0.25) return Evaluation::crash(x, steps, 0.0);
    return Evaluation::success(x, {x[0], 1.0 - x[0]}, steps, 0.0);
  };
  return p;
}

std::vector<ParameterVector> line(std::size_t n) {
  std::vector<ParameterVector> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({static_cast<double>(i) / static_cast<double>(n)});
  return out;
}

}  // namespace

TEST_CASE("steps and evaluations are committed in proposal order") {
  const auto p = toy(true);
  BudgetedEvaluator ev(p, {1'000'000, std::nullopt, 1});
  const auto batch = line(10);
  ev.evaluate(batch);
  REQUIRE(ev.num_evaluations() == 10);
  std::int64_t steps = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(ev.evaluations()[i].theta == batch[i]);
    steps += ev.evaluations()[i].sim_steps;
  }
  CHECK(ev.steps_used() == steps);
  CHECK(ev.dataset().num_crashes() == 3);
}

TEST_CASE("concurrent batches commit the same sequence") {
  const auto p = toy(false);
  BudgetedEvaluator serial(p, {1'000'000, std::nullopt, 1});
  BudgetedEvaluator parallel(p, {1'000'000, std::nullopt, 4});
  const auto batch = line(37);
  serial.evaluate(batch);
  parallel.evaluate(batch);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CHECK(serial.evaluations()[i].theta == parallel.evaluations()[i].theta);
    CHECK(serial.evaluations()[i].objectives == parallel.evaluations()[i].objectives);
  }
}

TEST_CASE("evaluate_within_budget stops at the budget") {
  const auto p = toy(true);
  BudgetedEvaluator ev(p, {500, std::nullopt, 1});
  const auto committed = ev.evaluate_within_budget(line(20));
  CHECK(committed < 20);
  CHECK(ev.exhausted());
  // the last committed evaluation crossed the budget; the one before did not
  std::int64_t before_last = ev.steps_used() - ev.evaluations().back().sim_steps;
  CHECK(before_last < 500);
  CHECK(ev.evaluate_within_budget(line(3)) == 0);
}

TEST_CASE("max_evaluations caps the run") {
  const auto p = toy(true);
  BudgetedEvaluator ev(p, {1'000'000, 7, 1});
  CHECK(ev.evaluate_within_budget(line(20)) == 7);
  CHECK(ev.exhausted());
}

TEST_CASE("overhead conversion uses the nominal step time") {
  const auto p = toy(true);  // 1 s per 100 steps
  BudgetedEvaluator ev(p, {1'000'000, std::nullopt, 1});
  CHECK(ev.seconds_per_step() == doctest::Approx(0.01));
  CHECK(ev.charge_overhead(0.5) == 50);
  CHECK(ev.charge_overhead(0.0) == 0);
  CHECK(ev.steps_used() == 50);

  const auto z = make_zdt1();
  BudgetedEvaluator nominal(z, {1'000'000, std::nullopt, 1});
  CHECK(nominal.charge_overhead(10.0) == overhead_to_steps(10.0, 20.0 / 8400.0));
}

TEST_CASE("measured mode defers overhead until a step rate exists") {
  auto p = toy(false);
  p.evaluate = [](const ParameterVector& x) {
    auto e = Evaluation::success(x, {x[0], 1.0 - x[0]}, 100, 0.0);
    return e;
  };
  BudgetedEvaluator ev(p, {1'000'000, std::nullopt, 1});
  CHECK(ev.charge_overhead(1.0) == 0);
  CHECK(ev.steps_used() == 0);
  ev.evaluate(line(3));
  if (ev.seconds_per_step() > 0.0) {
    const auto steps = ev.charge_overhead(0.0);
    CHECK(steps == overhead_to_steps(1.0, ev.seconds_per_step()));
  }
}

TEST_CASE("close_iteration summarizes the last batch") {
  const auto p = toy(true);
  BudgetedEvaluator ev(p, {1'000'000, std::nullopt, 1});
  ev.evaluate(line(4));
  auto t = ev.close_iteration(0, 4, 0.0);
  CHECK(t.mean_eval_seconds == 1.0);
  CHECK(t.evaluations_after == 4);
  ev.evaluate(line(2));
  t = ev.close_iteration(1, 2, 0.3);
  CHECK(t.batch_size == 2);
  CHECK(t.overhead_steps == 30);
  CHECK(t.steps_after == ev.steps_used());
  const auto charged = ev.charge_overhead(0.2);
  t = ev.close_iteration(2, 1, 0.2, charged);
  CHECK(t.overhead_steps == 20);
  CHECK_THROWS_AS(ev.close_iteration(3, 99, 0.0), UsageError);
}

TEST_CASE("hv curve is non-decreasing and counts only successes") {
  const auto p = toy(true);
  BudgetedEvaluator ev(p, {1'000'000, std::nullopt, 1});
  Rng rng(3);
  std::vector<ParameterVector> batch;
  for (int i = 0; i < 50; ++i) batch.push_back(p.bounds.sample_uniform(rng));
  ev.evaluate(batch);
  const auto r = ev.finish("toy", 0, {}, {});
  REQUIRE(r.hv_curve.size() == 50);
  for (std::size_t i = 1; i < r.hv_curve.size(); ++i) {
    CHECK(r.hv_curve[i].hv >= r.hv_curve[i - 1].hv);
    CHECK(r.hv_curve[i].steps > r.hv_curve[i - 1].steps);
  }
  std::vector<ObjectiveVector> ok;
  for (const auto& e : r.evaluations) {
    if (e.crash_ok) ok.push_back(*e.objectives);
  }
  CHECK(r.hv_curve.back().hv == doctest::Approx(hypervolume(ok, p.reference_point)).epsilon(1e-12));
  CHECK(r.total_steps == r.total_eval_steps + r.total_overhead_steps);
}

TEST_CASE("points outside the bounds are rejected") {
  const auto p = toy(true);
  BudgetedEvaluator ev(p, {1000, std::nullopt, 1});
  const std::vector<ParameterVector> bad{{1.5}};
  CHECK_THROWS_AS(ev.evaluate(bad), UsageError);
}

TEST_CASE("a batch never commits past max_evaluations") {
  const auto p = toy(true);
  BudgetedEvaluator ev(p, {1'000'000, 7, 1});
  CHECK(ev.evaluate(line(5)).size() == 5);
  const auto rest = ev.evaluate(line(5));
  CHECK(rest.size() == 2);
  CHECK(ev.num_evaluations() == 7);
  CHECK(ev.evaluate(line(3)).empty());
}
