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

#include "ctune/evaluator.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace ctune {

BudgetedEvaluator::BudgetedEvaluator(const BenchmarkProblem& problem, RunLimits limits)
    : problem_(problem), limits_(limits) {
  if (!problem_.evaluate) throw UsageError("BudgetedEvaluator: problem has no evaluate function");
  workers_ = limits_.workers != 0 ? limits_.workers : std::max(1u, std::thread::hardware_concurrency());
}

Evaluation BudgetedEvaluator::run_one(const ParameterVector& theta) const {
  if (!problem_.bounds.contains(theta)) throw UsageError("optimizer proposed a point outside the bounds");
  Stopwatch watch;
  Evaluation e = problem_.evaluate(theta);
  e.wall_time = problem_.nominal_eval_seconds ? *problem_.nominal_eval_seconds : watch.seconds();
  return e;
}

std::vector<Evaluation> BudgetedEvaluator::run_batch(std::span<const ParameterVector> batch) const {
  std::vector<std::optional<Evaluation>> slots(batch.size());
  const std::size_t threads = std::min(workers_, batch.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < batch.size(); ++i) slots[i] = run_one(batch[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
      std::vector<std::jthread> pool;
      pool.reserve(threads);
      for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
          for (std::size_t i = next++; i < batch.size(); i = next++) {
            try {
              slots[i] = run_one(batch[i]);
            } catch (...) {
              std::lock_guard lock(failure_mutex);
              if (!failure) failure = std::current_exception();
            }
          }
        });
      }
    }
    if (failure) std::rethrow_exception(failure);
  }
  std::vector<Evaluation> out;
  out.reserve(batch.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::vector<Evaluation> BudgetedEvaluator::evaluate(std::span<const ParameterVector> batch) {
  if (limits_.max_evaluations) {
    const auto room = *limits_.max_evaluations - std::min(*limits_.max_evaluations, evaluations_.size());
    batch = batch.first(std::min(room, batch.size()));
  }
  auto results = run_batch(batch);
  for (const auto& e : results) commit(e);
  return results;
}

std::size_t BudgetedEvaluator::evaluate_within_budget(std::span<const ParameterVector> batch) {
  std::size_t committed = 0;
  if (std::min(workers_, batch.size()) <= 1) {
    for (std::size_t i = 0; i < batch.size() && !exhausted(); ++i) {
      commit(run_one(batch[i]));
      ++committed;
    }
    return committed;
  }
  if (exhausted()) return 0;
  for (auto& e : run_batch(batch)) {
    if (exhausted()) break;
    commit(std::move(e));
    ++committed;
  }
  return committed;
}

void BudgetedEvaluator::commit(Evaluation e) {
  eval_steps_ += e.sim_steps;
  eval_seconds_ += e.wall_time;
  if (e.crash_ok) {
    const auto& obj = *e.objectives;
    const bool improves = std::none_of(front_.begin(), front_.end(), [&](const ObjectiveVector& f) {
      return dominates(f, obj) || f == obj;
    });
    if (improves) {
      std::erase_if(front_, [&](const ObjectiveVector& f) { return dominates(obj, f); });
      front_.push_back(obj);
      hv_ = hypervolume(front_, problem_.reference_point);
    }
  }
  evaluations_.push_back(std::move(e));
  curve_.push_back({steps_used(), hv_});
}

double BudgetedEvaluator::seconds_per_step() const {
  if (problem_.nominal_eval_seconds) {
    return *problem_.nominal_eval_seconds / static_cast<double>(std::max<std::int64_t>(1, problem_.mean_steps_per_eval));
  }
  if (eval_steps_ > 0 && eval_seconds_ > 0.0) return eval_seconds_ / static_cast<double>(eval_steps_);
  return 0.0;
}

std::int64_t BudgetedEvaluator::charge_overhead(double seconds) {
  overhead_seconds_ += std::max(0.0, seconds);
  pending_overhead_ += std::max(0.0, seconds);
  const double rate = seconds_per_step();
  if (!(rate > 0.0)) return 0;  // converted once the first evaluation gives a step rate
  const auto steps = overhead_to_steps(pending_overhead_, rate);
  pending_overhead_ = 0.0;
  overhead_steps_ += steps;
  return steps;
}

IterationTrace BudgetedEvaluator::close_iteration(std::int64_t iteration, std::size_t batch_size,
                                                  double overhead_seconds, std::optional<std::int64_t> charged_steps) {
  if (batch_size > evaluations_.size()) throw UsageError("close_iteration: batch larger than history");
  IterationTrace t;
  t.iteration = iteration;
  t.batch_size = static_cast<std::int64_t>(batch_size);
  t.overhead_seconds = overhead_seconds;
  t.overhead_steps = charged_steps ? *charged_steps : charge_overhead(overhead_seconds);
  double seconds = 0.0;
  for (std::size_t i = evaluations_.size() - batch_size; i < evaluations_.size(); ++i) {
    seconds += evaluations_[i].wall_time;
  }
  t.mean_eval_seconds = batch_size > 0 ? seconds / static_cast<double>(batch_size) : 0.0;
  t.evaluations_after = static_cast<std::int64_t>(evaluations_.size());
  t.steps_after = steps_used();
  return t;
}

bool BudgetedEvaluator::exhausted() const {
  if (limits_.max_evaluations && evaluations_.size() >= *limits_.max_evaluations) return true;
  return steps_used() >= limits_.budget_steps;
}

RunRecord BudgetedEvaluator::finish(std::string variant, std::uint64_t seed, std::vector<IterationTrace> iterations,
                                    std::vector<std::string> notes) {
  RunRecord r;
  r.problem = problem_.name;
  r.variant = std::move(variant);
  r.seed = seed;
  r.budget_steps = limits_.budget_steps;
  r.evaluations = std::move(evaluations_);
  r.iterations = std::move(iterations);
  r.hv_curve = std::move(curve_);
  r.total_overhead_seconds = overhead_seconds_;
  r.total_overhead_steps = overhead_steps_;
  r.total_eval_steps = eval_steps_;
  r.total_steps = eval_steps_ + overhead_steps_;
  r.notes = std::move(notes);
  evaluations_.clear();
  curve_.clear();
  return r;
}

}  // namespace ctune
