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

#ifndef CTUNE_EVALUATOR_HPP
#define CTUNE_EVALUATOR_HPP

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctune/core.hpp"
#include "ctune/metrics.hpp"
#include "ctune/problem.hpp"
#include "ctune/run_record.hpp"

namespace ctune {

/// Shared limits for every optimizer run.
struct RunLimits {
  /// Simulation steps, including converted overhead.
  std::int64_t budget_steps = 0;
  /// Optional hard cap on the number of committed evaluations.
  std::optional<std::size_t> max_evaluations;
  /// Concurrent evaluations per batch; 0 picks the hardware concurrency.
  std::size_t workers = 0;
};

/// Evaluates batches of parameter vectors against a problem, commits results in proposal
/// order, and keeps the step budget (evaluation steps plus converted overhead).
class BudgetedEvaluator {
public:
  BudgetedEvaluator(const BenchmarkProblem& problem, RunLimits limits);

  /// Evaluates the batch (possibly concurrently) and commits every result; only the leading part
  /// that fits under max_evaluations is run.
  std::vector<Evaluation> evaluate(std::span<const ParameterVector> batch);

  /// Evaluates the batch but commits results one by one only while budget remains.
  /// Returns the number committed.
  std::size_t evaluate_within_budget(std::span<const ParameterVector> batch);

  /// Charges optimizer overhead; returns the steps it was converted to.
  std::int64_t charge_overhead(double seconds);

  /// Summarizes the last `batch_size` committed evaluations. Charges `overhead_seconds` now unless the
  /// caller already did so before the batch and passes the resulting steps.
  IterationTrace close_iteration(std::int64_t iteration, std::size_t batch_size, double overhead_seconds,
                                 std::optional<std::int64_t> charged_steps = std::nullopt);

  bool exhausted() const;
  std::int64_t steps_used() const { return eval_steps_ + overhead_steps_; }
  std::int64_t remaining_steps() const { return limits_.budget_steps - steps_used(); }
  std::size_t num_evaluations() const { return evaluations_.size(); }

  /// Running average cost of one simulation step in seconds.
  double seconds_per_step() const;

  const std::vector<Evaluation>& evaluations() const { return evaluations_; }
  Dataset dataset() const { return Dataset(evaluations_); }
  const BenchmarkProblem& problem() const { return problem_; }
  double current_hv() const { return hv_; }

  /// Moves the accumulated results into a record.
  RunRecord finish(std::string variant, std::uint64_t seed, std::vector<IterationTrace> iterations,
                   std::vector<std::string> notes);

private:
  Evaluation run_one(const ParameterVector& theta) const;
  std::vector<Evaluation> run_batch(std::span<const ParameterVector> batch) const;
  void commit(Evaluation e);

  const BenchmarkProblem& problem_;
  RunLimits limits_;
  std::size_t workers_;
  std::vector<Evaluation> evaluations_;
  std::vector<ObjectiveVector> front_;
  double hv_ = 0.0;
  HvCurve curve_;
  std::int64_t eval_steps_ = 0;
  std::int64_t overhead_steps_ = 0;
  double eval_seconds_ = 0.0;
  double overhead_seconds_ = 0.0;
  double pending_overhead_ = 0.0;
};

/// Wall-clock stopwatch for overhead measurements.
class Stopwatch {
public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  void reset() { start_ = std::chrono::steady_clock::now(); }

private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace ctune

#endif  // CTUNE_EVALUATOR_HPP
