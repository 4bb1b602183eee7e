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

#include "ctune/mobo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "ctune/metrics.hpp"

namespace ctune::mobo {

void MoboConfig::validate() const {
  if (n_init < 1) throw UsageError("MoboConfig: n_init must be >= 1");
  if (!(p_overhead_desired > 0.0)) throw UsageError("MoboConfig: p_overhead_desired must be positive");
  if (!(gamma_init > 0.0)) throw UsageError("MoboConfig: gamma_init must be positive");
  if (!(gamma_step > 0.0)) throw UsageError("MoboConfig: gamma_step must be positive");
  if (!adaptive_batch && constant_batch < 1) throw UsageError("MoboConfig: constant_batch must be >= 1");
  if (std::any_of(batch_schedule.begin(), batch_schedule.end(), [](std::size_t s) { return s < 1; })) {
    throw UsageError("MoboConfig: batch_schedule entries must be >= 1");
  }
  if (tsemo.features < 1) throw UsageError("MoboConfig: rff feature count must be >= 1");
}

std::size_t calc_batch_size(double t_overhead_prev, double t_sim_prev, double p_des) {
  if (!(t_sim_prev > 0.0) || !(p_des > 0.0)) throw UsageError("calc_batch_size: t_sim and p_des must be positive");
  const double raw = std::ceil(std::max(0.0, t_overhead_prev) / (p_des * t_sim_prev));
  return raw < 1.0 ? 1 : static_cast<std::size_t>(raw);
}

double virtual_value(double mu, double sigma, double gamma, double j_max) { return std::min(mu + gamma * sigma, j_max); }

VirtualPoints resolve_virtual_points(std::span<const std::vector<gp::Prediction>> predictions,
                                     std::span<const ObjectiveVector> front, std::span<const double> j_max,
                                     double gamma_init, double gamma_step, std::size_t max_escalations) {
  VirtualPoints out;
  out.gamma = gamma_init;
  auto dominates_front = [&](const std::vector<ObjectiveVector>& values) {
    for (const auto& v : values) {
      for (const auto& f : front) {
        if (dominates(v, f)) return true;
      }
    }
    return false;
  };
  for (;;) {
    out.values.assign(predictions.size(), ObjectiveVector(j_max.size()));
    for (std::size_t c = 0; c < predictions.size(); ++c) {
      if (predictions[c].size() != j_max.size()) throw UsageError("resolve_virtual_points: objective count mismatch");
      for (std::size_t m = 0; m < j_max.size(); ++m) {
        out.values[c][m] = virtual_value(predictions[c][m].mean, predictions[c][m].stddev, out.gamma, j_max[m]);
      }
    }
    if (!dominates_front(out.values)) return out;
    if (out.escalations == max_escalations) {
      spdlog::warn("vdp: {} escalations without resolution, capping virtual points at the worst values", max_escalations);
      for (auto& v : out.values) v.assign(j_max.begin(), j_max.end());
      out.capped = true;
      return out;
    }
    out.gamma += gamma_step;
    ++out.escalations;
  }
}

namespace {

std::vector<gp::GPModel> fit_models(const BoxBounds& bounds, std::span<const ParameterVector> thetas,
                                    const std::vector<std::vector<double>>& targets, const gp::FitOptions& fit,
                                    std::vector<std::optional<gp::Hyperparameters>>& warm, Rng& rng) {
  std::vector<gp::GPModel> models;
  warm.resize(targets.size());
  for (std::size_t m = 0; m < targets.size(); ++m) {
    gp::FitOptions options = fit;
    if (warm[m]) options.warm_start = warm[m];
    models.push_back(gp::GPModel::fit(bounds, thetas, targets[m], options, rng));
    warm[m] = models.back().hyperparameters();
  }
  return models;
}

struct SuccessSplit {
  std::vector<ParameterVector> success_thetas;
  std::vector<std::vector<double>> success_targets;  // per objective
  std::vector<ParameterVector> crash_thetas;
};

SuccessSplit split(const Dataset& dataset, std::size_t m) {
  SuccessSplit s;
  s.success_targets.resize(m);
  for (const auto& e : dataset) {
    if (e.crash_ok) {
      s.success_thetas.push_back(e.theta);
      for (std::size_t k = 0; k < m; ++k) s.success_targets[k].push_back((*e.objectives)[k]);
    } else {
      s.crash_thetas.push_back(e.theta);
    }
  }
  return s;
}

VirtualPoints vdp_from_models(std::span<const gp::GPModel> models, std::span<const ParameterVector> crash_thetas,
                              const ParetoFront& front, std::span<const double> j_max, double gamma_init,
                              double gamma_step, std::size_t max_escalations) {
  std::vector<std::vector<gp::Prediction>> predictions(crash_thetas.size(), std::vector<gp::Prediction>(models.size()));
  for (std::size_t m = 0; m < models.size(); ++m) {
    const auto p = models[m].predict_many(crash_thetas);
    for (std::size_t c = 0; c < crash_thetas.size(); ++c) predictions[c][m] = p[c];
  }
  return resolve_virtual_points(predictions, front.objective_points, j_max, gamma_init, gamma_step, max_escalations);
}

void check_vdp_invariant(const VirtualPoints& vp, const ParetoFront& front) {
  for (const auto& v : vp.values) {
    for (const auto& f : front.objective_points) {
      if (dominates(v, f)) throw std::logic_error("virtual data point dominates a member of the current front");
    }
  }
}

}  // namespace

VdpResult compute_vdp(const Dataset& dataset, const ParetoFront& front, const BoxBounds& bounds, double gamma_init,
                      double gamma_step, const gp::FitOptions& fit, Rng& rng, std::size_t max_escalations) {
  const auto m = dataset.num_objectives();
  if (!m) throw UsageError("compute_vdp: dataset has no successful evaluation");
  const auto s = split(dataset, *m);
  std::vector<std::optional<gp::Hyperparameters>> warm;
  VdpResult out;
  out.success_models = fit_models(bounds, s.success_thetas, s.success_targets, fit, warm, rng);
  const auto j_max = *worst_successful(dataset);
  out.points = vdp_from_models(out.success_models, s.crash_thetas, front, j_max, gamma_init, gamma_step, max_escalations);
  check_vdp_invariant(out.points, front);
  return out;
}

ObjectiveVector internal_reference_point(std::span<const ObjectiveVector> successes) {
  if (successes.empty()) throw UsageError("internal_reference_point: no successful points");
  const std::size_t m = successes.front().size();
  ObjectiveVector ref(m);
  for (std::size_t k = 0; k < m; ++k) {
    double lo = successes.front()[k];
    double hi = lo;
    for (const auto& s : successes) {
      lo = std::min(lo, s[k]);
      hi = std::max(hi, s[k]);
    }
    const double shift = std::min(0.0, lo);
    ref[k] = std::max((hi - shift) * 1.1, 1e-12) + shift;
  }
  return ref;
}

double hv_improvement(std::span<const double> candidate, std::span<const ObjectiveVector> points,
                      std::span<const double> ref) {
  double box = 1.0;
  for (std::size_t k = 0; k < ref.size(); ++k) {
    if (!(candidate[k] < ref[k])) return 0.0;
    box *= ref[k] - candidate[k];
  }
  std::vector<ObjectiveVector> limited;
  limited.reserve(points.size());
  for (const auto& p : points) {
    ObjectiveVector q(ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) q[k] = std::max(candidate[k], p[k]);
    limited.push_back(std::move(q));
  }
  return std::max(0.0, box - hypervolume(limited, ref));
}

std::vector<std::size_t> greedy_hv_selection(std::span<const ObjectiveVector> candidates,
                                             std::span<const ObjectiveVector> front, std::span<const double> ref,
                                             std::size_t count) {
  // Lazy greedy: HV improvement only shrinks as the selected set grows, so stale gains are upper bounds.
  struct Entry {
    double gain;
    std::size_t index;
    std::size_t stamp;
  };
  auto lower_priority = [](const Entry& a, const Entry& b) {
    if (a.gain != b.gain) return a.gain < b.gain;
    return a.index > b.index;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(lower_priority)> queue(lower_priority);
  std::vector<ObjectiveVector> reference_set(front.begin(), front.end());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    queue.push({hv_improvement(candidates[i], reference_set, ref), i, 0});
  }
  std::vector<std::size_t> selected;
  while (selected.size() < count && !queue.empty()) {
    Entry top = queue.top();
    queue.pop();
    if (top.stamp == selected.size()) {
      selected.push_back(top.index);
      reference_set.push_back(candidates[top.index]);
      continue;
    }
    top.gain = hv_improvement(candidates[top.index], reference_set, ref);
    top.stamp = selected.size();
    queue.push(top);
  }
  return selected;
}

Proposal tsemo_propose(std::span<const gp::GPModel> models, std::span<const ObjectiveVector> front,
                       std::size_t batch_size, std::span<const double> ref, const TsemoOptions& options, Rng& rng) {
  if (models.empty()) throw UsageError("tsemo_propose: no models");
  if (batch_size < 1) throw UsageError("tsemo_propose: batch size must be >= 1");
  const BoxBounds& bounds = models.front().bounds();
  const std::size_t m = models.size();

  std::vector<gp::SampledFunction> samples;
  samples.reserve(m);
  for (const auto& model : models) samples.push_back(gp::sample_posterior(model, options.features, rng));

  auto objective = [&](std::span<const ParameterVector> thetas) {
    std::vector<ObjectiveVector> out(thetas.size(), ObjectiveVector(m));
    for (std::size_t k = 0; k < m; ++k) {
      const Eigen::VectorXd values = samples[k].evaluate_many(thetas);
      for (std::size_t i = 0; i < thetas.size(); ++i) out[i][k] = values(static_cast<Eigen::Index>(i));
    }
    return out;
  };
  const auto population = nsga2::minimize(bounds, m, objective, options.ga, rng);

  Proposal out;
  bool degenerate = true;
  for (std::size_t k = 0; k < m && degenerate; ++k) {
    double lo = population.individuals.front().cost[k];
    double hi = lo;
    for (const auto& ind : population.individuals) {
      lo = std::min(lo, ind.cost[k]);
      hi = std::max(hi, ind.cost[k]);
    }
    if (hi - lo > 1e-12 * (1.0 + std::max(std::abs(lo), std::abs(hi)))) degenerate = false;
  }
  if (degenerate) {
    spdlog::info("tsemo: sampled landscape is constant, proposing uniform random points");
    for (std::size_t i = 0; i < batch_size; ++i) out.batch.push_back(bounds.sample_uniform(rng));
    out.fallback = true;
    return out;
  }

  // distinct individuals ordered by (rank, -crowding)
  const auto ordered = nsga2::truncate(population, population.size());
  std::vector<std::size_t> unique;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const auto& theta = ordered.individuals[i].theta;
    const bool seen = std::any_of(unique.begin(), unique.end(),
                                  [&](std::size_t j) { return ordered.individuals[j].theta == theta; });
    if (!seen) unique.push_back(i);
  }
  std::vector<std::size_t> first_rank;
  std::vector<ObjectiveVector> candidates;
  for (auto i : unique) {
    if (ordered.rank[i] == 0) {
      first_rank.push_back(i);
      candidates.push_back(ordered.individuals[i].cost);
    }
  }
  const auto picked = greedy_hv_selection(candidates, front, ref, std::min(batch_size, candidates.size()));
  std::vector<bool> used(ordered.size(), false);
  for (auto c : picked) {
    used[first_rank[c]] = true;
    out.batch.push_back(ordered.individuals[first_rank[c]].theta);
  }
  for (std::size_t k = 0; k < unique.size() && out.batch.size() < batch_size; ++k) {
    if (!used[unique[k]]) out.batch.push_back(ordered.individuals[unique[k]].theta);
  }
  while (out.batch.size() < batch_size) out.batch.push_back(bounds.sample_uniform(rng));
  return out;
}

double expected_improvement(double best, double mu, double sigma) {
  const double gap = best - mu;
  if (!(sigma > 0.0)) return std::max(gap, 0.0);
  const double z = gap / sigma;
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, gap * normal_cdf(z) + sigma * pdf);
}

double eim_value(std::span<const gp::Prediction> prediction, std::span<const ObjectiveVector> front) {
  if (front.empty()) throw UsageError("eim_value: empty front");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : front) {
    if (f.size() != prediction.size()) throw UsageError("eim_value: objective count mismatch");
    double sum = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
      const double ei = expected_improvement(f[k], prediction[k].mean, prediction[k].stddev);
      sum += ei * ei;
    }
    best = std::min(best, std::sqrt(sum));
  }
  return best;
}

ParameterVector eim_propose(std::span<const gp::GPModel> models, std::span<const ObjectiveVector> front,
                            const EimOptions& options, Rng& rng) {
  if (models.empty()) throw UsageError("eim_propose: no models");
  if (options.probes < 1 || options.local_starts < 1) throw UsageError("eim_propose: need probes and starts");
  const BoxBounds& bounds = models.front().bounds();
  const std::size_t n = bounds.dim();

  auto score = [&](std::span<const ParameterVector> thetas) {
    std::vector<std::vector<gp::Prediction>> per_model;
    for (const auto& model : models) per_model.push_back(model.predict_many(thetas));
    std::vector<double> values(thetas.size());
    std::vector<gp::Prediction> p(models.size());
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      for (std::size_t k = 0; k < models.size(); ++k) p[k] = per_model[k][i];
      values[i] = eim_value(p, front);
    }
    return values;
  };

  std::vector<ParameterVector> probes(options.probes);
  for (auto& p : probes) p = bounds.sample_uniform(rng);
  const auto probe_values = score(probes);
  std::vector<std::size_t> order(probes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return probe_values[a] > probe_values[b]; });

  ParameterVector best = probes[order.front()];
  double best_value = probe_values[order.front()];
  constexpr double kMinStep = 1e-4;
  for (std::size_t s = 0; s < std::min(options.local_starts, order.size()); ++s) {
    auto unit = bounds.to_unit(probes[order[s]]);
    double value = probe_values[order[s]];
    double step = options.initial_step;
    for (std::size_t it = 0; it < options.local_iterations && step >= kMinStep; ++it) {
      std::vector<ParameterVector> neighbors;
      for (std::size_t d = 0; d < n; ++d) {
        for (double sign : {-1.0, 1.0}) {
          auto u = unit;
          u[d] = std::clamp(u[d] + sign * step, 0.0, 1.0);
          neighbors.push_back(bounds.clip(bounds.from_unit(u)));
        }
      }
      const auto values = score(neighbors);
      const auto arg = static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
      if (values[arg] > value) {
        value = values[arg];
        unit = bounds.to_unit(neighbors[arg]);
      } else {
        step *= 0.5;
      }
    }
    if (value > best_value) {
      best_value = value;
      best = bounds.clip(bounds.from_unit(unit));
    }
  }
  return best;
}

RunRecord run_mobo(const BenchmarkProblem& problem, const MoboConfig& config, const RunLimits& limits,
                   std::uint64_t seed, std::string variant_name, const IterationObserver& observer) {
  config.validate();
  if (limits.budget_steps <= 0) throw UsageError("run_mobo: budget must be positive");
  Rng rng(seed);
  BudgetedEvaluator evaluator(problem, limits);
  std::vector<IterationTrace> traces;
  std::vector<std::string> notes;
  const std::size_t m = problem.num_objectives;
  const auto& bounds = problem.bounds;

  // initial design
  std::vector<ParameterVector> init(config.n_init);
  for (auto& t : init) t = bounds.sample_uniform(rng);
  evaluator.evaluate(init);
  if (evaluator.dataset().num_successes() == 0) {
    spdlog::info("{}: all {} initial samples crashed, sampling until a success", variant_name, config.n_init);
    notes.push_back("all initial samples crashed; continued uniform sampling until the first success");
    while (evaluator.dataset().num_successes() == 0 && !evaluator.exhausted()) {
      const ParameterVector extra = bounds.sample_uniform(rng);
      evaluator.evaluate(std::span<const ParameterVector>(&extra, 1));
    }
  }
  traces.push_back(evaluator.close_iteration(0, evaluator.num_evaluations(), 0.0));

  std::vector<std::optional<gp::Hyperparameters>> success_warm;
  std::vector<std::optional<gp::Hyperparameters>> main_warm;
  double prev_overhead = 0.0;
  double prev_eval_seconds = 0.0;
  bool capped_noted = false;
  bool fallback_noted = false;

  for (std::int64_t k = 1; !evaluator.exhausted() && evaluator.dataset().num_successes() > 0; ++k) {
    Stopwatch watch;
    const Dataset data = evaluator.dataset();
    const auto front = *current_front(data);
    const auto s = split(data, m);
    const auto j_max = *worst_successful(data);

    // training targets: successes plus one stand-in value per crash, in dataset order
    std::vector<ObjectiveVector> stand_ins;
    double gamma = 0.0;
    std::vector<gp::GPModel> success_models;
    if (config.crash_handling == CrashHandling::virtual_points) {
      success_models = fit_models(bounds, s.success_thetas, s.success_targets, config.fit, success_warm, rng);
      if (!s.crash_thetas.empty()) {
        auto vp = vdp_from_models(success_models, s.crash_thetas, front, j_max, config.gamma_init, config.gamma_step,
                                  config.max_gamma_escalations);
        check_vdp_invariant(vp, front);
        if (vp.capped && !capped_noted) {
          notes.push_back("gamma escalation limit reached at iteration " + std::to_string(k));
          capped_noted = true;
        }
        gamma = vp.gamma;
        stand_ins = std::move(vp.values);
      } else {
        gamma = config.gamma_init;
      }
    } else {
      const ObjectiveVector penalty = config.penalty.value_or(j_max);
      if (penalty.size() != m) throw UsageError("run_mobo: penalty needs one value per objective");
      stand_ins.assign(s.crash_thetas.size(), penalty);
    }

    std::vector<gp::GPModel> models;
    if (config.crash_handling == CrashHandling::virtual_points && s.crash_thetas.empty()) {
      models = std::move(success_models);
    } else {
      std::vector<ParameterVector> thetas;
      std::vector<std::vector<double>> targets(m);
      std::size_t next_crash = 0;
      for (const auto& e : data) {
        thetas.push_back(e.theta);
        const ObjectiveVector& y = e.crash_ok ? *e.objectives : stand_ins[next_crash++];
        for (std::size_t q = 0; q < m; ++q) targets[q].push_back(y[q]);
      }
      models = fit_models(bounds, thetas, targets, config.fit, main_warm, rng);
    }

    std::size_t batch_size = 1;
    if (config.acquisition == Acquisition::eim) {
      batch_size = 1;
    } else if (!config.batch_schedule.empty()) {
      batch_size = config.batch_schedule[std::min<std::size_t>(static_cast<std::size_t>(k - 1),
                                                               config.batch_schedule.size() - 1)];
    } else if (!config.adaptive_batch) {
      batch_size = config.constant_batch;
    } else if (k > 1) {
      batch_size = calc_batch_size(prev_overhead, prev_eval_seconds, config.p_overhead_desired);
    }

    std::vector<ParameterVector> batch;
    if (config.acquisition == Acquisition::tsemo) {
      std::vector<ObjectiveVector> successes;
      for (const auto& e : data) {
        if (e.crash_ok) successes.push_back(*e.objectives);
      }
      const auto ref = internal_reference_point(successes);
      auto proposal = tsemo_propose(models, front.objective_points, batch_size, ref, config.tsemo, rng);
      if (proposal.fallback && !fallback_noted) {
        notes.push_back("degenerate sampled landscape at iteration " + std::to_string(k) + "; random proposals used");
        fallback_noted = true;
      }
      batch = std::move(proposal.batch);
    } else {
      batch.push_back(eim_propose(models, front.objective_points, config.eim, rng));
    }
    const double overhead = watch.seconds();

    if (observer) observer({k, front.objective_points, stand_ins, gamma, batch});
    const auto overhead_steps = evaluator.charge_overhead(overhead);
    const auto committed = evaluator.evaluate(batch).size();

    auto trace = evaluator.close_iteration(k, committed, overhead, overhead_steps);
    trace.gamma = gamma;
    trace.front_indices = front.member_indices;
    prev_overhead = overhead;
    prev_eval_seconds = trace.mean_eval_seconds;
    traces.push_back(std::move(trace));
  }
  return evaluator.finish(std::move(variant_name), seed, std::move(traces), std::move(notes));
}

}  // namespace ctune::mobo
