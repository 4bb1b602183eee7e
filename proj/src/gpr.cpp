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

#include "ctune/gpr.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

namespace ctune::gp {

namespace {

constexpr double kMaxJitter = 1e-2;

Eigen::MatrixXd unit_inputs(const BoxBounds& bounds, std::span<const ParameterVector> thetas) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(thetas.size()), static_cast<Eigen::Index>(bounds.dim()));
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    if (thetas[i].size() != bounds.dim()) throw UsageError("gp: input dimension mismatch");
    const auto u = bounds.to_unit(thetas[i]);
    for (std::size_t d = 0; d < u.size(); ++d) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = u[d];
  }
  return x;
}

// Squared-exponential kernel without noise; `inv_l2` holds 1 / l_d^2.
Eigen::MatrixXd se_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double sf2, const Eigen::VectorXd& inv_l2) {
  Eigen::MatrixXd k(a.rows(), b.rows());
  const bool symmetric = &a == &b;
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = symmetric ? j : 0; i < a.rows(); ++i) {
      double r2 = 0.0;
      for (Eigen::Index d = 0; d < a.cols(); ++d) {
        const double diff = a(i, d) - b(j, d);
        r2 += diff * diff * inv_l2(d);
      }
      k(i, j) = sf2 * std::exp(-0.5 * r2);
      if (symmetric) k(j, i) = k(i, j);
    }
  }
  return k;
}

Eigen::VectorXd inverse_sq_lengthscales(const Hyperparameters& h) {
  Eigen::VectorXd inv(static_cast<Eigen::Index>(h.lengthscales.size()));
  for (std::size_t d = 0; d < h.lengthscales.size(); ++d) {
    inv(static_cast<Eigen::Index>(d)) = 1.0 / (h.lengthscales[d] * h.lengthscales[d]);
  }
  return inv;
}

struct PackedBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

PackedBounds packed_bounds(std::size_t dim, const FitOptions& o) {
  const auto p = static_cast<Eigen::Index>(dim + 3);
  PackedBounds b{Eigen::VectorXd(p), Eigen::VectorXd(p)};
  b.lower(0) = -o.mean_abs_max;
  b.upper(0) = o.mean_abs_max;
  b.lower(1) = std::log(o.signal_min);
  b.upper(1) = std::log(o.signal_max);
  for (Eigen::Index d = 0; d < static_cast<Eigen::Index>(dim); ++d) {
    b.lower(2 + d) = std::log(o.lengthscale_min);
    b.upper(2 + d) = std::log(o.lengthscale_max);
  }
  b.lower(p - 1) = std::log(o.noise_floor);
  b.upper(p - 1) = std::log(std::max(o.noise_ceiling, o.noise_floor));
  return b;
}

Eigen::VectorXd clamp_to(const Eigen::VectorXd& v, const PackedBounds& b) {
  return v.cwiseMax(b.lower).cwiseMin(b.upper);
}

// Projected limited-memory BFGS on f = -LML inside the packed box.
struct Optimum {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();  // -LML
};

Optimum minimize_negative_lml(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Eigen::VectorXd start,
                              const PackedBounds& bounds, int max_iterations) {
  auto objective = [&](const Eigen::VectorXd& p, Eigen::VectorXd& grad) {
    auto r = log_marginal_likelihood(x, y, p, 0.0, true);
    if (!r.ok || !std::isfinite(r.value)) {
      grad = Eigen::VectorXd::Zero(p.size());
      return std::numeric_limits<double>::infinity();
    }
    grad = -r.gradient;
    return -r.value;
  };

  Eigen::VectorXd p = clamp_to(start, bounds);
  Eigen::VectorXd g;
  double f = objective(p, g);
  if (!std::isfinite(f)) return {p, f};

  constexpr int kMemory = 8;
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> memory;  // (s, y) pairs

  auto free_mask = [&](const Eigen::VectorXd& at, const Eigen::VectorXd& dir) {
    Eigen::VectorXd d = dir;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if ((at(i) <= bounds.lower(i) && d(i) < 0.0) || (at(i) >= bounds.upper(i) && d(i) > 0.0)) d(i) = 0.0;
    }
    return d;
  };

  for (int it = 0; it < max_iterations; ++it) {
    // Two-loop recursion.
    Eigen::VectorXd q = g;
    std::vector<double> alphas(memory.size());
    for (int i = static_cast<int>(memory.size()) - 1; i >= 0; --i) {
      const auto& [s, yv] = memory[static_cast<std::size_t>(i)];
      alphas[static_cast<std::size_t>(i)] = s.dot(q) / yv.dot(s);
      q -= alphas[static_cast<std::size_t>(i)] * yv;
    }
    if (!memory.empty()) {
      const auto& [s, yv] = memory.back();
      q *= s.dot(yv) / yv.dot(yv);
    }
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const auto& [s, yv] = memory[i];
      const double beta = yv.dot(q) / yv.dot(s);
      q += (alphas[i] - beta) * s;
    }
    Eigen::VectorXd dir = free_mask(p, -q);
    if (!(dir.dot(g) < 0.0)) {
      memory.clear();
      dir = free_mask(p, -g);
      if (dir.norm() < 1e-10) break;
    }

    double step = memory.empty() ? std::min(1.0, 1.0 / std::max(1e-12, dir.norm())) : 1.0;
    Eigen::VectorXd p_new;
    Eigen::VectorXd g_new;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      p_new = clamp_to(p + step * dir, bounds);
      f_new = objective(p_new, g_new);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * g.dot(p_new - p)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Eigen::VectorXd s = p_new - p;
    const Eigen::VectorXd yv = g_new - g;
    const double improvement = f - f_new;
    p = p_new;
    g = g_new;
    f = f_new;
    if (s.dot(yv) > 1e-10) {
      memory.emplace_back(s, yv);
      if (static_cast<int>(memory.size()) > kMemory) memory.pop_front();
    }
    if (improvement < 1e-9 * (1.0 + std::abs(f)) || free_mask(p, -g).norm() < 1e-7) break;
  }
  return {p, f};
}

}  // namespace

Eigen::VectorXd Hyperparameters::pack() const {
  const auto n = static_cast<Eigen::Index>(lengthscales.size());
  Eigen::VectorXd p(n + 3);
  p(0) = constant_mean;
  p(1) = std::log(signal_variance);
  for (Eigen::Index d = 0; d < n; ++d) p(2 + d) = std::log(lengthscales[static_cast<std::size_t>(d)]);
  p(n + 2) = std::log(noise_variance);
  return p;
}

Hyperparameters Hyperparameters::unpack(const Eigen::VectorXd& packed) {
  if (packed.size() < 4) throw UsageError("Hyperparameters::unpack: vector too short");
  Hyperparameters h;
  const auto n = packed.size() - 3;
  h.constant_mean = packed(0);
  h.signal_variance = std::exp(packed(1));
  h.lengthscales.resize(static_cast<std::size_t>(n));
  for (Eigen::Index d = 0; d < n; ++d) h.lengthscales[static_cast<std::size_t>(d)] = std::exp(packed(2 + d));
  h.noise_variance = std::exp(packed(n + 2));
  return h;
}

LikelihoodValue log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& packed, double jitter, bool with_gradient) {
  const auto n = x.rows();
  const auto dim = x.cols();
  if (packed.size() != dim + 3 || y.size() != n) throw UsageError("log_marginal_likelihood: dimension mismatch");

  const double mean = packed(0);
  const double sf2 = std::exp(packed(1));
  const double sn2 = std::exp(packed(dim + 2));
  Eigen::VectorXd inv_l2(dim);
  for (Eigen::Index d = 0; d < dim; ++d) inv_l2(d) = std::exp(-2.0 * packed(2 + d));

  const Eigen::MatrixXd kf = se_kernel(x, x, sf2, inv_l2);
  Eigen::MatrixXd k = kf;
  k.diagonal().array() += sn2 + jitter;

  LikelihoodValue out;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) return out;

  const Eigen::VectorXd r = y.array() - mean;
  const Eigen::VectorXd alpha = llt.solve(r);
  const Eigen::MatrixXd& l = llt.matrixLLT();
  double log_det_half = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(l(i, i) > 0.0)) return out;
    log_det_half += std::log(l(i, i));
  }
  out.value = -0.5 * r.dot(alpha) - log_det_half - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  out.ok = std::isfinite(out.value);
  if (!with_gradient || !out.ok) return out;

  // d LML / d p_j = 0.5 tr((alpha alpha^T - K^-1) dK/dp_j)
  const Eigen::MatrixXd k_inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd w = alpha * alpha.transpose() - k_inv;
  const Eigen::MatrixXd wk = w.cwiseProduct(kf);

  out.gradient.resize(dim + 3);
  out.gradient(0) = alpha.sum();
  out.gradient(1) = 0.5 * wk.sum();
  for (Eigen::Index d = 0; d < dim; ++d) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double diff = x(i, d) - x(j, d);
        acc += wk(i, j) * diff * diff;
      }
    }
    out.gradient(2 + d) = 0.5 * acc * inv_l2(d);
  }
  out.gradient(dim + 2) = 0.5 * sn2 * w.trace();
  return out;
}

GPModel GPModel::prepare(const BoxBounds& bounds, std::span<const ParameterVector> thetas,
                         std::span<const double> targets) {
  if (thetas.empty() || thetas.size() != targets.size()) throw UsageError("GPModel: need n >= 1 matching inputs/targets");
  if (!all_finite(targets)) throw UsageError("GPModel: targets must be finite");
  GPModel m(bounds);
  m.x_ = unit_inputs(bounds, thetas);
  const auto n = static_cast<Eigen::Index>(targets.size());
  Eigen::VectorXd raw(n);
  for (Eigen::Index i = 0; i < n; ++i) raw(i) = targets[static_cast<std::size_t>(i)];
  m.y_offset_ = raw.mean();
  const double var = (raw.array() - m.y_offset_).square().mean();
  m.y_scale_ = var > 1e-300 ? std::sqrt(var) : 1.0;
  m.y_ = (raw.array() - m.y_offset_) / m.y_scale_;
  return m;
}

GPModel GPModel::with_hyperparameters(const BoxBounds& bounds, std::span<const ParameterVector> thetas,
                                      std::span<const double> targets, Hyperparameters hyper) {
  if (hyper.lengthscales.size() != bounds.dim()) throw UsageError("GPModel: one lengthscale per input dimension");
  GPModel m = prepare(bounds, thetas, targets);
  m.hyper_ = std::move(hyper);
  m.condition();
  return m;
}

void GPModel::condition() {
  const Eigen::VectorXd inv_l2 = inverse_sq_lengthscales(hyper_);
  const Eigen::MatrixXd kf = se_kernel(x_, x_, hyper_.signal_variance, inv_l2);
  jitter_ = 0.0;
  for (double extra = 0.0;;) {
    Eigen::MatrixXd k = kf;
    k.diagonal().array() += hyper_.noise_variance + extra;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() == Eigen::Success && (llt.matrixLLT().diagonal().array() > 0.0).all()) {
      chol_ = llt.matrixL();
      jitter_ = extra;
      const Eigen::VectorXd r = y_.array() - hyper_.constant_mean;
      alpha_ = llt.solve(r);
      lml_ = -0.5 * r.dot(alpha_) - chol_.diagonal().array().log().sum() -
             0.5 * static_cast<double>(y_.size()) * std::log(2.0 * std::numbers::pi);
      return;
    }
    extra = (extra == 0.0) ? 1e-6 : extra * 10.0;
    if (extra > kMaxJitter * (1.0 + 1e-9)) throw std::runtime_error("GPModel: kernel matrix not positive definite");
  }
}

GPModel GPModel::fit(const BoxBounds& bounds, std::span<const ParameterVector> thetas, std::span<const double> targets,
                     const FitOptions& options, Rng& rng) {
  if (options.restarts < 1) throw UsageError("GPModel::fit: restarts must be >= 1");
  Hyperparameters init;
  init.lengthscales.assign(bounds.dim(), 0.3);
  init.noise_variance = std::max(1e-4, options.noise_floor);
  GPModel base = prepare(bounds, thetas, targets);

  const auto pb = packed_bounds(bounds.dim(), options);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto log_uniform = [&](double lo, double hi) { return std::log(lo) + u(rng) * (std::log(hi) - std::log(lo)); };

  Eigen::MatrixXd fit_x = base.x_;
  Eigen::VectorXd fit_y = base.y_;
  const auto n = static_cast<std::size_t>(base.x_.rows());
  if (options.max_fit_points > 0 && n > options.max_fit_points) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = 0; i < options.max_fit_points; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(order[i], order[pick(rng)]);
    }
    order.resize(options.max_fit_points);
    std::sort(order.begin(), order.end());
    fit_x.resize(static_cast<Eigen::Index>(order.size()), base.x_.cols());
    fit_y.resize(static_cast<Eigen::Index>(order.size()));
    for (std::size_t i = 0; i < order.size(); ++i) {
      fit_x.row(static_cast<Eigen::Index>(i)) = base.x_.row(static_cast<Eigen::Index>(order[i]));
      fit_y(static_cast<Eigen::Index>(i)) = base.y_(static_cast<Eigen::Index>(order[i]));
    }
  }

  Optimum best;
  for (int r = 0; r < options.restarts; ++r) {
    Eigen::VectorXd start;
    if (r == 0) {
      start = options.warm_start && options.warm_start->lengthscales.size() == bounds.dim() ? options.warm_start->pack()
                                                                                            : init.pack();
    } else {
      start.resize(pb.lower.size());
      start(0) = -1.0 + 2.0 * u(rng);
      start(1) = log_uniform(0.1, 10.0);
      for (std::size_t d = 0; d < bounds.dim(); ++d) start(2 + static_cast<Eigen::Index>(d)) = log_uniform(0.05, 2.0);
      start(start.size() - 1) = log_uniform(options.noise_floor, std::max(options.noise_floor, 1e-2));
    }
    auto opt = minimize_negative_lml(fit_x, fit_y, start, pb, options.max_iterations);
    if (opt.value < best.value) best = std::move(opt);
  }
  if (!std::isfinite(best.value)) throw std::runtime_error("GPModel::fit: likelihood could not be evaluated at any start");

  base.hyper_ = Hyperparameters::unpack(best.x);
  base.condition();
  return base;
}

Prediction GPModel::predict(std::span<const double> theta) const {
  if (theta.size() != bounds_.dim()) throw UsageError("GPModel::predict: dimension mismatch");
  const auto u = bounds_.to_unit(theta);
  const auto n = x_.rows();
  Eigen::VectorXd ks(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double r2 = 0.0;
    for (Eigen::Index d = 0; d < x_.cols(); ++d) {
      const double diff = x_(i, d) - u[static_cast<std::size_t>(d)];
      r2 += diff * diff / (hyper_.lengthscales[static_cast<std::size_t>(d)] * hyper_.lengthscales[static_cast<std::size_t>(d)]);
    }
    ks(i) = hyper_.signal_variance * std::exp(-0.5 * r2);
  }
  const double mu = hyper_.constant_mean + ks.dot(alpha_);
  const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(ks);
  const double var = std::max(0.0, hyper_.signal_variance - v.squaredNorm());
  return {mu * y_scale_ + y_offset_, std::sqrt(var) * y_scale_};
}

std::vector<Prediction> GPModel::predict_many(std::span<const ParameterVector> thetas) const {
  if (thetas.empty()) return {};
  const Eigen::MatrixXd u = unit_inputs(bounds_, thetas);
  const Eigen::MatrixXd ks = se_kernel(u, x_, hyper_.signal_variance, inverse_sq_lengthscales(hyper_));
  const Eigen::VectorXd mu = (ks * alpha_).array() + hyper_.constant_mean;
  const Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(ks.transpose());
  std::vector<Prediction> out(thetas.size());
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    const double var = std::max(0.0, hyper_.signal_variance - v.col(c).squaredNorm());
    out[i] = {mu(c) * y_scale_ + y_offset_, std::sqrt(var) * y_scale_};
  }
  return out;
}

double SampledFunction::operator()(std::span<const double> theta) const {
  const auto u = bounds_.to_unit(theta);
  double acc = 0.0;
  for (Eigen::Index f = 0; f < phases_.size(); ++f) {
    double z = phases_(f);
    for (Eigen::Index d = 0; d < frequencies_.cols(); ++d) z += frequencies_(f, d) * u[static_cast<std::size_t>(d)];
    acc += weights_(f) * std::cos(z);
  }
  return (offset_ + acc) * y_scale_ + y_offset_;
}

Eigen::VectorXd SampledFunction::evaluate_many(std::span<const ParameterVector> thetas) const {
  const auto p = static_cast<Eigen::Index>(thetas.size());
  Eigen::MatrixXd u(p, frequencies_.cols());
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto row = bounds_.to_unit(thetas[static_cast<std::size_t>(i)]);
    for (Eigen::Index d = 0; d < u.cols(); ++d) u(i, d) = row[static_cast<std::size_t>(d)];
  }
  Eigen::MatrixXd z = u * frequencies_.transpose();
  z.rowwise() += phases_.transpose();
  const Eigen::VectorXd values = z.array().cos().matrix() * weights_;
  return ((values.array() + offset_) * y_scale_ + y_offset_).matrix();
}

SampledFunction sample_posterior(const GPModel& model, std::size_t n_features, Rng& rng) {
  if (n_features < 1) throw UsageError("sample_posterior: need at least one feature");
  const auto& h = model.hyperparameters();
  const auto dim = static_cast<Eigen::Index>(model.bounds().dim());
  const auto f = static_cast<Eigen::Index>(n_features);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

  SampledFunction s(model.bounds());
  s.frequencies_.resize(f, dim);
  for (Eigen::Index i = 0; i < f; ++i) {
    for (Eigen::Index d = 0; d < dim; ++d) s.frequencies_(i, d) = normal(rng) / h.lengthscales[static_cast<std::size_t>(d)];
  }
  s.phases_.resize(f);
  for (Eigen::Index i = 0; i < f; ++i) s.phases_(i) = phase(rng);

  const auto& x = model.train_inputs();
  const auto n = x.rows();
  const double scale = std::sqrt(2.0 * h.signal_variance / static_cast<double>(f));
  Eigen::MatrixXd phi = x * s.frequencies_.transpose();
  phi.rowwise() += s.phases_.transpose();
  phi = scale * phi.array().cos().matrix();  // n x F

  const double noise = model.effective_noise();
  const Eigen::VectorXd r = model.train_targets().array() - h.constant_mean;
  Eigen::VectorXd prior(f);
  for (Eigen::Index i = 0; i < f; ++i) prior(i) = normal(rng);

  Eigen::VectorXd w;
  if (n <= f) {
    // Pathwise update of a prior weight draw: w = z + Phi^T (Phi Phi^T + s2 I)^-1 (r - Phi z - eps)
    Eigen::VectorXd eps(n);
    for (Eigen::Index i = 0; i < n; ++i) eps(i) = std::sqrt(noise) * normal(rng);
    Eigen::MatrixXd gram = phi * phi.transpose();
    for (double extra = 0.0;;) {
      Eigen::MatrixXd a = gram;
      a.diagonal().array() += noise + extra;
      Eigen::LLT<Eigen::MatrixXd> llt(a);
      if (llt.info() == Eigen::Success) {
        w = prior + phi.transpose() * llt.solve(r - phi * prior - eps);
        break;
      }
      extra = (extra == 0.0) ? 1e-6 : extra * 10.0;
      if (extra > kMaxJitter * (1.0 + 1e-9)) throw std::runtime_error("sample_posterior: feature Gram matrix singular");
    }
  } else {
    // Weight-space posterior N(A^-1 Phi^T r, s2 A^-1) with A = Phi^T Phi + s2 I.
    Eigen::MatrixXd gram = phi.transpose() * phi;
    for (double extra = 0.0;;) {
      Eigen::MatrixXd a = gram;
      a.diagonal().array() += noise + extra;
      Eigen::LLT<Eigen::MatrixXd> llt(a);
      if (llt.info() == Eigen::Success) {
        const Eigen::VectorXd mean = llt.solve(phi.transpose() * r);
        const Eigen::VectorXd dev = llt.matrixU().solve(prior);
        w = mean + std::sqrt(noise + extra) * dev;
        break;
      }
      extra = (extra == 0.0) ? 1e-6 : extra * 10.0;
      if (extra > kMaxJitter * (1.0 + 1e-9)) throw std::runtime_error("sample_posterior: feature Gram matrix singular");
    }
  }
  s.weights_ = scale * w;
  s.offset_ = h.constant_mean;
  s.y_offset_ = model.target_offset();
  s.y_scale_ = model.target_scale();
  return s;
}

}  // namespace ctune::gp
