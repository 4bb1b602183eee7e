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

#ifndef CTUNE_GPR_HPP
#define CTUNE_GPR_HPP

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ctune/core.hpp"

namespace ctune::gp {

/// Hyperparameters of a constant-mean GP with anisotropic squared-exponential kernel.
/// All values live in standardized target units and unit-cube input units.
struct Hyperparameters {
  double constant_mean = 0.0;
  double signal_variance = 1.0;
  std::vector<double> lengthscales;
  double noise_variance = 1e-6;

  /// [mean, log sf2, log l_1..l_N, log sn2]
  Eigen::VectorXd pack() const;
  static Hyperparameters unpack(const Eigen::VectorXd& packed);
};

struct FitOptions {
  int restarts = 10;
  int max_iterations = 100;
  /// Lower bound of the noise variance relative to the target variance.
  double noise_floor = 1e-6;
  double noise_ceiling = 1.0;
  double lengthscale_min = 1e-2;
  double lengthscale_max = 1e2;
  double signal_min = 1e-4;
  double signal_max = 1e2;
  double mean_abs_max = 10.0;
  /// Hyperparameters are optimized on a random subset of at most this many points (0 = all);
  /// the returned model is always conditioned on every point.
  std::size_t max_fit_points = 0;
  /// Used as the first start point when present.
  std::optional<Hyperparameters> warm_start;
};

struct Prediction {
  double mean = 0.0;
  double stddev = 0.0;
};

struct LikelihoodValue {
  double value = 0.0;
  Eigen::VectorXd gradient;  // w.r.t. the packed hyperparameter vector
  bool ok = false;
};

/// Log marginal likelihood of standardized targets `y` at unit-cube inputs `x` (rows),
/// and its gradient w.r.t. the packed hyperparameters. `jitter` is added to the diagonal.
LikelihoodValue log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& packed, double jitter = 0.0,
                                        bool with_gradient = true);

/// Trained GP surrogate for one objective.
class GPModel {
public:
  /// Multi-start maximization of the log marginal likelihood.
  static GPModel fit(const BoxBounds& bounds, std::span<const ParameterVector> thetas, std::span<const double> targets,
                     const FitOptions& options, Rng& rng);

  /// Conditions on the data with fixed (standardized-unit) hyperparameters.
  static GPModel with_hyperparameters(const BoxBounds& bounds, std::span<const ParameterVector> thetas,
                                      std::span<const double> targets, Hyperparameters hyper);

  /// Latent posterior mean and standard deviation in original target units.
  Prediction predict(std::span<const double> theta) const;
  std::vector<Prediction> predict_many(std::span<const ParameterVector> thetas) const;

  double log_marginal_likelihood() const { return lml_; }

  const Hyperparameters& hyperparameters() const { return hyper_; }
  const BoxBounds& bounds() const { return bounds_; }
  const Eigen::MatrixXd& train_inputs() const { return x_; }
  const Eigen::VectorXd& train_targets() const { return y_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  const Eigen::MatrixXd& cholesky_factor() const { return chol_; }
  double target_offset() const { return y_offset_; }
  double target_scale() const { return y_scale_; }
  /// Noise variance plus any jitter that was needed for factorization.
  double effective_noise() const { return hyper_.noise_variance + jitter_; }
  std::size_t num_points() const { return static_cast<std::size_t>(x_.rows()); }

private:
  GPModel(BoxBounds bounds) : bounds_(std::move(bounds)) {}
  /// Normalized inputs and standardized targets, not yet conditioned.
  static GPModel prepare(const BoxBounds& bounds, std::span<const ParameterVector> thetas,
                         std::span<const double> targets);
  void condition();

  BoxBounds bounds_;
  Hyperparameters hyper_;
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  double y_offset_ = 0.0;
  double y_scale_ = 1.0;
  double jitter_ = 0.0;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
  double lml_ = 0.0;
};

/// A fixed random-Fourier-feature draw from the GP posterior. Deterministic once built.
class SampledFunction {
public:
  double operator()(std::span<const double> theta) const;
  /// One value per row of `thetas`.
  Eigen::VectorXd evaluate_many(std::span<const ParameterVector> thetas) const;
  std::size_t num_features() const { return static_cast<std::size_t>(phases_.size()); }

private:
  friend SampledFunction sample_posterior(const GPModel&, std::size_t, Rng&);
  SampledFunction(BoxBounds bounds) : bounds_(std::move(bounds)) {}

  BoxBounds bounds_;
  Eigen::MatrixXd frequencies_;  // F x N, acting on unit-cube inputs
  Eigen::VectorXd phases_;
  Eigen::VectorXd weights_;      // already scaled by sqrt(2 sf2 / F)
  double offset_ = 0.0;          // constant mean (standardized)
  double y_offset_ = 0.0;
  double y_scale_ = 1.0;
};

SampledFunction sample_posterior(const GPModel& model, std::size_t n_features, Rng& rng);

}  // namespace ctune::gp

#endif  // CTUNE_GPR_HPP
