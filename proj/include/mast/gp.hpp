#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "mast/errors.hpp"

// Exact Gaussian process regression with a squared-exponential ARD kernel.
// Inputs are expected in the unit hypercube; targets are standardized
// internally and every trained model records the transform it used.

namespace mast::gp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct KernelParams {
  VectorXd lengthscales;         // one per input dimension, > 0
  double output_variance = 1.0;  // signal variance, > 0
  double noise_variance = 0.0;   // homoscedastic observation noise, >= 0

  int dim() const { return static_cast<int>(lengthscales.size()); }
  void validate(Eigen::Index expected_dim) const;
};

/// Affine map between original targets y and the standardized values the
/// model is trained on: y_std = (y - mean) / scale.
struct OutputTransform {
  double mean = 0.0;
  double scale = 1.0;
};

struct FitOptions {
  int restarts = 5;
  int max_iterations = 200;
  bool learn_noise = true;
  // Noise variance held fixed when learn_noise is false and no per-point
  // vector is supplied. Given in target units^2, like per-point noise.
  double fixed_noise_variance = 0.0;
  // Optional per-hyperparameter (lower, upper) bounds in log space, laid out
  // as [l_1..l_D, signal variance, noise variance]. Empty selects defaults
  // suited to unit-cube inputs and standardized targets.
  std::vector<std::pair<double, double>> log_bounds;
  std::vector<double> jitter_schedule = {1e-10, 1e-8, 1e-6, 1e-4};
  std::uint64_t seed = 0;
  // Optional mild log-space hyperpriors on the optimized hyperparameters.
  // At a handful of observations the bare marginal likelihood barely
  // separates a good fit from the degenerate all-noise or memorizing optima;
  // the priors break those near-ties while being overwhelmed by any
  // informative fit. Off by default: the plain marginal likelihood is the
  // reference behavior.
  bool use_hyperprior = false;
};

struct Prediction {
  VectorXd mean;      // original output units
  VectorXd variance;  // original output units^2, clamped at 0
};

struct LogMarginal {
  double value = 0.0;
  // d/d(log theta) for [l_1..l_D, output_variance] plus a trailing
  // noise_variance entry when the noise is homoscedastic and learnable.
  VectorXd gradient;
  double jitter_used = 0.0;
};

/// k(x, z) = output_variance * exp(-1/2 * sum_d (x_d - z_d)^2 / l_d^2),
/// evaluated for every row pair of the two matrices.
MatrixXd kernel_matrix(const MatrixXd& x_rows, const MatrixXd& z_rows, const KernelParams& params);

/// Log marginal likelihood of the targets under the kernel, with its analytic
/// gradient in log-hyperparameter space. When per_point_noise is given the
/// noise is fixed and the gradient omits the noise entry.
LogMarginal log_marginal_likelihood(const KernelParams& params, const MatrixXd& inputs,
                                    const VectorXd& targets,
                                    const std::optional<VectorXd>& per_point_noise = std::nullopt,
                                    const std::vector<double>& jitter_schedule = {1e-10, 1e-8, 1e-6,
                                                                                  1e-4});

class TrainedGp {
 public:
  /// Assemble a posterior from explicit hyperparameters (no optimization).
  /// Targets and per-point noise are in original units; when no transform is
  /// given one is computed from the targets (mean / stddev, floored scale).
  static TrainedGp condition(KernelParams params, MatrixXd inputs, VectorXd targets,
                             std::optional<VectorXd> per_point_noise = std::nullopt,
                             std::optional<OutputTransform> transform = std::nullopt,
                             const std::vector<double>& jitter_schedule = {1e-10, 1e-8, 1e-6,
                                                                           1e-4});

  /// Rehydrate a model from previously stored state without refactorizing.
  static TrainedGp from_parts(KernelParams params, MatrixXd inputs, VectorXd targets_std,
                              std::optional<VectorXd> per_point_noise, OutputTransform transform,
                              MatrixXd factor, VectorXd dual_weights, double jitter_used);

  Prediction predict(const MatrixXd& query_rows) const;

  const KernelParams& params() const { return params_; }
  const MatrixXd& train_inputs() const { return inputs_; }
  /// Standardized training targets.
  const VectorXd& train_targets() const { return targets_std_; }
  /// Per-point noise variances exactly as supplied (original units^2).
  const std::optional<VectorXd>& per_point_noise() const { return per_point_noise_; }
  const MatrixXd& factor() const { return factor_; }
  const VectorXd& dual_weights() const { return dual_weights_; }
  OutputTransform output_transform() const { return transform_; }
  double jitter_used() const { return jitter_used_; }
  Eigen::Index size() const { return inputs_.rows(); }

  /// Learned (or fixed) homoscedastic noise variance mapped to original units^2.
  double noise_variance_original() const {
    return params_.noise_variance * transform_.scale * transform_.scale;
  }

 private:
  KernelParams params_;
  MatrixXd inputs_;
  VectorXd targets_std_;
  std::optional<VectorXd> per_point_noise_;
  OutputTransform transform_;
  MatrixXd factor_;        // lower-triangular L with L L^T = K + noise
  VectorXd dual_weights_;  // (K + noise)^-1 y_std
  double jitter_used_ = 0.0;
};

/// Type-II maximum likelihood fit by multi-start bounded quasi-Newton ascent
/// in log-hyperparameter space. A supplied per-point noise vector (original
/// units^2) is held fixed throughout and requires learn_noise = false.
TrainedGp fit_gp(const MatrixXd& inputs, const VectorXd& targets, const FitOptions& options = {},
                 const std::optional<VectorXd>& per_point_noise = std::nullopt);

/// Default log-space bounds for D input dimensions (standardized targets):
/// lengthscales in [1e-3, 10], signal variance in [1e-4, 1e2], noise in [1e-8, 1].
std::vector<std::pair<double, double>> default_log_bounds(int dim, bool learn_noise);

}  // namespace mast::gp
