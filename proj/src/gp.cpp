#include "mast/gp.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "mast/optimize.hpp"
#include "mast/rng.hpp"

namespace mast::gp {

namespace {

constexpr double kScaleFloor = 1e-12;
constexpr double kTwoPi = 6.283185307179586476925286766559;

struct Factorization {
  Eigen::LLT<MatrixXd> llt;
  double jitter = 0.0;
};

// Cholesky with escalating diagonal jitter; throws after the schedule is spent.
Factorization factorize(const MatrixXd& covariance, const std::vector<double>& jitter_schedule) {
  std::vector<double> tried;
  Factorization out;
  for (std::size_t attempt = 0; attempt <= jitter_schedule.size(); ++attempt) {
    const double jitter = attempt == 0 ? 0.0 : jitter_schedule[attempt - 1];
    tried.push_back(jitter);
    MatrixXd work = covariance;
    if (jitter > 0.0) work.diagonal().array() += jitter;
    out.llt.compute(work);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = jitter;
      return out;
    }
  }
  std::ostringstream msg;
  msg << "covariance factorization failed after jitter:";
  for (double j : tried) msg << ' ' << j;
  throw FactorizationError(msg.str(), std::move(tried));
}

VectorXd noise_diagonal(const KernelParams& params, const std::optional<VectorXd>& per_point_noise,
                        Eigen::Index n) {
  if (per_point_noise) return *per_point_noise;
  return VectorXd::Constant(n, params.noise_variance);
}

OutputTransform standardizing_transform(const VectorXd& targets) {
  OutputTransform t;
  t.mean = targets.mean();
  t.scale = std::max(std::sqrt((targets.array() - t.mean).square().mean()), kScaleFloor);
  return t;
}

}  // namespace

void KernelParams::validate(Eigen::Index expected_dim) const {
  if (lengthscales.size() != expected_dim)
    throw std::invalid_argument("kernel params: lengthscale count does not match input dimension");
  if ((lengthscales.array() <= 0.0).any())
    throw std::invalid_argument("kernel params: lengthscales must be positive");
  if (output_variance <= 0.0)
    throw std::invalid_argument("kernel params: output variance must be positive");
  if (noise_variance < 0.0)
    throw std::invalid_argument("kernel params: noise variance must be non-negative");
}

MatrixXd kernel_matrix(const MatrixXd& x_rows, const MatrixXd& z_rows, const KernelParams& params) {
  if (x_rows.cols() != z_rows.cols())
    throw std::invalid_argument("kernel_matrix: input matrices have different widths");
  params.validate(x_rows.cols());

  // Per-dimension outer differences keep the result exactly symmetric (and its
  // diagonal exactly zero) when the two matrices coincide.
  const Eigen::Index p = x_rows.rows(), q = z_rows.rows();
  MatrixXd sq = MatrixXd::Zero(p, q);
  for (int j = 0; j < params.dim(); ++j) {
    const double inv = 1.0 / params.lengthscales[j];
    const VectorXd xc = x_rows.col(j) * inv;
    const VectorXd zc = z_rows.col(j) * inv;
    sq.noalias() +=
        (xc.replicate(1, q) - zc.transpose().replicate(p, 1)).cwiseAbs2();
  }
  return params.output_variance * (-0.5 * sq.array()).exp().matrix();
}

LogMarginal log_marginal_likelihood(const KernelParams& params, const MatrixXd& inputs,
                                    const VectorXd& targets,
                                    const std::optional<VectorXd>& per_point_noise,
                                    const std::vector<double>& jitter_schedule) {
  const Eigen::Index n = inputs.rows();
  if (n < 1) throw std::invalid_argument("log_marginal_likelihood: empty training set");
  if (targets.size() != n)
    throw std::invalid_argument("log_marginal_likelihood: target length mismatch");
  if (per_point_noise && per_point_noise->size() != n)
    throw std::invalid_argument("log_marginal_likelihood: noise vector length mismatch");

  const MatrixXd kernel_only = kernel_matrix(inputs, inputs, params);
  MatrixXd cov = kernel_only;
  cov.diagonal() += noise_diagonal(params, per_point_noise, n);
  auto fact = factorize(cov, jitter_schedule);

  const VectorXd alpha = fact.llt.solve(targets);
  const double log_det = 2.0 * fact.llt.matrixLLT().diagonal().array().log().sum();

  LogMarginal out;
  out.jitter_used = fact.jitter;
  out.value = -0.5 * targets.dot(alpha) - 0.5 * log_det -
              0.5 * static_cast<double>(n) * std::log(kTwoPi);

  // d/d(log theta) L = 1/2 tr((alpha alpha^T - Ktilde^-1) dK/d(log theta)).
  const MatrixXd kinv = fact.llt.solve(MatrixXd::Identity(n, n));
  const MatrixXd a = alpha * alpha.transpose() - kinv;

  const int d = params.dim();
  const bool noise_entry = !per_point_noise.has_value();
  out.gradient.resize(d + 1 + (noise_entry ? 1 : 0));
  for (int j = 0; j < d; ++j) {
    const VectorXd col = inputs.col(j);
    MatrixXd sq = col.replicate(1, n) - col.transpose().replicate(n, 1);
    sq = sq.cwiseProduct(sq) / (params.lengthscales[j] * params.lengthscales[j]);
    out.gradient[j] = 0.5 * a.cwiseProduct(kernel_only.cwiseProduct(sq)).sum();
  }
  out.gradient[d] = 0.5 * a.cwiseProduct(kernel_only).sum();
  if (noise_entry) out.gradient[d + 1] = 0.5 * params.noise_variance * a.trace();
  return out;
}

TrainedGp TrainedGp::condition(KernelParams params, MatrixXd inputs, VectorXd targets,
                               std::optional<VectorXd> per_point_noise,
                               std::optional<OutputTransform> transform,
                               const std::vector<double>& jitter_schedule) {
  const Eigen::Index n = inputs.rows();
  if (n < 1) throw std::invalid_argument("condition: empty training set");
  if (targets.size() != n) throw std::invalid_argument("condition: target length mismatch");
  params.validate(inputs.cols());
  if (per_point_noise) {
    if (per_point_noise->size() != n)
      throw std::invalid_argument("condition: noise vector length mismatch");
    if ((per_point_noise->array() < 0.0).any())
      throw std::invalid_argument("condition: negative per-point noise");
  }

  TrainedGp gp;
  gp.transform_ = transform ? *transform : standardizing_transform(targets);
  gp.params_ = std::move(params);
  gp.inputs_ = std::move(inputs);
  gp.targets_std_ = (targets.array() - gp.transform_.mean) / gp.transform_.scale;
  gp.per_point_noise_ = std::move(per_point_noise);

  MatrixXd cov = kernel_matrix(gp.inputs_, gp.inputs_, gp.params_);
  const double s2 = gp.transform_.scale * gp.transform_.scale;
  if (gp.per_point_noise_)
    cov.diagonal() += (gp.per_point_noise_->array() / s2).matrix();
  else
    cov.diagonal().array() += gp.params_.noise_variance;

  auto fact = factorize(cov, jitter_schedule);
  gp.jitter_used_ = fact.jitter;
  gp.factor_ = fact.llt.matrixL();
  gp.dual_weights_ = fact.llt.solve(gp.targets_std_);
  return gp;
}

TrainedGp TrainedGp::from_parts(KernelParams params, MatrixXd inputs, VectorXd targets_std,
                                std::optional<VectorXd> per_point_noise,
                                OutputTransform transform, MatrixXd factor,
                                VectorXd dual_weights, double jitter_used) {
  TrainedGp gp;
  gp.params_ = std::move(params);
  gp.inputs_ = std::move(inputs);
  gp.targets_std_ = std::move(targets_std);
  gp.per_point_noise_ = std::move(per_point_noise);
  gp.transform_ = transform;
  gp.factor_ = std::move(factor);
  gp.dual_weights_ = std::move(dual_weights);
  gp.jitter_used_ = jitter_used;
  return gp;
}

Prediction TrainedGp::predict(const MatrixXd& query_rows) const {
  if (query_rows.cols() != inputs_.cols())
    throw std::invalid_argument("predict: query dimension mismatch");
  const MatrixXd cross = kernel_matrix(inputs_, query_rows, params_);

  Prediction out;
  out.mean = cross.transpose() * dual_weights_;
  const MatrixXd v = factor_.triangularView<Eigen::Lower>().solve(cross);
  out.variance =
      (params_.output_variance - v.colwise().squaredNorm().transpose().array()).cwiseMax(0.0);

  const double s2 = transform_.scale * transform_.scale;
  out.mean = (out.mean.array() * transform_.scale + transform_.mean).matrix();
  out.variance *= s2;
  return out;
}

std::vector<std::pair<double, double>> default_log_bounds(int dim, bool learn_noise) {
  std::vector<std::pair<double, double>> bounds;
  bounds.reserve(dim + 2);
  for (int i = 0; i < dim; ++i) bounds.emplace_back(std::log(1e-3), std::log(10.0));
  bounds.emplace_back(std::log(1e-4), std::log(1e2));
  if (learn_noise) bounds.emplace_back(std::log(1e-8), std::log(1.0));
  return bounds;
}

TrainedGp fit_gp(const MatrixXd& inputs, const VectorXd& targets, const FitOptions& options,
                 const std::optional<VectorXd>& per_point_noise) {
  const Eigen::Index n = inputs.rows();
  const int d = static_cast<int>(inputs.cols());
  if (n < 1) throw std::invalid_argument("fit_gp: empty training set");
  if (targets.size() != n) throw std::invalid_argument("fit_gp: target length mismatch");
  if (options.learn_noise && n < 2)
    throw std::invalid_argument("fit_gp: at least two observations required to learn noise");
  if (per_point_noise) {
    if (options.learn_noise)
      throw std::invalid_argument("fit_gp: per-point noise requires learn_noise = false");
    if (per_point_noise->size() != n)
      throw std::invalid_argument("fit_gp: noise vector length mismatch");
    if ((per_point_noise->array() < 0.0).any())
      throw std::invalid_argument("fit_gp: negative per-point noise");
  }
  if (options.restarts < 1) throw std::invalid_argument("fit_gp: restarts must be positive");

  const OutputTransform transform = standardizing_transform(targets);
  const VectorXd y_std = (targets.array() - transform.mean) / transform.scale;
  const double s2 = transform.scale * transform.scale;

  // Noise handed to the marginal likelihood lives in standardized units.
  std::optional<VectorXd> noise_std;
  if (per_point_noise) noise_std = (per_point_noise->array() / s2).matrix();
  const double fixed_noise_std_units = options.fixed_noise_variance / s2;

  const int n_hyper = d + 1 + (options.learn_noise ? 1 : 0);
  auto bounds = options.log_bounds.empty() ? default_log_bounds(d, options.learn_noise)
                                           : options.log_bounds;
  if (static_cast<int>(bounds.size()) != n_hyper)
    throw std::invalid_argument("fit_gp: bounds length does not match hyperparameter count");
  for (const auto& [lo, hi] : bounds)
    if (!(lo < hi)) throw std::invalid_argument("fit_gp: bounds must satisfy lower < upper");

  VectorXd lower(n_hyper), upper(n_hyper);
  for (int i = 0; i < n_hyper; ++i) {
    lower[i] = bounds[i].first;
    upper[i] = bounds[i].second;
  }

  auto params_from = [&](const VectorXd& log_theta) {
    KernelParams p;
    p.lengthscales = log_theta.head(d).array().exp();
    p.output_variance = std::exp(log_theta[d]);
    p.noise_variance =
        options.learn_noise ? std::exp(log_theta[d + 1]) : fixed_noise_std_units;
    return p;
  };

  // Log-space hyperpriors (standardized targets, unit-cube inputs). Wide
  // enough to leave informative fits untouched, strong enough to break the
  // near-ties with the degenerate optima: all-noise (noise at the data
  // variance, vanishing signal) and memorization (lengthscales far below the
  // point spacing). Noise and signal use one-sided hinges so that clean
  // interpolable data still drives the noise to its floor.
  constexpr double kLengthscaleSd = 1.0;   // two-sided around sqrt(D)
  constexpr double kSignalSd = 1.5;        // penalize signal variance below 1
  constexpr double kNoiseSd = 1.5;         // penalize noise variance above 1e-3
  // Typical pairwise distances grow with sqrt(D); center the lengthscale
  // prior there so higher-dimensional fits favor commensurately smoother fits.
  const double lengthscale_loc = 0.5 * std::log(static_cast<double>(d));
  const double noise_knee = std::log(1e-3);
  auto add_prior = [&](const VectorXd& log_theta, double& value, VectorXd& grad) {
    auto pull = [&](int idx, double offset, double sd) {
      const double z = offset / (sd * sd);
      value -= 0.5 * offset * z;
      grad[idx] -= z;
    };
    for (int i = 0; i < d; ++i) pull(i, log_theta[i] - lengthscale_loc, kLengthscaleSd);
    if (log_theta[d] < 0.0) pull(d, log_theta[d], kSignalSd);
    if (options.learn_noise && log_theta[d + 1] > noise_knee)
      pull(d + 1, log_theta[d + 1] - noise_knee, kNoiseSd);
  };

  opt::Objective objective = [&](const VectorXd& log_theta, double& value, VectorXd& grad) {
    try {
      auto lm = log_marginal_likelihood(params_from(log_theta), inputs, y_std, noise_std,
                                        options.jitter_schedule);
      value = lm.value;
      grad = lm.gradient.head(n_hyper);  // drop the noise entry when it is held fixed
      if (options.use_hyperprior) add_prior(log_theta, value, grad);
      return true;
    } catch (const FactorizationError&) {
      return false;
    }
  };

  bool have_best = false;
  double best_value = 0.0;
  VectorXd best_theta;
  std::string last_failure = "no restart evaluated";

  for (int r = 0; r < options.restarts; ++r) {
    VectorXd theta(n_hyper);
    if (r == 0) {
      for (int i = 0; i < d; ++i) theta[i] = std::log(0.5);
      theta[d] = 0.0;  // signal variance 1
      if (options.learn_noise) theta[d + 1] = std::log(1e-2);
    } else {
      Rng rng(seed_mix(options.seed, static_cast<std::uint64_t>(r)));
      for (int i = 0; i < n_hyper; ++i) theta[i] = rng.uniform(lower[i], upper[i]);
    }

    auto result = opt::maximize_box(objective, theta, lower, upper, options.max_iterations);
    if (!result.feasible) {
      last_failure = "restart " + std::to_string(r) + " infeasible at start";
      continue;
    }
    if (!have_best || result.value > best_value) {
      have_best = true;
      best_value = result.value;
      best_theta = result.x;
    }
  }
  if (!have_best) throw FitError("fit_gp: every restart failed (" + last_failure + ")");

  KernelParams final_params = params_from(best_theta);
  if (per_point_noise)
    return TrainedGp::condition(std::move(final_params), inputs, targets, *per_point_noise,
                                transform, options.jitter_schedule);
  return TrainedGp::condition(std::move(final_params), inputs, targets, std::nullopt, transform,
                              options.jitter_schedule);
}

}  // namespace mast::gp
