#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "mast/gp.hpp"
#include "mast/rng.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace mast;

namespace {

gp::KernelParams make_params(const std::vector<double>& ls, double sf2, double s2) {
  gp::KernelParams p;
  p.lengthscales = Eigen::Map<const VectorXd>(ls.data(), static_cast<Eigen::Index>(ls.size()));
  p.output_variance = sf2;
  p.noise_variance = s2;
  return p;
}

MatrixXd random_inputs(Rng& rng, int n, int d) {
  MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = rng.uniform01();
  return x;
}

// Independent finite-difference oracle for the log-marginal gradient.
VectorXd fd_gradient(const gp::KernelParams& params, const MatrixXd& x, const VectorXd& y,
                     const std::optional<VectorXd>& noise, double step) {
  const int d = params.dim();
  const bool learn_noise = !noise.has_value();
  const int n_hyper = d + 1 + (learn_noise ? 1 : 0);
  VectorXd log_theta(n_hyper);
  for (int i = 0; i < d; ++i) log_theta[i] = std::log(params.lengthscales[i]);
  log_theta[d] = std::log(params.output_variance);
  if (learn_noise) log_theta[d + 1] = std::log(params.noise_variance);

  auto value_at = [&](const VectorXd& lt) {
    gp::KernelParams p = params;
    for (int i = 0; i < d; ++i) p.lengthscales[i] = std::exp(lt[i]);
    p.output_variance = std::exp(lt[d]);
    if (learn_noise) p.noise_variance = std::exp(lt[d + 1]);
    return gp::log_marginal_likelihood(p, x, y, noise).value;
  };

  VectorXd g(n_hyper);
  for (int i = 0; i < n_hyper; ++i) {
    VectorXd up = log_theta, dn = log_theta;
    up[i] += step;
    dn[i] -= step;
    g[i] = (value_at(up) - value_at(dn)) / (2.0 * step);
  }
  return g;
}

}  // namespace

TEST_CASE("kernel matrix: coincident point gives the signal variance exactly") {
  auto p = make_params({0.7, 1.3}, 2.5, 0.0);
  MatrixXd x(1, 2);
  x << 0.3, 0.4;
  MatrixXd k = gp::kernel_matrix(x, x, p);
  CHECK(k(0, 0) == 2.5);
}

TEST_CASE("kernel matrix: entries decay monotonically with separation") {
  auto p = make_params({1.0}, 1.0, 0.0);
  MatrixXd x(1, 1);
  x << 0.0;
  double prev = 1.0;
  for (double sep = 0.5; sep < 40.0; sep *= 1.7) {
    MatrixXd z(1, 1);
    z << sep;
    double k = gp::kernel_matrix(x, z, p)(0, 0);
    CHECK(k < prev);
    prev = k;
  }
  CHECK(prev < 1e-12);
}

TEST_CASE("kernel matrix: hand-evaluated 1D case") {
  auto p = make_params({1.0}, 1.0, 0.0);
  MatrixXd x(1, 1), z(1, 1);
  x << 0.0;
  z << std::sqrt(2.0);
  // exp(-1/2 * 2) = exp(-1)
  CHECK(gp::kernel_matrix(x, z, p)(0, 0) == doctest::Approx(0.36787944117144233).epsilon(1e-12));
}

TEST_CASE("kernel matrix: dimension mismatch rejected") {
  auto p = make_params({1.0, 1.0}, 1.0, 0.0);
  MatrixXd x(1, 3);
  x.setZero();
  CHECK_THROWS_AS(gp::kernel_matrix(x, x, p), std::invalid_argument);
}

TEST_CASE("kernel matrix: symmetric and positive definite with jitter on random inputs") {
  Rng rng(42);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 10 + static_cast<int>(rng.uniform_int(191));  // up to 200
    const int d = 1 + static_cast<int>(rng.uniform_int(10));
    std::vector<double> ls(d);
    for (auto& l : ls) l = rng.uniform(0.05, 2.0);
    auto p = make_params(ls, rng.uniform(0.1, 5.0), 0.0);
    MatrixXd x = random_inputs(rng, n, d);
    MatrixXd k = gp::kernel_matrix(x, x, p);
    CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
    MatrixXd kj = k + 1e-10 * MatrixXd::Identity(n, n);
    Eigen::LLT<MatrixXd> llt(kj);
    CHECK(llt.info() == Eigen::Success);
  }
}

TEST_CASE("log marginal likelihood: zero target leaves only the normalizer") {
  auto p = make_params({0.8}, 1.7, 0.3);
  MatrixXd x(1, 1);
  x << 0.25;
  VectorXd y(1);
  y << 0.0;
  auto lm = gp::log_marginal_likelihood(p, x, y);
  const double expected = -0.5 * std::log(2.0 * M_PI * (1.7 + 0.3));
  CHECK(lm.value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("log marginal likelihood: unit-variance single observation closed form") {
  auto p = make_params({1.0}, 0.6, 0.4);  // sf2 + s2 = 1
  MatrixXd x(1, 1);
  x << 0.0;
  VectorXd y(1);
  y << 1.0;
  auto lm = gp::log_marginal_likelihood(p, x, y);
  CHECK(lm.value == doctest::Approx(-1.4189385332046727).epsilon(1e-12));
}

TEST_CASE("log marginal likelihood: analytic gradient matches finite differences") {
  Rng rng(7);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 1 + static_cast<int>(rng.uniform_int(3));
    const int n = 6;
    std::vector<double> ls(d);
    for (auto& l : ls) l = rng.uniform(0.2, 1.5);
    auto p = make_params(ls, rng.uniform(0.3, 3.0), rng.uniform(0.01, 0.5));
    MatrixXd x = random_inputs(rng, n, d);
    VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = rng.gaussian();

    std::optional<VectorXd> noise;
    if (trial % 3 == 0) {
      VectorXd v(n);
      for (int i = 0; i < n; ++i) v[i] = rng.uniform(0.01, 0.3);
      noise = v;
    }

    auto lm = gp::log_marginal_likelihood(p, x, y, noise);
    VectorXd fd = fd_gradient(p, x, y, noise, 1e-5);
    REQUIRE(lm.gradient.size() == fd.size());
    for (int i = 0; i < fd.size(); ++i) {
      const double scale = std::max({1.0, std::abs(fd[i]), std::abs(lm.gradient[i])});
      CHECK(std::abs(lm.gradient[i] - fd[i]) / scale < 1e-4);
    }
    ++checked;
  }
  CHECK(checked >= 50);
}

TEST_CASE("fit: all-zero targets give a flat posterior") {
  Rng rng(3);
  MatrixXd x = random_inputs(rng, 8, 2);
  VectorXd y = VectorXd::Zero(8);
  gp::FitOptions opts;
  opts.seed = 11;
  auto model = gp::fit_gp(x, y, opts);
  MatrixXd q = random_inputs(rng, 20, 2);
  auto pred = model.predict(q);
  const double scale = model.output_transform().scale;
  CHECK((pred.mean.cwiseAbs() / std::max(scale, 1e-300)).maxCoeff() < 1e-6);
}

TEST_CASE("fit: noiseless line is interpolated at the training points") {
  MatrixXd x(5, 1);
  x << 0.0, 0.25, 0.5, 0.75, 1.0;
  VectorXd y = x.col(0);
  gp::FitOptions opts;
  opts.seed = 5;
  auto model = gp::fit_gp(x, y, opts);
  auto pred = model.predict(x);
  for (int i = 0; i < 5; ++i) CHECK(pred.mean[i] == doctest::Approx(y[i]).epsilon(1e-4));
}

TEST_CASE("fit: noise variance recovered within a factor of three on synthetic draws") {
  const double true_noise = 0.01;
  auto truth = make_params({0.4, 0.4}, 1.0, true_noise);
  int hits = 0;
  for (int seed = 0; seed < 25; ++seed) {
    Rng rng(seed_mix(99, seed));
    MatrixXd x = random_inputs(rng, 40, 2);
    // Draw y ~ N(0, K + s2 I) through the factored covariance.
    MatrixXd k = gp::kernel_matrix(x, x, truth);
    k.diagonal().array() += true_noise;
    Eigen::LLT<MatrixXd> llt(k);
    REQUIRE(llt.info() == Eigen::Success);
    VectorXd z(40);
    for (int i = 0; i < 40; ++i) z[i] = rng.gaussian();
    VectorXd y = llt.matrixL() * z;

    gp::FitOptions opts;
    opts.seed = seed_mix(17, seed);
    auto model = gp::fit_gp(x, y, opts);
    const double recovered = model.noise_variance_original();
    if (recovered > true_noise / 3.0 && recovered < true_noise * 3.0) ++hits;
  }
  CHECK(hits >= 20);
}

TEST_CASE("predict: training points reproduced by a near-noiseless fit") {
  Rng rng(21);
  MatrixXd x = random_inputs(rng, 10, 2);
  VectorXd y(10);
  for (int i = 0; i < 10; ++i) y[i] = std::sin(3.0 * x(i, 0)) + x(i, 1);
  gp::FitOptions opts;
  opts.seed = 2;
  auto model = gp::fit_gp(x, y, opts);
  auto pred = model.predict(x);
  const double s2 = model.output_transform().scale * model.output_transform().scale;
  for (int i = 0; i < 10; ++i) {
    CHECK(pred.mean[i] == doctest::Approx(y[i]).epsilon(1e-4));
    CHECK(pred.variance[i] < 1e-4 * model.params().output_variance * s2);
  }
}

TEST_CASE("predict: far queries revert to the prior") {
  MatrixXd x(4, 1);
  x << 0.0, 0.1, 0.2, 0.3;
  VectorXd y(4);
  y << 1.0, 2.0, 3.0, 4.0;
  auto params = make_params({0.05}, 1.0, 1e-6);
  auto model = gp::TrainedGp::condition(params, x, y);
  MatrixXd q(1, 1);
  q << 50.0;
  auto pred = model.predict(q);
  const auto t = model.output_transform();
  CHECK(pred.mean[0] == doctest::Approx(t.mean).epsilon(1e-9));
  CHECK(pred.variance[0] == doctest::Approx(params.output_variance * t.scale * t.scale).epsilon(1e-9));
}

TEST_CASE("predict: single-observation closed form") {
  const double y0 = 1.7;
  auto params = make_params({1.0}, 1.0, 0.0);
  MatrixXd x(1, 1);
  x << 0.0;
  VectorXd y(1);
  y << y0;
  auto model =
      gp::TrainedGp::condition(params, x, y, std::nullopt, gp::OutputTransform{0.0, 1.0});
  MatrixXd q(1, 1);
  q << std::sqrt(2.0);
  auto pred = model.predict(q);
  CHECK(pred.mean[0] == doctest::Approx(std::exp(-1.0) * y0).epsilon(1e-12));
  CHECK(pred.variance[0] == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("predict: variance bounded by prior plus noise everywhere") {
  Rng rng(31);
  MatrixXd x = random_inputs(rng, 30, 3);
  VectorXd y(30);
  for (int i = 0; i < 30; ++i) y[i] = rng.gaussian() * 4.0 + 2.0;
  gp::FitOptions opts;
  opts.seed = 8;
  auto model = gp::fit_gp(x, y, opts);
  MatrixXd q = random_inputs(rng, 200, 3);
  q.array() = q.array() * 3.0 - 1.0;  // include points outside the data cloud
  auto pred = model.predict(q);
  const double s2 = model.output_transform().scale * model.output_transform().scale;
  const double bound = model.params().output_variance * s2 + model.noise_variance_original();
  for (int i = 0; i < q.rows(); ++i) {
    CHECK(pred.variance[i] >= 0.0);
    CHECK(pred.variance[i] <= bound * (1.0 + 1e-9));
  }
}

TEST_CASE("predict: invariant to permutation of the training rows") {
  Rng rng(55);
  const int n = 20;
  MatrixXd x = random_inputs(rng, n, 2);
  VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = std::cos(4.0 * x(i, 0)) * x(i, 1);
  auto params = make_params({0.5, 0.5}, 1.0, 1e-2);

  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
  MatrixXd xp(n, 2);
  VectorXd yp(n);
  for (int i = 0; i < n; ++i) {
    xp.row(i) = x.row(perm[i]);
    yp[i] = y[perm[i]];
  }

  auto a = gp::TrainedGp::condition(params, x, y);
  auto b = gp::TrainedGp::condition(params, xp, yp);
  MatrixXd q = random_inputs(rng, 40, 2);
  auto pa = a.predict(q);
  auto pb = b.predict(q);
  CHECK((pa.mean - pb.mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((pa.variance - pb.variance).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fit: constant per-point noise equals fixed homoscedastic noise") {
  Rng rng(77);
  const int n = 15;
  MatrixXd x = random_inputs(rng, n, 2);
  VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = std::sin(5.0 * x(i, 0)) + 0.3 * x(i, 1);
  const double v = 0.05;

  gp::FitOptions fixed_opts;
  fixed_opts.learn_noise = false;
  fixed_opts.fixed_noise_variance = v;
  fixed_opts.seed = 4;
  auto homo = gp::fit_gp(x, y, fixed_opts);

  gp::FitOptions vec_opts = fixed_opts;
  auto hetero = gp::fit_gp(x, y, vec_opts, VectorXd::Constant(n, v));

  MatrixXd q = random_inputs(rng, 50, 2);
  auto pa = homo.predict(q);
  auto pb = hetero.predict(q);
  CHECK((pa.mean - pb.mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((pa.variance - pb.variance).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fit: factor reconstructs the noisy kernel matrix") {
  Rng rng(13);
  MatrixXd x = random_inputs(rng, 12, 2);
  VectorXd y(12);
  for (int i = 0; i < 12; ++i) y[i] = rng.gaussian();
  gp::FitOptions opts;
  opts.seed = 1;
  auto model = gp::fit_gp(x, y, opts);

  MatrixXd k = gp::kernel_matrix(x, x, model.params());
  k.diagonal().array() += model.params().noise_variance;
  MatrixXd rebuilt = model.factor() * model.factor().transpose();
  const double rel = (rebuilt - k).cwiseAbs().maxCoeff() / k.cwiseAbs().maxCoeff();
  CHECK(rel < 1e-8);
}

TEST_CASE("fit: hyperprior steers small samples away from the all-noise optimum") {
  // Seven points of a steep, wide-range surface: the bare marginal likelihood
  // of a pure-noise model (noise at the data variance, vanishing signal) is
  // within a few thousandths of a nat of the best structured fit here, and
  // some designs land on it without the prior.
  auto surface = [](double a, double b) {
    const double u = b - 1.3 * a * a + 0.7 * a - 0.5;
    return 30.0 * u * u + 3.0 * std::cos(5.0 * a);
  };
  for (std::uint64_t seed : {3ULL, 5ULL, 11ULL}) {
    Rng rng(seed);
    MatrixXd x = random_inputs(rng, 7, 2);
    VectorXd y(7);
    for (int i = 0; i < 7; ++i) y[i] = surface(x(i, 0), x(i, 1));
    gp::FitOptions opts;
    opts.seed = seed_mix(1234, seed);
    opts.use_hyperprior = true;
    auto model = gp::fit_gp(x, y, opts);
    CHECK(model.params().noise_variance < 0.1);   // not the all-noise solution
    CHECK(model.params().output_variance > 0.01); // signal not squashed
  }
}

TEST_CASE("fit: contract violations rejected") {
  MatrixXd x(1, 1);
  x << 0.5;
  VectorXd y(1);
  y << 1.0;
  gp::FitOptions opts;
  CHECK_THROWS_AS(gp::fit_gp(x, y, opts), std::invalid_argument);  // N < 2 with learned noise

  MatrixXd x2(3, 1);
  x2 << 0.0, 0.5, 1.0;
  VectorXd y2(3);
  y2 << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(gp::fit_gp(x2, y2, opts, VectorXd::Constant(2, 0.1)),
                  std::invalid_argument);  // noise length mismatch
  CHECK_THROWS_AS(gp::fit_gp(x2, y2, opts, VectorXd::Constant(3, 0.1)),
                  std::invalid_argument);  // per-point noise with learn_noise=true
}
