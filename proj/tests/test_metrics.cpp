#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mast/errors.hpp"
#include "mast/metrics.hpp"
#include "mast/rng.hpp"

using Eigen::VectorXd;
using namespace mast;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("rmse: exact predictions, uniform shift, hand case") {
  VectorXd truth = vec({1.0, -2.0, 3.5});
  CHECK(metrics::rmse(truth, truth) == 0.0);
  VectorXd shifted = truth.array() + 0.75;
  CHECK(metrics::rmse(shifted, truth) == doctest::Approx(0.75).epsilon(1e-12));
  // errors (3, 4) over two points -> sqrt(25/2)
  CHECK(metrics::rmse(vec({3.0, 4.0}), vec({0.0, 0.0})) ==
        doctest::Approx(3.5355339059327378).epsilon(1e-12));
  CHECK_THROWS_AS(metrics::rmse(vec({1.0}), vec({1.0, 2.0})), std::invalid_argument);
}

TEST_CASE("mean_pdf: closed-form cases") {
  VectorXd truth = vec({0.3, -1.2, 4.0});
  // Density of a unit-variance Gaussian at its mean: 1/sqrt(2 pi).
  CHECK(std::abs(metrics::mean_pdf(truth, VectorXd::Ones(3), truth) - 0.3989422804014327) < 1e-9);
  // Variance 1/(2 pi) normalizes the peak density to exactly 1.
  CHECK(std::abs(metrics::mean_pdf(truth, VectorXd::Constant(3, 1.0 / (2.0 * M_PI)), truth) - 1.0) <
        1e-9);
  // One-sigma offset.
  const double s2 = 4.0;
  VectorXd means = truth.array() + std::sqrt(s2);
  const double expected = std::exp(-0.5) / std::sqrt(2.0 * M_PI * s2);
  CHECK(metrics::mean_pdf(means, VectorXd::Constant(3, s2), truth) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("mean_pdf: zero variance floored instead of dividing by zero") {
  VectorXd truth = vec({2.0});
  const double v = metrics::mean_pdf(truth, VectorXd::Zero(1), truth);
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI * 1e-12)).epsilon(1e-12));
}

TEST_CASE("mean_pdf: density maximized when the variance matches the squared error") {
  const double err = 0.7;
  VectorXd truth = vec({0.0});
  VectorXd mean = vec({err});
  const double at_opt = metrics::mean_pdf(mean, vec({err * err}), truth);
  CHECK(at_opt > metrics::mean_pdf(mean, vec({err * err * 1.2}), truth));
  CHECK(at_opt > metrics::mean_pdf(mean, vec({err * err * 0.8}), truth));
}

TEST_CASE("metrics are permutation invariant") {
  Rng rng(33);
  const int n = 40;
  VectorXd truth(n), mean(n), var(n);
  for (int i = 0; i < n; ++i) {
    truth[i] = rng.gaussian();
    mean[i] = truth[i] + 0.3 * rng.gaussian();
    var[i] = rng.uniform(0.01, 2.0);
  }
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
  VectorXd truth_p(n), mean_p(n), var_p(n);
  for (int i = 0; i < n; ++i) {
    truth_p[i] = truth[perm[i]];
    mean_p[i] = mean[perm[i]];
    var_p[i] = var[perm[i]];
  }
  CHECK(metrics::rmse(mean, truth) == doctest::Approx(metrics::rmse(mean_p, truth_p)).epsilon(1e-12));
  CHECK(metrics::mean_pdf(mean, var, truth) ==
        doctest::Approx(metrics::mean_pdf(mean_p, var_p, truth_p)).epsilon(1e-12));
}

TEST_CASE("normalize: ratios and contract") {
  CHECK(metrics::normalize(3.7, 3.7) == 1.0);
  CHECK(metrics::normalize(0.63 * 5.0, 5.0) == doctest::Approx(0.63).epsilon(1e-12));
  CHECK(metrics::normalize(3.60 * 0.2, 0.2) == doctest::Approx(3.60).epsilon(1e-12));
  // Common scaling of value and baseline cancels.
  CHECK(metrics::normalize(7.0 * 2.5, 9.0 * 2.5) ==
        doctest::Approx(metrics::normalize(7.0, 9.0)).epsilon(1e-12));
  CHECK_THROWS_AS(metrics::normalize(1.0, 0.0), ReportError);
  CHECK_THROWS_AS(metrics::normalize(1.0, -2.0), ReportError);
}

TEST_CASE("summarize: mean, median and interquartile range") {
  auto s = metrics::summarize({4.0, 1.0, 3.0, 2.0});
  CHECK(s.count == 4);
  CHECK(s.mean == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(s.median == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(s.iqr == doctest::Approx(1.5).epsilon(1e-12));

  auto one = metrics::summarize({5.0});
  CHECK(one.median == 5.0);
  CHECK(one.iqr == 0.0);
}
