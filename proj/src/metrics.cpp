#include "mast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mast/errors.hpp"

namespace mast::metrics {

namespace {

constexpr double kVarianceFloor = 1e-12;
constexpr double kTwoPi = 6.283185307179586476925286766559;

// Linear-interpolation quantile of a sorted vector.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = q * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= n) return sorted[n - 1];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

double rmse(const VectorXd& predicted_means, const VectorXd& truth) {
  if (predicted_means.size() != truth.size() || truth.size() < 1)
    throw std::invalid_argument("rmse: length mismatch");
  return std::sqrt((predicted_means - truth).squaredNorm() /
                   static_cast<double>(truth.size()));
}

double mean_pdf(const VectorXd& predicted_means, const VectorXd& predicted_variances,
                const VectorXd& truth) {
  const Eigen::Index n = truth.size();
  if (predicted_means.size() != n || predicted_variances.size() != n || n < 1)
    throw std::invalid_argument("mean_pdf: length mismatch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double variance = std::max(predicted_variances[i], kVarianceFloor);
    const double err = truth[i] - predicted_means[i];
    sum += std::exp(-0.5 * err * err / variance) / std::sqrt(kTwoPi * variance);
  }
  return sum / static_cast<double>(n);
}

double normalize(double value, double baseline) {
  if (!(baseline > 0.0)) throw ReportError("normalize: baseline must be positive");
  return value / baseline;
}

Summary summarize(std::vector<double> values) {
  if (values.empty()) throw ReportError("summarize: no values");
  Summary s;
  s.count = static_cast<long>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  std::sort(values.begin(), values.end());
  s.median = quantile_sorted(values, 0.5);
  s.iqr = quantile_sorted(values, 0.75) - quantile_sorted(values, 0.25);
  return s;
}

}  // namespace mast::metrics
