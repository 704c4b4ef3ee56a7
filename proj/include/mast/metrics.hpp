#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace mast::metrics {

using Eigen::VectorXd;

struct MetricsRecord {
  double rmse = 0.0;
  double mean_pdf = 0.0;
  long n_test = 0;
  std::uint64_t seed = 0;
  std::string method;
  std::string problem;
};

double rmse(const VectorXd& predicted_means, const VectorXd& truth);

/// Mean Gaussian density of the truth under the predictive marginals.
/// Variances are floored at 1e-12 before evaluation.
double mean_pdf(const VectorXd& predicted_means, const VectorXd& predicted_variances,
                const VectorXd& truth);

/// value / baseline; throws ReportError for a non-positive baseline.
double normalize(double value, double baseline);

struct Summary {
  double mean = 0.0;
  double median = 0.0;
  double iqr = 0.0;
  long count = 0;
};

Summary summarize(std::vector<double> values);

}  // namespace mast::metrics
