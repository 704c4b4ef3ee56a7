#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "mast/rng.hpp"

// Synthetic multi-fidelity test problems. Every problem pairs an exact
// high-fidelity function with a deviation term delta(x); a lower fidelity is
// f_hf(x) + d * delta(x) where the degradation d controls how far it strays.

namespace mast::bench {

using Eigen::VectorXd;

enum class DiscrepancyKind {
  spatial,
  oscillatory,
  linear_scaling,
  noise_only,
  parameter_perturbation,
  coefficient_simplification,
};

std::string_view to_string(DiscrepancyKind kind);

struct BenchmarkProblem {
  std::string name;
  int dimension = 0;
  VectorXd lower;
  VectorXd upper;
  std::function<double(const VectorXd&)> hf;
  std::function<double(const VectorXd&)> delta;
  DiscrepancyKind discrepancy_kind = DiscrepancyKind::spatial;
  // Default observation noise per fidelity, lowest first; zero everywhere
  // except noise-only problems, whose low-fidelity entry is 5% of the
  // high-fidelity output spread over a space-filling sample.
  std::vector<double> noise_std;
};

struct FidelitySpec {
  int level = 1;
  double degradation_d = 0.0;  // 0 at the highest fidelity
  double cost = 1.0;
  double noise_std = 0.0;
};

/// The ten catalog problems, canonical dimensions and domains.
std::vector<BenchmarkProblem> catalog();

struct HartmannParams {
  VectorXd alpha;
  Eigen::MatrixXd a;
  Eigen::MatrixXd p;
};
HartmannParams hartmann3_params();
HartmannParams hartmann6_params();

/// Registry lookup by name ("branin", "hartmann6", ...); throws ConfigError.
const BenchmarkProblem& find_problem(std::string_view name);

std::vector<std::string> problem_names();

double eval_hf(const BenchmarkProblem& problem, const VectorXd& x);
double eval_fidelity(const BenchmarkProblem& problem, const VectorXd& x, const FidelitySpec& spec);
double sample_observation(const BenchmarkProblem& problem, const VectorXd& x,
                          const FidelitySpec& spec, Rng& rng);

}  // namespace mast::bench
