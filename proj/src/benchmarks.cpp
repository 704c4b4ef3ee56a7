#include "mast/benchmarks.hpp"

#include <cmath>
#include <stdexcept>

#include "mast/doe.hpp"
#include "mast/errors.hpp"

namespace mast::bench {

namespace {

using Eigen::MatrixXd;

constexpr double kOscAmplitude = 0.1;
constexpr double kOscOmega1 = 10.0;
constexpr double kOscOmega2 = 5.0;

double oscillatory_delta(const VectorXd& x) {
  return kOscAmplitude * std::sin(kOscOmega1 * x[0] + kOscOmega2 * x[1]);
}

double branin_hf(const VectorXd& x, double b) {
  const double a = 1.0, c = 5.0 / M_PI, r = 6.0, s = 10.0, t = 1.0 / (8.0 * M_PI);
  const double u = x[1] - b * x[0] * x[0] + c * x[0] - r;
  return a * u * u + s * (1.0 - t) * std::cos(x[0]) + s;
}

double rosenbrock_hf(const VectorXd& x) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    const double gap = x[i + 1] - x[i] * x[i];
    sum += 100.0 * gap * gap + (1.0 - x[i]) * (1.0 - x[i]);
  }
  return sum;
}

double rastrigin_hf(const VectorXd& x) {
  const double a = 10.0;
  double sum = a * static_cast<double>(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    sum += x[i] * x[i] - a * std::cos(2.0 * M_PI * x[i]);
  return sum;
}

double ackley_hf(const VectorXd& x) {
  const double a = 20.0, b = 0.2, c = 2.0 * M_PI;
  const double n = static_cast<double>(x.size());
  const double sq = x.squaredNorm() / n;
  double cos_sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) cos_sum += std::cos(c * x[i]);
  return -a * std::exp(-b * std::sqrt(sq)) - std::exp(cos_sum / n) + a + std::exp(1.0);
}

double levy_hf(const VectorXd& x) {
  const Eigen::Index n = x.size();
  auto w = [&](Eigen::Index i) { return 1.0 + (x[i] - 1.0) / 4.0; };
  const double s1 = std::sin(M_PI * w(0));
  double sum = s1 * s1;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double wi = w(i);
    const double s = std::sin(M_PI * wi + 1.0);
    sum += (wi - 1.0) * (wi - 1.0) * (1.0 + 10.0 * s * s);
  }
  const double wn = w(n - 1);
  const double sn = std::sin(2.0 * M_PI * wn);
  return sum + (wn - 1.0) * (wn - 1.0) * (1.0 + sn * sn);
}

double hartmann(const VectorXd& x, const HartmannParams& hp, const VectorXd& alpha) {
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double diff = x[j] - hp.p(i, j);
      inner += hp.a(i, j) * diff * diff;
    }
    sum += alpha[i] * std::exp(-inner);
  }
  return sum;
}

VectorXd hartmann_alpha_shift() {
  VectorXd d(4);
  d << 0.01, -0.01, -0.1, 0.1;
  return d;
}

double park1_hf(const VectorXd& x) {
  // (x1/2)(sqrt(1 + (x2 + x3^2) x4 / x1^2) - 1) rewritten so x1 -> 0 stays finite.
  const double q = (x[1] + x[2] * x[2]) * x[3];
  const double first = 0.5 * (std::sqrt(x[0] * x[0] + q) - x[0]);
  return first + (x[0] + 3.0 * x[3]) * std::exp(1.0 + std::sin(x[2]));
}

double park1_delta(const VectorXd& x) {
  return std::sin(x[0]) / 10.0 * park1_hf(x) - 2.0 * x[0] + x[1] * x[1] + x[2] * x[2] + 0.5;
}

double park2_hf(const VectorXd& x) {
  return 2.0 / 3.0 * std::exp(x[0] + x[1]) - x[3] * std::sin(x[2]) + x[2];
}

double borehole_flow(const VectorXd& x, double coeff, double one_term) {
  const double rw = x[0], r = x[1], tu = x[2], hu = x[3], tl = x[4], hl = x[5], l = x[6],
               kw = x[7];
  const double lnr = std::log(r / rw);
  return coeff * tu * (hu - hl) /
         (lnr * (one_term + 2.0 * l * tu / (lnr * rw * rw * kw) + tu / tl));
}

VectorXd constant_vec(int n, double v) { return VectorXd::Constant(n, v); }

/// Spread of the high-fidelity outputs over a seeded space-filling sample;
/// used to scale the default noise of noise-only problems.
double hf_output_std(const BenchmarkProblem& problem) {
  const long n = 10000;
  const MatrixXd sample = doe::lhs(n, problem.lower, problem.upper, hash_string(problem.name));
  VectorXd values(n);
  for (long i = 0; i < n; ++i) values[i] = problem.hf(sample.row(i).transpose());
  const double mean = values.mean();
  return std::sqrt((values.array() - mean).square().mean());
}

}  // namespace

std::string_view to_string(DiscrepancyKind kind) {
  switch (kind) {
    case DiscrepancyKind::spatial: return "spatial";
    case DiscrepancyKind::oscillatory: return "oscillatory";
    case DiscrepancyKind::linear_scaling: return "linear-scaling";
    case DiscrepancyKind::noise_only: return "noise-only";
    case DiscrepancyKind::parameter_perturbation: return "parameter-perturbation";
    case DiscrepancyKind::coefficient_simplification: return "coefficient-simplification";
  }
  return "unknown";
}

HartmannParams hartmann3_params() {
  HartmannParams hp;
  hp.alpha = VectorXd(4);
  hp.alpha << 1.0, 1.2, 3.0, 3.2;
  hp.a = MatrixXd(4, 3);
  hp.a << 3.0, 10.0, 30.0,
          0.1, 10.0, 35.0,
          3.0, 10.0, 30.0,
          0.1, 10.0, 35.0;
  hp.p = MatrixXd(4, 3);
  hp.p << 0.3689, 0.1170, 0.2673,
          0.4699, 0.4387, 0.7470,
          0.1091, 0.8732, 0.5547,
          0.0381, 0.5743, 0.8828;
  return hp;
}

HartmannParams hartmann6_params() {
  HartmannParams hp;
  hp.alpha = VectorXd(4);
  hp.alpha << 1.0, 1.2, 3.0, 3.2;
  hp.a = MatrixXd(4, 6);
  hp.a << 10.0, 3.0, 17.0, 3.5, 1.7, 8.0,
          0.05, 10.0, 17.0, 0.1, 8.0, 14.0,
          3.0, 3.5, 1.7, 10.0, 17.0, 8.0,
          17.0, 8.0, 0.05, 10.0, 0.1, 14.0;
  hp.p = MatrixXd(4, 6);
  hp.p << 1312, 1696, 5569, 124, 8283, 5886,
          2329, 4135, 8307, 3736, 1004, 9991,
          2348, 1451, 3522, 2883, 3047, 6650,
          4047, 8828, 8732, 5743, 1091, 381;
  hp.p *= 1e-4;
  return hp;
}

std::vector<BenchmarkProblem> catalog() {
  std::vector<BenchmarkProblem> problems;

  {
    BenchmarkProblem p;
    p.name = "branin";
    p.dimension = 2;
    p.lower = VectorXd(2);
    p.lower << -5.0, 0.0;
    p.upper = VectorXd(2);
    p.upper << 10.0, 15.0;
    const double b = 5.1 / (4.0 * M_PI * M_PI);
    p.hf = [b](const VectorXd& x) { return branin_hf(x, b); };
    p.delta = [b](const VectorXd& x) { return branin_hf(x, b - 0.1) - branin_hf(x, b); };
    p.discrepancy_kind = DiscrepancyKind::parameter_perturbation;
    p.noise_std = {0.0, 0.0};
    problems.push_back(std::move(p));
  }
  {
    BenchmarkProblem p;
    p.name = "rosenbrock";
    p.dimension = 10;
    p.lower = constant_vec(10, -5.0);
    p.upper = constant_vec(10, 10.0);
    p.hf = rosenbrock_hf;
    p.delta = oscillatory_delta;
    p.discrepancy_kind = DiscrepancyKind::oscillatory;
    p.noise_std = {0.0, 0.0};
    problems.push_back(std::move(p));
  }
  {
    BenchmarkProblem p;
    p.name = "rastrigin";
    p.dimension = 5;
    p.lower = constant_vec(5, -5.12);
    p.upper = constant_vec(5, 5.12);
    p.hf = rastrigin_hf;
    p.delta = oscillatory_delta;
    p.discrepancy_kind = DiscrepancyKind::oscillatory;
    p.noise_std = {0.0, 0.0};
    problems.push_back(std::move(p));
  }
  {
    BenchmarkProblem p;
    p.name = "ackley";
    p.dimension = 4;
    p.lower = constant_vec(4, -5.0);
    p.upper = constant_vec(4, 5.0);
    p.hf = ackley_hf;
    p.delta = [](const VectorXd&) { return 0.0; };
    p.discrepancy_kind = DiscrepancyKind::noise_only;
    p.noise_std = {0.05 * hf_output_std(p), 0.0};
    problems.push_back(std::move(p));
  }
  {
    BenchmarkProblem p;
    p.name = "levy";
    p.dimension = 7;
    p.lower = constant_vec(7, -10.0);
    p.upper = constant_vec(7, 10.0);
    p.hf = levy_hf;
    p.delta = oscillatory_delta;
    p.discrepancy_kind = DiscrepancyKind::oscillatory;
    p.noise_std = {0.0, 0.0};
    problems.push_back(std::move(p));
  }
  {
    BenchmarkProblem p;
    p.name = "hartmann3";
    p.dimension = 3;
    p.lower = constant_vec(3, 0.0);
    p.upper = constant_vec(3, 1.0);
    const auto hp = hartmann3_params();
    const VectorXd shifted = hp.alpha + hartmann_alpha_shift();
    p.hf = [hp](const VectorXd& x) { return hartmann(x, hp, hp.alpha); };
    p.delta = [hp, shifted](const VectorXd& x) {
      return hartmann(x, hp, shifted) - hartmann(x, hp, hp.alpha);
    };
    p.discrepancy_kind = DiscrepancyKind::parameter_perturbation;
    p.noise_std = {0.0, 0.0};
    problems.push_back(std::move(p));
  }
  {
    BenchmarkProblem p;
    p.name = "hartmann6";
    p.dimension = 6;
    p.lower = constant_vec(6, 0.0);
    p.upper = constant_vec(6, 1.0);
    const auto hp = hartmann6_params();
    const VectorXd shifted = hp.alpha + hartmann_alpha_shift();
    p.hf = [hp](const VectorXd& x) { return hartmann(x, hp, hp.alpha); };
    p.delta = [hp, shifted](const VectorXd& x) {
      return hartmann(x, hp, shifted) - hartmann(x, hp, hp.alpha);
    };
    p.discrepancy_kind = DiscrepancyKind::parameter_perturbation;
    p.noise_std = {0.0, 0.0};
    problems.push_back(std::move(p));
  }
  {
    BenchmarkProblem p;
    p.name = "park1";
    p.dimension = 4;
    p.lower = constant_vec(4, 0.0);
    p.upper = constant_vec(4, 1.0);
    p.hf = park1_hf;
    p.delta = park1_delta;
    p.discrepancy_kind = DiscrepancyKind::spatial;
    p.noise_std = {0.0, 0.0};
    problems.push_back(std::move(p));
  }
  {
    BenchmarkProblem p;
    p.name = "park2";
    p.dimension = 4;
    p.lower = constant_vec(4, 0.0);
    p.upper = constant_vec(4, 1.0);
    p.hf = park2_hf;
    p.delta = [](const VectorXd& x) { return 0.2 * park2_hf(x) - 1.0; };
    p.discrepancy_kind = DiscrepancyKind::linear_scaling;
    p.noise_std = {0.0, 0.0};
    problems.push_back(std::move(p));
  }
  {
    BenchmarkProblem p;
    p.name = "borehole";
    p.dimension = 8;
    p.lower = VectorXd(8);
    p.lower << 0.05, 100.0, 63070.0, 990.0, 63.1, 700.0, 1120.0, 9855.0;
    p.upper = VectorXd(8);
    p.upper << 0.15, 50000.0, 115600.0, 1110.0, 116.0, 820.0, 1680.0, 12045.0;
    p.hf = [](const VectorXd& x) { return borehole_flow(x, 2.0 * M_PI, 1.0); };
    p.delta = [](const VectorXd& x) {
      return borehole_flow(x, 5.0, 1.5) - borehole_flow(x, 2.0 * M_PI, 1.0);
    };
    p.discrepancy_kind = DiscrepancyKind::coefficient_simplification;
    p.noise_std = {0.0, 0.0};
    problems.push_back(std::move(p));
  }
  return problems;
}

const BenchmarkProblem& find_problem(std::string_view name) {
  static const std::vector<BenchmarkProblem> problems = catalog();
  for (const auto& p : problems)
    if (p.name == name) return p;
  throw ConfigError("unknown benchmark problem: " + std::string(name));
}

std::vector<std::string> problem_names() {
  std::vector<std::string> names;
  for (const auto& p : catalog()) names.push_back(p.name);
  return names;
}

double eval_hf(const BenchmarkProblem& problem, const VectorXd& x) {
  if (x.size() != problem.dimension)
    throw std::invalid_argument("eval_hf: point dimension does not match " + problem.name);
  return problem.hf(x);
}

double eval_fidelity(const BenchmarkProblem& problem, const VectorXd& x,
                     const FidelitySpec& spec) {
  if (x.size() != problem.dimension)
    throw std::invalid_argument("eval_fidelity: point dimension does not match " + problem.name);
  if (spec.degradation_d == 0.0) return problem.hf(x);
  return problem.hf(x) + spec.degradation_d * problem.delta(x);
}

double sample_observation(const BenchmarkProblem& problem, const VectorXd& x,
                          const FidelitySpec& spec, Rng& rng) {
  const double value = eval_fidelity(problem, x, spec);
  if (spec.noise_std == 0.0) return value;
  return value + spec.noise_std * rng.gaussian();
}

}  // namespace mast::bench
