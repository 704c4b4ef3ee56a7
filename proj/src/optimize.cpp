#include "mast/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace mast::opt {

namespace {

VectorXd clip_to_box(VectorXd x, const VectorXd& lo, const VectorXd& hi) {
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
  return x;
}

struct Pair {
  VectorXd s, y;
  double rho;
};

// Two-loop recursion; g is the gradient of the minimized objective.
VectorXd lbfgs_direction(const std::deque<Pair>& memory, const VectorXd& g) {
  VectorXd q = g;
  std::vector<double> alpha(memory.size());
  for (int i = static_cast<int>(memory.size()) - 1; i >= 0; --i) {
    alpha[i] = memory[i].rho * memory[i].s.dot(q);
    q -= alpha[i] * memory[i].y;
  }
  if (!memory.empty()) {
    const auto& last = memory.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t i = 0; i < memory.size(); ++i) {
    const double beta = memory[i].rho * memory[i].y.dot(q);
    q += (alpha[i] - beta) * memory[i].s;
  }
  return -q;
}

}  // namespace

BoxResult maximize_box(const Objective& objective, VectorXd start, const VectorXd& lower,
                       const VectorXd& upper, int max_iterations) {
  constexpr double kGradTol = 1e-6;
  constexpr double kValueTol = 1e-10;
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 30;
  constexpr std::size_t kMemory = 8;

  BoxResult result;
  VectorXd x = clip_to_box(std::move(start), lower, upper);

  // Minimize phi = -objective.
  double f_obj = 0.0;
  VectorXd g_obj(x.size());
  if (!objective(x, f_obj, g_obj)) {
    result.x = x;
    result.feasible = false;
    return result;
  }
  double phi = -f_obj;
  VectorXd grad = -g_obj;
  result.feasible = true;

  std::deque<Pair> memory;
  int it = 0;
  for (; it < max_iterations; ++it) {
    const VectorXd projected_step = x - clip_to_box(x - grad, lower, upper);
    if (projected_step.cwiseAbs().maxCoeff() < kGradTol) break;

    VectorXd dir = memory.empty() ? VectorXd(-grad) : lbfgs_direction(memory, grad);
    if (dir.dot(grad) >= 0.0) {
      memory.clear();
      dir = -grad;
    }

    double t = 1.0;
    bool accepted = false;
    VectorXd x_new;
    double phi_new = 0.0;
    VectorXd grad_new(x.size());
    for (int bt = 0; bt < kMaxBacktracks; ++bt, t *= 0.5) {
      x_new = clip_to_box(x + t * dir, lower, upper);
      const VectorXd step = x_new - x;
      if (step.cwiseAbs().maxCoeff() == 0.0) break;
      double f_new = 0.0;
      if (!objective(x_new, f_new, grad_new)) continue;  // infeasible: shrink further
      phi_new = -f_new;
      if (phi_new <= phi + kArmijo * grad.dot(step)) {
        grad_new = -grad_new;
        accepted = true;
        break;
      }
    }

    if (!accepted) {
      if (memory.empty()) break;  // steepest descent stalled too
      memory.clear();
      continue;
    }

    const VectorXd s = x_new - x;
    const VectorXd yv = grad_new - grad;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      memory.push_back({s, yv, 1.0 / sy});
      if (memory.size() > kMemory) memory.pop_front();
    }

    const bool stalled = std::abs(phi - phi_new) < kValueTol * std::max(1.0, std::abs(phi));
    x = x_new;
    phi = phi_new;
    grad = grad_new;
    if (stalled) break;
  }

  result.x = x;
  result.value = -phi;
  result.iterations = it;
  return result;
}

}  // namespace mast::opt
