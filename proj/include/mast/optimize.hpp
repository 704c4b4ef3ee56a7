#pragma once

#include <Eigen/Dense>
#include <functional>

// Box-constrained quasi-Newton maximizer (projected L-BFGS with backtracking
// line search). Small and dense; intended for log-hyperparameter surfaces.

namespace mast::opt {

using Eigen::VectorXd;

/// Objective callback: fill value and gradient at x, return false if the
/// point is infeasible (e.g. the underlying factorization failed).
using Objective = std::function<bool(const VectorXd& x, double& value, VectorXd& grad)>;

struct BoxResult {
  VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool feasible = false;  // false when even the start point could not be evaluated
};

/// Maximize the objective over the box [lower, upper]. The start point is
/// clipped into the box. Stops on the iteration cap, a small projected
/// gradient, or a stalled line search.
BoxResult maximize_box(const Objective& objective, VectorXd start, const VectorXd& lower,
                       const VectorXd& upper, int max_iterations);

}  // namespace mast::opt
