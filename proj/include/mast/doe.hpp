#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

// Seeded space-filling designs and cost-based budget allocation.

namespace mast::doe {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct BudgetPlan {
  double total_budget = 0.0;
  VectorXd fractions;               // per level, summing to 1
  VectorXd costs;                   // per level, positive
  std::vector<long> counts;         // final counts after per-level minimums
  std::vector<long> floor_counts;   // floor(fraction * budget / cost) before minimums

  double cost_used() const;
};

/// Latin hypercube design: per dimension one uniformly jittered sample in each
/// of the n strata under an independent seeded permutation, mapped to bounds.
MatrixXd lhs(long n, const VectorXd& lower, const VectorXd& upper, std::uint64_t seed);

/// counts[m] = floor(fractions[m] * total / costs[m]), raised to minimums[m].
/// Levels with a zero fraction are dropped (count 0, no minimum applied).
/// Empty minimums selects the defaults: 2 for the most expensive level, 1
/// elsewhere. Throws AllocationError when the minimums exceed the budget.
BudgetPlan allocate_budget(double total, const VectorXd& fractions, const VectorXd& costs,
                           const std::vector<long>& minimums = {});

}  // namespace mast::doe
