#include "mast/doe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mast/errors.hpp"
#include "mast/rng.hpp"

namespace mast::doe {

double BudgetPlan::cost_used() const {
  double used = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i)
    used += static_cast<double>(counts[i]) * costs[static_cast<Eigen::Index>(i)];
  return used;
}

MatrixXd lhs(long n, const VectorXd& lower, const VectorXd& upper, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("lhs: sample count must be positive");
  if (lower.size() != upper.size()) throw std::invalid_argument("lhs: bounds length mismatch");
  const Eigen::Index d = lower.size();
  for (Eigen::Index j = 0; j < d; ++j)
    if (!(lower[j] < upper[j])) throw std::invalid_argument("lhs: bounds must satisfy lower < upper");

  Rng rng(seed);
  MatrixXd samples(n, d);
  std::vector<long> perm(n);
  for (Eigen::Index j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), 0L);
    for (long i = n - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.uniform_int(static_cast<std::uint64_t>(i + 1))]);
    for (long i = 0; i < n; ++i) {
      const double unit = (static_cast<double>(perm[i]) + rng.uniform01()) / static_cast<double>(n);
      samples(i, j) = lower[j] + unit * (upper[j] - lower[j]);
    }
  }
  return samples;
}

BudgetPlan allocate_budget(double total, const VectorXd& fractions, const VectorXd& costs,
                           const std::vector<long>& minimums) {
  const Eigen::Index m = fractions.size();
  if (m < 1 || costs.size() != m)
    throw std::invalid_argument("allocate_budget: fractions/costs length mismatch");
  if (total <= 0.0) throw std::invalid_argument("allocate_budget: budget must be positive");
  if ((fractions.array() < 0.0).any())
    throw std::invalid_argument("allocate_budget: fractions must be non-negative");
  if (std::abs(fractions.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("allocate_budget: fractions must sum to 1");
  if ((costs.array() <= 0.0).any())
    throw std::invalid_argument("allocate_budget: costs must be positive");
  if (!minimums.empty() && static_cast<Eigen::Index>(minimums.size()) != m)
    throw std::invalid_argument("allocate_budget: minimums length mismatch");

  // Default minimums: two points at the most expensive level, one elsewhere.
  std::vector<long> mins = minimums;
  if (mins.empty()) {
    Eigen::Index top = 0;
    costs.maxCoeff(&top);
    mins.assign(m, 1L);
    mins[top] = 2L;
  }

  BudgetPlan plan;
  plan.total_budget = total;
  plan.fractions = fractions;
  plan.costs = costs;
  plan.floor_counts.resize(m);
  plan.counts.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    plan.floor_counts[i] = static_cast<long>(std::floor(fractions[i] * total / costs[i]));
    // A zero fraction drops the level entirely; minimums apply only to funded levels.
    plan.counts[i] = fractions[i] == 0.0 ? 0L : std::max(plan.floor_counts[i], mins[i]);
  }

  // Raising a level to its minimum can overrun the budget; pay for it by
  // trimming the cheapest levels back toward their own minimums.
  if (plan.cost_used() > total + 1e-9) {
    std::vector<Eigen::Index> order(m);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(),
              [&costs](Eigen::Index a, Eigen::Index b) { return costs[a] < costs[b]; });
    for (Eigen::Index i : order) {
      if (plan.counts[i] == 0) continue;
      const double excess = plan.cost_used() - total;
      if (excess <= 1e-9) break;
      const long removable = plan.counts[i] - mins[i];
      const long needed = static_cast<long>(std::ceil(excess / costs[i] - 1e-12));
      plan.counts[i] -= std::min(removable, std::max(needed, 0L));
    }
  }

  if (plan.cost_used() > total + 1e-9) {
    std::ostringstream msg;
    msg << "allocate_budget: per-level minimums need cost " << plan.cost_used()
        << " which exceeds the budget " << total;
    throw AllocationError(msg.str());
  }
  return plan;
}

}  // namespace mast::doe
