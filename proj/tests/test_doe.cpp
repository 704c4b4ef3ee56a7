#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <vector>

#include "mast/doe.hpp"
#include "mast/errors.hpp"
#include "mast/rng.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace mast;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Occupied stratum per sample in unit coordinates.
std::vector<long> strata_of(const MatrixXd& samples, const VectorXd& lo, const VectorXd& hi,
                            int dim) {
  const long n = samples.rows();
  std::vector<long> strata(n);
  for (long i = 0; i < n; ++i) {
    const double unit = (samples(i, dim) - lo[dim]) / (hi[dim] - lo[dim]);
    strata[i] = std::min(static_cast<long>(unit * static_cast<double>(n)), n - 1);
  }
  return strata;
}

}  // namespace

TEST_CASE("lhs: single point lands inside the bounds") {
  VectorXd lo = vec({-2.0, 5.0});
  VectorXd hi = vec({3.0, 9.0});
  MatrixXd s = doe::lhs(1, lo, hi, 7);
  REQUIRE(s.rows() == 1);
  for (int j = 0; j < 2; ++j) {
    CHECK(s(0, j) >= lo[j]);
    CHECK(s(0, j) < hi[j]);
  }
}

TEST_CASE("lhs: every dimension occupies each stratum exactly once") {
  VectorXd lo = vec({0.0, -1.0, 10.0});
  VectorXd hi = vec({1.0, 1.0, 20.0});
  for (long n : {2L, 3L, 8L, 17L, 64L, 257L, 512L}) {
    MatrixXd s = doe::lhs(n, lo, hi, seed_mix(123, n));
    for (int dim = 0; dim < 3; ++dim) {
      auto strata = strata_of(s, lo, hi, dim);
      std::sort(strata.begin(), strata.end());
      for (long k = 0; k < n; ++k) CHECK(strata[k] == k);
    }
  }
}

TEST_CASE("lhs: identical seeds give identical designs, different seeds differ") {
  VectorXd lo = vec({0.0, 0.0});
  VectorXd hi = vec({1.0, 1.0});
  MatrixXd a = doe::lhs(16, lo, hi, 99);
  MatrixXd b = doe::lhs(16, lo, hi, 99);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  MatrixXd c = doe::lhs(16, lo, hi, 100);
  CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("allocate: two-fidelity arithmetic") {
  auto plan = doe::allocate_budget(40.0, vec({0.7, 0.3}), vec({1.0, 0.1}));
  REQUIRE(plan.counts.size() == 2);
  CHECK(plan.counts[0] == 28);
  CHECK(plan.counts[1] == 120);
  CHECK(plan.cost_used() <= 40.0 + 1e-9);
}

TEST_CASE("allocate: three-fidelity arithmetic") {
  auto plan = doe::allocate_budget(10.0, vec({0.5, 0.3, 0.2}), vec({1.0, 0.2, 0.1}));
  REQUIRE(plan.counts.size() == 3);
  CHECK(plan.counts[0] == 5);
  CHECK(plan.counts[1] == 15);
  CHECK(plan.counts[2] == 20);
}

TEST_CASE("allocate: zero-fraction level dropped without a minimum") {
  auto plan = doe::allocate_budget(10.0, vec({1.0, 0.0}), vec({1.0, 0.1}));
  CHECK(plan.counts[0] == 10);
  CHECK(plan.counts[1] == 0);
}

TEST_CASE("allocate: minimums applied and infeasible minimums rejected") {
  // Floor gives (9, 0); the funded cheap level is raised to its minimum of 1,
  // paid for by the flooring slack of the expensive level.
  auto plan = doe::allocate_budget(10.0, vec({0.999, 0.001}), vec({1.0, 0.05}));
  CHECK(plan.floor_counts[1] == 0);
  CHECK(plan.counts[1] == 1);
  CHECK(plan.counts[0] == 9);
  CHECK(plan.cost_used() <= 10.0 + 1e-9);

  // Two expensive points never fit in a budget of one.
  CHECK_THROWS_AS(doe::allocate_budget(1.0, vec({0.5, 0.5}), vec({1.0, 0.1})), AllocationError);
}

TEST_CASE("allocate: raising the expensive level trims the cheap one to fit") {
  // Floors are (1, 90); the minimum of two expensive points costs one extra
  // budget unit, recovered by dropping ten cheap points.
  auto plan = doe::allocate_budget(10.0, vec({0.1, 0.9}), vec({1.0, 0.1}));
  CHECK(plan.floor_counts[0] == 1);
  CHECK(plan.floor_counts[1] == 90);
  CHECK(plan.counts[0] == 2);
  CHECK(plan.counts[1] == 80);
  CHECK(plan.cost_used() <= 10.0 + 1e-9);
}

TEST_CASE("allocate: never exceeds the budget over random instances") {
  Rng rng(5150);
  int succeeded = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 2 + static_cast<int>(rng.uniform_int(3));
    VectorXd fractions(m), costs(m);
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
      fractions[i] = rng.uniform(0.05, 1.0);
      total += fractions[i];
    }
    fractions /= total;
    costs[0] = 1.0;
    for (int i = 1; i < m; ++i) costs[i] = rng.uniform(0.01, 0.5);
    const double budget = rng.uniform(4.0 * m, 100.0);
    try {
      auto plan = doe::allocate_budget(budget, fractions, costs);
      CHECK(plan.cost_used() <= budget + 1e-9);
      ++succeeded;
    } catch (const AllocationError&) {
      // Minimums genuinely infeasible for this draw; the error is the contract.
    }
  }
  CHECK(succeeded > 150);
}

TEST_CASE("allocate: doubling the budget at least doubles-minus-one each floor count") {
  Rng rng(616);
  std::vector<long> zero_mins = {0, 0};
  for (int trial = 0; trial < 100; ++trial) {
    VectorXd fractions = vec({0.0, 0.0});
    fractions[0] = rng.uniform(0.1, 0.9);
    fractions[1] = 1.0 - fractions[0];
    VectorXd costs = vec({1.0, rng.uniform(0.02, 0.5)});
    const double budget = rng.uniform(1.0, 50.0);
    auto small = doe::allocate_budget(budget, fractions, costs, zero_mins);
    auto big = doe::allocate_budget(2.0 * budget, fractions, costs, zero_mins);
    for (int i = 0; i < 2; ++i) CHECK(big.floor_counts[i] >= 2 * small.floor_counts[i] - 1);
  }
}

TEST_CASE("allocate: contract checks") {
  CHECK_THROWS_AS(doe::allocate_budget(10.0, vec({0.6, 0.3}), vec({1.0, 0.1})),
                  std::invalid_argument);  // fractions do not sum to 1
  CHECK_THROWS_AS(doe::allocate_budget(10.0, vec({0.7, 0.3}), vec({1.0, -0.1})),
                  std::invalid_argument);  // negative cost
}
