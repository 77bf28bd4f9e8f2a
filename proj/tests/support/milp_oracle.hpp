#pragma once

// Test-only helpers: random bounded MILP instances and an exhaustive
// enumeration oracle over binary assignments.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "mgsched/solver/solve.hpp"

namespace mgsched::testing {

struct RandomMilp {
  solver::MilpProblem problem;
  std::vector<int> binaries;
};

/// Feasible by construction: rows are built around a random binary/continuous
/// point, and every variable is bounded so the relaxation cannot be unbounded.
inline RandomMilp random_milp(std::mt19937_64& rng, int binaries, int continuous,
                              int rows) {
  using solver::Sense;
  std::uniform_real_distribution<double> coef(-5.0, 5.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  RandomMilp out;
  std::vector<double> point;
  for (int j = 0; j < binaries; ++j) {
    out.binaries.push_back(out.problem.add_binary("b" + std::to_string(j), coef(rng)));
    point.push_back(coin(rng) ? 1.0 : 0.0);
  }
  for (int j = 0; j < continuous; ++j) {
    const double ub = 1.0 + 9.0 * unit(rng);
    out.problem.add_variable("c" + std::to_string(j), 0.0, ub, false, coef(rng));
    point.push_back(ub * unit(rng));
  }
  const int n = binaries + continuous;
  for (int i = 0; i < rows; ++i) {
    std::vector<solver::Term> terms;
    double act = 0.0;
    for (int j = 0; j < n; ++j) {
      if (unit(rng) < 0.5) {
        const double a = coef(rng);
        terms.push_back({j, a});
        act += a * point[j];
      }
    }
    const double pick = unit(rng);
    if (pick < 0.45) {
      out.problem.add_row("r" + std::to_string(i), terms, Sense::LessEqual,
                          act + 2.0 * unit(rng));
    } else if (pick < 0.9) {
      out.problem.add_row("r" + std::to_string(i), terms, Sense::GreaterEqual,
                          act - 2.0 * unit(rng));
    } else {
      out.problem.add_row("r" + std::to_string(i), terms, Sense::Equal, act);
    }
  }
  return out;
}

/// Minimum over all 2^k binary assignments of the LP in the continuous rest.
/// Returns +inf when every assignment is infeasible.
inline double enumerate_binaries(const solver::MilpProblem& problem,
                                 const std::vector<int>& binaries) {
  double best = std::numeric_limits<double>::infinity();
  const int k = static_cast<int>(binaries.size());
  for (long mask = 0; mask < (1L << k); ++mask) {
    solver::MilpProblem fixed = problem;
    for (int b = 0; b < k; ++b) {
      const double v = (mask >> b) & 1L ? 1.0 : 0.0;
      fixed.set_bounds(binaries[b], v, v);
    }
    const auto sol = solver::solve_lp(fixed);
    if (sol.status == solver::SolveStatus::Optimal) best = std::min(best, sol.objective);
  }
  return best;
}

}  // namespace mgsched::testing
