#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mgsched/solver/milp_problem.hpp"

namespace mgsched::solver {

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit };

std::string_view to_string(SolveStatus status);

struct MilpSolution {
  SolveStatus status = SolveStatus::IterationLimit;
  std::vector<double> values;
  double objective = 0.0;
  /// Best proven lower bound (MILP); equals objective for LP optima.
  double bound = 0.0;
  /// Relative gap between incumbent and bound; 0 for LP solves.
  double gap = 0.0;
  long node_count = 0;
  long lp_iterations = 0;
  bool has_incumbent = false;

  /// Row duals (LP optimum only), sign convention: objective sensitivity to rhs.
  std::vector<double> duals;
  /// Unboundedness certificate: improving ray over structural variables.
  std::vector<double> ray;
  /// Infeasibility certificate: phase-one row multipliers, and the row (or
  /// variable, encoded as -2 - index; -1 when unknown) still infeasible when phase one stalled.
  std::vector<double> farkas;
  int infeasible_row = -1;
  std::string hint;
};

struct LpOptions {
  double primal_tolerance = 1e-9;
  double dual_tolerance = 1e-9;
  double pivot_tolerance = 1e-9;
  long iteration_limit = 0;  // 0: automatic, proportional to problem size
  int refactor_interval = 64;
};

struct MilpOptions {
  double relative_gap = 1e-6;
  double absolute_gap = 1e-9;
  double integrality_tolerance = 1e-6;
  long node_limit = 200000;
  LpOptions lp;
};

/// Solves the continuous relaxation (integrality marks ignored).
MilpSolution solve_lp(const MilpProblem& problem, const LpOptions& options = {});

/// Best-first branch-and-bound over LP relaxations.
MilpSolution solve_milp(const MilpProblem& problem,
                        const MilpOptions& options = {});

/// Writes the problem in CPLEX LP text format.
void write_lp_format(const MilpProblem& problem, std::ostream& out);

}  // namespace mgsched::solver
