#include "mgsched/solver/solve.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <queue>

#include "simplex.hpp"

namespace mgsched::solver {

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "OPTIMAL";
    case SolveStatus::Infeasible: return "INFEASIBLE";
    case SolveStatus::Unbounded: return "UNBOUNDED";
    case SolveStatus::IterationLimit: return "ITERATION_LIMIT";
  }
  return "UNKNOWN";
}

namespace {

std::string infeasibility_hint(const MilpProblem& problem, int index) {
  if (index >= 0) {
    return "row '" + problem.rows()[index].name + "' cannot be satisfied";
  }
  if (index <= -2) {
    const int var = -2 - index;
    if (var < static_cast<int>(problem.num_variables())) {
      return "variable '" + problem.variable(var).name + "' cannot meet its bounds";
    }
  }
  return "phase one stalled with positive infeasibility";
}

MilpSolution lp_result(const MilpProblem& problem, detail::BoundedSimplex& lp,
                       SolveStatus status) {
  MilpSolution out;
  out.status = status;
  out.lp_iterations = lp.iterations();
  out.values = lp.primal();
  out.objective = problem.objective_offset() + lp.objective();
  out.bound = out.objective;
  switch (status) {
    case SolveStatus::Optimal:
      out.duals = lp.duals();
      out.has_incumbent = true;
      break;
    case SolveStatus::Infeasible:
      out.farkas = lp.farkas();
      out.infeasible_row = lp.infeasible_index();
      out.hint = infeasibility_hint(problem, lp.infeasible_index());
      break;
    case SolveStatus::Unbounded:
      out.ray = lp.ray();
      out.hint = "objective decreases without bound along the reported ray";
      break;
    case SolveStatus::IterationLimit:
      out.hint = "simplex iteration limit reached";
      break;
  }
  return out;
}

struct BoundChange {
  int var;
  double lower;
  double upper;
};

struct Node {
  double bound;
  int depth;
  long id;
  std::vector<BoundChange> changes;
  std::shared_ptr<const detail::Basis> basis;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    // priority_queue pops the "largest": invert for best-first.
    if (a.bound != b.bound) return a.bound > b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.id > b.id;
  }
};

double fractionality(double v) { return std::abs(v - std::round(v)); }

}  // namespace

MilpSolution solve_lp(const MilpProblem& problem, const LpOptions& options) {
  problem.check();
  detail::BoundedSimplex lp(problem, options);
  const SolveStatus status = lp.solve();
  return lp_result(problem, lp, status);
}

MilpSolution solve_milp(const MilpProblem& problem, const MilpOptions& options) {
  problem.check();
  std::vector<int> integers;
  for (std::size_t j = 0; j < problem.num_variables(); ++j) {
    if (problem.variable(j).integer) integers.push_back(static_cast<int>(j));
  }
  detail::BoundedSimplex lp(problem, options.lp);
  if (integers.empty()) return lp_result(problem, lp, lp.solve());

  // Integer bounds are rounded inward once; branching only ever tightens them.
  std::vector<double> root_lo(problem.num_variables());
  std::vector<double> root_up(problem.num_variables());
  for (const int j : integers) {
    root_lo[j] = std::ceil(problem.variable(j).lower - options.integrality_tolerance);
    root_up[j] = std::floor(problem.variable(j).upper + options.integrality_tolerance);
    if (root_lo[j] > root_up[j]) {
      MilpSolution out;
      out.status = SolveStatus::Infeasible;
      out.hint = "integer variable '" + problem.variable(j).name +
                 "' has no integer value within its bounds";
      return out;
    }
    lp.set_bounds(j, root_lo[j], root_up[j]);
  }

  const double offset = problem.objective_offset();
  auto gap_tolerance = [&](double incumbent) {
    return std::max(options.absolute_gap,
                    options.relative_gap * std::max(1.0, std::abs(incumbent)));
  };

  MilpSolution out;
  double incumbent = kInf;
  std::vector<double> best_x;
  long nodes = 0;
  long next_id = 0;
  double unresolved_bound = kInf;
  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  open.push(Node{-kInf, 0, next_id++, {}, nullptr});

  double proven_bound = -kInf;
  bool limit_hit = false;

  while (!open.empty()) {
    if (nodes >= options.node_limit) {
      limit_hit = true;
      break;
    }
    Node node = open.top();
    open.pop();
    proven_bound = std::min(node.bound, unresolved_bound);
    if (node.bound >= incumbent - gap_tolerance(incumbent)) {
      // Best-first: every remaining node is at least as bad.
      open = {};
      proven_bound = std::min(incumbent, unresolved_bound);
      break;
    }
    ++nodes;

    for (const int j : integers) lp.set_bounds(j, root_lo[j], root_up[j]);
    for (const auto& c : node.changes) lp.set_bounds(c.var, c.lower, c.upper);
    if (node.basis) lp.set_basis(*node.basis);

    const SolveStatus status = lp.solve();
    if (status == SolveStatus::Infeasible) {
      if (nodes == 1) {
        auto root = lp_result(problem, lp, status);
        root.node_count = nodes;
        return root;
      }
      continue;
    }
    if (status == SolveStatus::Unbounded) {
      auto root = lp_result(problem, lp, status);
      root.node_count = nodes;
      return root;
    }
    if (status == SolveStatus::IterationLimit) {
      unresolved_bound = std::min(unresolved_bound, node.bound);
      continue;
    }

    const double z = offset + lp.objective();
    if (z >= incumbent - gap_tolerance(incumbent)) continue;
    const std::vector<double> x = lp.primal();

    int branch = -1;
    double most = options.integrality_tolerance;
    for (const int j : integers) {
      const double f = fractionality(x[j]);
      if (f > most + 1e-12) {
        most = f;
        branch = j;
      }
    }
    if (branch < 0) {
      incumbent = z;
      best_x = x;
      continue;
    }

    std::vector<BoundChange> base = node.changes;
    if (std::isfinite(incumbent)) {
      // Reduced-cost fixing for nonbasic integers in this subtree.
      const auto& d = lp.reduced_costs();
      for (const int j : integers) {
        const double lo = lp.lower(j);
        const double up = lp.upper(j);
        if (lo == up) continue;
        if (d[j] > 0.0 && x[j] == lo && z + d[j] * (up - lo) > incumbent) {
          base.push_back({j, lo, lo});
        } else if (d[j] < 0.0 && x[j] == up && z - d[j] * (up - lo) > incumbent) {
          base.push_back({j, up, up});
        }
      }
    }

    auto basis = std::make_shared<const detail::Basis>(lp.basis());
    const double v = x[branch];
    Node down{z, node.depth + 1, 0, base, basis};
    down.changes.push_back({branch, lp.lower(branch), std::floor(v)});
    Node up{z, node.depth + 1, 0, std::move(base), basis};
    up.changes.push_back({branch, std::ceil(v), lp.upper(branch)});
    if (v - std::floor(v) >= 0.5) {
      up.id = next_id++;
      down.id = next_id++;
    } else {
      down.id = next_id++;
      up.id = next_id++;
    }
    open.push(std::move(down));
    open.push(std::move(up));
  }
  if (open.empty() && !limit_hit) {
    proven_bound = std::min(incumbent, unresolved_bound);
  } else if (!open.empty()) {
    proven_bound = std::min(open.top().bound, unresolved_bound);
  }

  out.node_count = nodes;
  out.lp_iterations = lp.iterations();
  if (!std::isfinite(incumbent)) {
    out.status = limit_hit || std::isfinite(unresolved_bound) ? SolveStatus::IterationLimit
                                                              : SolveStatus::Infeasible;
    out.hint = out.status == SolveStatus::Infeasible
                   ? "no integer-feasible assignment exists"
                   : "node limit reached before an incumbent was found";
    out.bound = proven_bound;
    return out;
  }

  // Polish: fix integers at their rounded values and re-solve the continuous part.
  std::vector<double> fixed = best_x;
  for (const int j : integers) {
    fixed[j] = std::round(best_x[j]);
    lp.set_bounds(j, fixed[j], fixed[j]);
  }
  for (std::size_t j = 0; j < problem.num_variables(); ++j) {
    if (!problem.variable(j).integer) {
      lp.set_bounds(static_cast<int>(j), problem.variable(j).lower,
                    problem.variable(j).upper);
    }
  }
  if (lp.solve() == SolveStatus::Optimal) {
    fixed = lp.primal();
    for (const int j : integers) fixed[j] = std::round(fixed[j]);
    incumbent = problem.evaluate(fixed);
  }
  out.values = std::move(fixed);
  out.objective = incumbent;
  out.has_incumbent = true;
  out.bound = std::min(proven_bound, incumbent);
  out.gap = (incumbent - out.bound) / std::max(1.0, std::abs(incumbent));
  out.lp_iterations = lp.iterations();
  const bool closed = out.gap <= gap_tolerance(incumbent) / std::max(1.0, std::abs(incumbent)) + 1e-15;
  out.status = (!limit_hit && closed) ? SolveStatus::Optimal : SolveStatus::IterationLimit;
  if (out.status == SolveStatus::IterationLimit) {
    out.hint = "node limit reached; incumbent returned with gap " + std::to_string(out.gap);
  }
  return out;
}

}  // namespace mgsched::solver
