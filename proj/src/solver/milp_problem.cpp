#include "mgsched/solver/milp_problem.hpp"

#include <algorithm>
#include <cmath>

namespace mgsched::solver {

int MilpProblem::add_variable(std::string name, double lower, double upper,
                              bool integer, double cost) {
  vars_.push_back({std::move(name), lower, upper, integer});
  costs_.push_back(cost);
  return static_cast<int>(vars_.size()) - 1;
}

int MilpProblem::add_row(std::string name, std::vector<Term> terms, Sense sense,
                         double rhs) {
  std::sort(terms.begin(), terms.end(),
            [](const Term& a, const Term& b) { return a.var < b.var; });
  std::vector<Term> merged;
  merged.reserve(terms.size());
  for (const auto& t : terms) {
    if (t.var < 0 || t.var >= static_cast<int>(vars_.size())) {
      throw ProblemError("row '" + name + "' references unknown variable " +
                         std::to_string(t.var));
    }
    if (!merged.empty() && merged.back().var == t.var) {
      merged.back().coeff += t.coeff;
    } else {
      merged.push_back(t);
    }
  }
  std::erase_if(merged, [](const Term& t) { return t.coeff == 0.0; });
  rows_.push_back({std::move(name), std::move(merged), sense, rhs});
  return static_cast<int>(rows_.size()) - 1;
}

void MilpProblem::set_cost(int var, double cost) { costs_.at(var) = cost; }

void MilpProblem::add_cost(int var, double cost) { costs_.at(var) += cost; }

void MilpProblem::set_bounds(int var, double lower, double upper) {
  auto& v = vars_.at(var);
  v.lower = lower;
  v.upper = upper;
}

std::size_t MilpProblem::num_integers() const {
  return static_cast<std::size_t>(std::count_if(
      vars_.begin(), vars_.end(), [](const Variable& v) { return v.integer; }));
}

double MilpProblem::evaluate(const std::vector<double>& x) const {
  double z = offset_;
  for (std::size_t j = 0; j < vars_.size(); ++j) z += costs_[j] * x.at(j);
  return z;
}

double MilpProblem::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < vars_.size(); ++j) {
    worst = std::max(worst, vars_[j].lower - x.at(j));
    worst = std::max(worst, x.at(j) - vars_[j].upper);
  }
  for (const auto& row : rows_) {
    double act = 0.0;
    for (const auto& t : row.terms) act += t.coeff * x.at(t.var);
    switch (row.sense) {
      case Sense::LessEqual: worst = std::max(worst, act - row.rhs); break;
      case Sense::GreaterEqual: worst = std::max(worst, row.rhs - act); break;
      case Sense::Equal: worst = std::max(worst, std::abs(act - row.rhs)); break;
    }
  }
  return worst;
}

void MilpProblem::check() const {
  for (std::size_t j = 0; j < vars_.size(); ++j) {
    const auto& v = vars_[j];
    if (std::isnan(v.lower) || std::isnan(v.upper) || std::isnan(costs_[j]) ||
        !std::isfinite(costs_[j])) {
      throw ProblemError("variable '" + v.name + "' has NaN data");
    }
    if (v.lower > v.upper) {
      throw ProblemError("variable '" + v.name + "' has lower > upper");
    }
    if (v.integer && (!std::isfinite(v.lower) || !std::isfinite(v.upper))) {
      throw ProblemError("integer variable '" + v.name + "' must be bounded");
    }
  }
  for (const auto& row : rows_) {
    if (!std::isfinite(row.rhs)) {
      throw ProblemError("row '" + row.name + "' has a non-finite rhs");
    }
    for (const auto& t : row.terms) {
      if (!std::isfinite(t.coeff)) {
        throw ProblemError("row '" + row.name + "' has a non-finite coefficient");
      }
    }
  }
}

}  // namespace mgsched::solver
