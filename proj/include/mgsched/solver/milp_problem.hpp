#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgsched::solver {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { LessEqual, Equal, GreaterEqual };

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
  bool integer = false;
};

struct Term {
  int var = 0;
  double coeff = 0.0;
};

struct Row {
  std::string name;
  std::vector<Term> terms;
  Sense sense = Sense::LessEqual;
  double rhs = 0.0;
};

class ProblemError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Minimization problem over bounded variables with sparse linear rows.
/// Integrality marks are honoured by solve_milp and ignored by solve_lp.
class MilpProblem {
 public:
  int add_variable(std::string name, double lower, double upper,
                   bool integer = false, double cost = 0.0);
  int add_binary(std::string name, double cost = 0.0) {
    return add_variable(std::move(name), 0.0, 1.0, true, cost);
  }

  /// Duplicate variable indices inside `terms` are merged.
  int add_row(std::string name, std::vector<Term> terms, Sense sense,
              double rhs);

  void set_cost(int var, double cost);
  void add_cost(int var, double cost);
  void set_bounds(int var, double lower, double upper);
  void set_objective_offset(double offset) { offset_ = offset; }

  [[nodiscard]] std::size_t num_variables() const { return vars_.size(); }
  [[nodiscard]] std::size_t num_rows() const { return rows_.size(); }
  [[nodiscard]] std::size_t num_integers() const;
  [[nodiscard]] const std::vector<Variable>& variables() const { return vars_; }
  [[nodiscard]] const Variable& variable(int j) const { return vars_.at(j); }
  [[nodiscard]] const std::vector<Row>& rows() const { return rows_; }
  [[nodiscard]] const std::vector<double>& costs() const { return costs_; }
  [[nodiscard]] double objective_offset() const { return offset_; }

  /// Objective value (including offset) of a full assignment.
  [[nodiscard]] double evaluate(const std::vector<double>& x) const;
  /// Largest bound or row violation of `x`.
  [[nodiscard]] double max_violation(const std::vector<double>& x) const;

  /// Throws ProblemError for NaN data, inverted bounds or unbounded integers.
  void check() const;

 private:
  std::vector<Variable> vars_;
  std::vector<double> costs_;
  std::vector<Row> rows_;
  double offset_ = 0.0;
};

}  // namespace mgsched::solver
