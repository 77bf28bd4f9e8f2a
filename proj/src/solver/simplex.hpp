#pragma once

// Bounded-variable revised primal simplex shared by solve_lp and the
// branch-and-bound driver. Rows are handled through logical variables
// (A x + s = b) so variable bounds never become rows.

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "mgsched/solver/milp_problem.hpp"
#include "mgsched/solver/solve.hpp"

namespace mgsched::solver::detail {

enum class VarState : std::uint8_t { Basic, AtLower, AtUpper, FreeZero };

struct Basis {
  std::vector<VarState> state;  // structural then logical
  [[nodiscard]] bool empty() const { return state.empty(); }
};

/// LU of a basis matrix plus a product-form eta file.
class BasisFactor {
 public:
  bool factorize(const Eigen::SparseMatrix<double>& basis_matrix);
  void ftran(Eigen::VectorXd& v) const;
  void btran(Eigen::VectorXd& v) const;
  void push_eta(int pivot_row, const Eigen::VectorXd& column, double drop);
  [[nodiscard]] int num_etas() const { return static_cast<int>(etas_.size()); }

 private:
  struct Eta {
    int row;
    double pivot;
    std::vector<int> index;
    std::vector<double> value;
  };
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
};

class BoundedSimplex {
 public:
  BoundedSimplex(const MilpProblem& problem, LpOptions options);

  void set_bounds(int var, double lower, double upper);
  [[nodiscard]] double lower(int var) const { return lo_[var]; }
  [[nodiscard]] double upper(int var) const { return up_[var]; }

  SolveStatus solve();

  [[nodiscard]] double objective() const;
  [[nodiscard]] std::vector<double> primal() const;
  [[nodiscard]] std::vector<double> duals() const { return duals_; }
  /// Reduced costs of structural variables at the last optimum.
  [[nodiscard]] const std::vector<double>& reduced_costs() const { return reduced_; }
  [[nodiscard]] const std::vector<double>& ray() const { return ray_; }
  [[nodiscard]] const std::vector<double>& farkas() const { return farkas_; }
  [[nodiscard]] int infeasible_index() const { return infeasible_index_; }
  [[nodiscard]] long iterations() const { return iterations_; }

  [[nodiscard]] Basis basis() const;
  void set_basis(const Basis& basis);

  [[nodiscard]] int num_rows() const { return m_; }
  [[nodiscard]] int num_structural() const { return n_; }

 private:
  enum class Phase { One, Two };

  [[nodiscard]] double column_dot(int j, const Eigen::VectorXd& y) const;
  void column_into(int j, Eigen::VectorXd& v) const;
  void slack_basis();
  bool refactor();
  void place_nonbasic(int j);
  void recompute_basics();
  [[nodiscard]] bool primal_infeasible(int pos) const;
  [[nodiscard]] double infeasibility(int pos) const;
  void finish_optimal();

  LpOptions opt_;
  int m_ = 0;
  int n_ = 0;
  std::vector<int> col_start_;
  std::vector<int> row_index_;
  std::vector<double> value_;
  std::vector<double> cost_;
  std::vector<double> lo_;
  std::vector<double> up_;
  Eigen::VectorXd b_;

  std::vector<double> x_;
  std::vector<int> head_;
  std::vector<int> position_;  // basis slot or -1
  std::vector<VarState> state_;
  BasisFactor factor_;
  bool factor_valid_ = false;

  std::vector<double> duals_;
  std::vector<double> reduced_;
  std::vector<double> ray_;
  std::vector<double> farkas_;
  int infeasible_index_ = -1;
  long iterations_ = 0;
};

}  // namespace mgsched::solver::detail
