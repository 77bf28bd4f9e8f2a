#include "simplex.hpp"

#include <algorithm>
#include <cmath>

namespace mgsched::solver::detail {

bool BasisFactor::factorize(const Eigen::SparseMatrix<double>& basis_matrix) {
  etas_.clear();
  if (basis_matrix.rows() == 0) return true;
  lu_.analyzePattern(basis_matrix);
  lu_.factorize(basis_matrix);
  return lu_.info() == Eigen::Success;
}

void BasisFactor::ftran(Eigen::VectorXd& v) const {
  if (v.size() == 0) return;
  Eigen::VectorXd w = lu_.solve(v);
  v.swap(w);
  for (const auto& e : etas_) {
    const double xr = v[e.row] / e.pivot;
    if (xr != 0.0) {
      for (std::size_t k = 0; k < e.index.size(); ++k) {
        v[e.index[k]] -= e.value[k] * xr;
      }
    }
    v[e.row] = xr;
  }
}

void BasisFactor::btran(Eigen::VectorXd& v) const {
  if (v.size() == 0) return;
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double s = v[it->row];
    for (std::size_t k = 0; k < it->index.size(); ++k) {
      s -= it->value[k] * v[it->index[k]];
    }
    v[it->row] = s / it->pivot;
  }
  // SparseLU::transpose() is non-const but does not modify the factors.
  auto& lu = const_cast<decltype(lu_)&>(lu_);
  Eigen::VectorXd w = lu.transpose().solve(v);
  v.swap(w);
}

void BasisFactor::push_eta(int pivot_row, const Eigen::VectorXd& column,
                           double drop) {
  Eta e;
  e.row = pivot_row;
  e.pivot = column[pivot_row];
  for (Eigen::Index i = 0; i < column.size(); ++i) {
    if (i != pivot_row && std::abs(column[i]) > drop) {
      e.index.push_back(static_cast<int>(i));
      e.value.push_back(column[i]);
    }
  }
  etas_.push_back(std::move(e));
}

BoundedSimplex::BoundedSimplex(const MilpProblem& problem, LpOptions options)
    : opt_(options),
      m_(static_cast<int>(problem.num_rows())),
      n_(static_cast<int>(problem.num_variables())) {
  const auto& rows = problem.rows();
  std::vector<int> counts(n_ + 1, 0);
  for (const auto& row : rows) {
    for (const auto& t : row.terms) ++counts[t.var + 1];
  }
  col_start_.assign(n_ + 1, 0);
  for (int j = 0; j < n_; ++j) col_start_[j + 1] = col_start_[j] + counts[j + 1];
  row_index_.resize(col_start_[n_]);
  value_.resize(col_start_[n_]);
  std::vector<int> fill(col_start_.begin(), col_start_.end() - 1);
  for (int i = 0; i < m_; ++i) {
    for (const auto& t : rows[i].terms) {
      const int k = fill[t.var]++;
      row_index_[k] = i;
      value_[k] = t.coeff;
    }
  }

  const int total = n_ + m_;
  cost_.assign(total, 0.0);
  lo_.assign(total, 0.0);
  up_.assign(total, 0.0);
  for (int j = 0; j < n_; ++j) {
    cost_[j] = problem.costs()[j];
    lo_[j] = problem.variable(j).lower;
    up_[j] = problem.variable(j).upper;
  }
  b_.resize(m_);
  for (int i = 0; i < m_; ++i) {
    b_[i] = rows[i].rhs;
    switch (rows[i].sense) {
      case Sense::LessEqual: lo_[n_ + i] = 0.0; up_[n_ + i] = kInf; break;
      case Sense::GreaterEqual: lo_[n_ + i] = -kInf; up_[n_ + i] = 0.0; break;
      case Sense::Equal: lo_[n_ + i] = 0.0; up_[n_ + i] = 0.0; break;
    }
  }
  x_.assign(total, 0.0);
  state_.assign(total, VarState::AtLower);
  position_.assign(total, -1);
}

void BoundedSimplex::set_bounds(int var, double lower, double upper) {
  lo_[var] = lower;
  up_[var] = upper;
}

double BoundedSimplex::column_dot(int j, const Eigen::VectorXd& y) const {
  if (j >= n_) return y[j - n_];
  double s = 0.0;
  for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
    s += value_[k] * y[row_index_[k]];
  }
  return s;
}

void BoundedSimplex::column_into(int j, Eigen::VectorXd& v) const {
  v.setZero(m_);
  if (j >= n_) {
    v[j - n_] = 1.0;
    return;
  }
  for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
    v[row_index_[k]] = value_[k];
  }
}

void BoundedSimplex::slack_basis() {
  head_.assign(m_, 0);
  std::fill(position_.begin(), position_.end(), -1);
  for (int j = 0; j < n_; ++j) {
    state_[j] = std::isfinite(lo_[j])   ? VarState::AtLower
                : std::isfinite(up_[j]) ? VarState::AtUpper
                                        : VarState::FreeZero;
  }
  for (int i = 0; i < m_; ++i) {
    head_[i] = n_ + i;
    position_[n_ + i] = i;
    state_[n_ + i] = VarState::Basic;
  }
  factor_valid_ = false;
}

bool BoundedSimplex::refactor() {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(m_) * 3);
  for (int p = 0; p < m_; ++p) {
    const int j = head_[p];
    if (j >= n_) {
      trips.emplace_back(j - n_, p, 1.0);
    } else {
      for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
        trips.emplace_back(row_index_[k], p, value_[k]);
      }
    }
  }
  Eigen::SparseMatrix<double> basis_matrix(m_, m_);
  basis_matrix.setFromTriplets(trips.begin(), trips.end());
  basis_matrix.makeCompressed();
  factor_valid_ = factor_.factorize(basis_matrix);
  return factor_valid_;
}

void BoundedSimplex::place_nonbasic(int j) {
  VarState s = state_[j];
  const bool has_lo = std::isfinite(lo_[j]);
  const bool has_up = std::isfinite(up_[j]);
  if (s == VarState::AtLower && !has_lo) s = has_up ? VarState::AtUpper : VarState::FreeZero;
  if (s == VarState::AtUpper && !has_up) s = has_lo ? VarState::AtLower : VarState::FreeZero;
  if (s == VarState::FreeZero && (has_lo || has_up)) {
    s = has_lo ? VarState::AtLower : VarState::AtUpper;
  }
  state_[j] = s;
  x_[j] = s == VarState::AtLower ? lo_[j] : s == VarState::AtUpper ? up_[j] : 0.0;
}

void BoundedSimplex::recompute_basics() {
  Eigen::VectorXd rhs = b_;
  for (int j = 0; j < n_ + m_; ++j) {
    if (state_[j] == VarState::Basic || x_[j] == 0.0) continue;
    if (j >= n_) {
      rhs[j - n_] -= x_[j];
    } else {
      for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
        rhs[row_index_[k]] -= value_[k] * x_[j];
      }
    }
  }
  factor_.ftran(rhs);
  for (int p = 0; p < m_; ++p) x_[head_[p]] = rhs[p];
}

bool BoundedSimplex::primal_infeasible(int pos) const {
  return infeasibility(pos) > opt_.primal_tolerance;
}

double BoundedSimplex::infeasibility(int pos) const {
  const int j = head_[pos];
  if (x_[j] < lo_[j]) return lo_[j] - x_[j];
  if (x_[j] > up_[j]) return x_[j] - up_[j];
  return 0.0;
}

Basis BoundedSimplex::basis() const { return Basis{state_}; }

void BoundedSimplex::set_basis(const Basis& basis) {
  if (static_cast<int>(basis.state.size()) != n_ + m_) {
    slack_basis();
    return;
  }
  state_ = basis.state;
  head_.clear();
  std::fill(position_.begin(), position_.end(), -1);
  for (int j = 0; j < n_ + m_; ++j) {
    if (state_[j] == VarState::Basic) {
      position_[j] = static_cast<int>(head_.size());
      head_.push_back(j);
    }
  }
  if (static_cast<int>(head_.size()) != m_) slack_basis();
  factor_valid_ = false;
}

double BoundedSimplex::objective() const {
  double z = 0.0;
  for (int j = 0; j < n_; ++j) z += cost_[j] * x_[j];
  return z;
}

std::vector<double> BoundedSimplex::primal() const {
  return {x_.begin(), x_.begin() + n_};
}

void BoundedSimplex::finish_optimal() {
  Eigen::VectorXd y(m_);
  for (int p = 0; p < m_; ++p) y[p] = cost_[head_[p]];
  factor_.btran(y);
  duals_.assign(y.data(), y.data() + m_);
  reduced_.assign(n_, 0.0);
  for (int j = 0; j < n_; ++j) {
    if (state_[j] != VarState::Basic) reduced_[j] = cost_[j] - column_dot(j, y);
  }
}

SolveStatus BoundedSimplex::solve() {
  ray_.clear();
  farkas_.clear();
  infeasible_index_ = -1;
  if (head_.size() != static_cast<std::size_t>(m_)) slack_basis();
  if (!factor_valid_ && !refactor()) {
    slack_basis();
    refactor();
  }
  for (int j = 0; j < n_ + m_; ++j) {
    if (state_[j] != VarState::Basic) place_nonbasic(j);
  }
  recompute_basics();

  const long limit = opt_.iteration_limit > 0
                         ? opt_.iteration_limit
                         : 50L * (n_ + m_) + 20000L;
  const long start = iterations_;
  const double ptol = opt_.primal_tolerance;
  const double dtol = opt_.dual_tolerance;
  int degenerate_run = 0;
  bool bland = false;
  int repairs = 0;

  Eigen::VectorXd y(m_);
  Eigen::VectorXd alpha(m_);
  std::vector<signed char> infeasible_side(m_, 0);

  while (true) {
    if (iterations_ - start >= limit) return SolveStatus::IterationLimit;
    if (factor_.num_etas() >= opt_.refactor_interval) {
      if (!refactor()) {
        if (++repairs > 3) return SolveStatus::IterationLimit;
        slack_basis();
        refactor();
        for (int j = 0; j < n_; ++j) place_nonbasic(j);
      }
      recompute_basics();
    }

    bool phase_one = false;
    for (int p = 0; p < m_; ++p) {
      const int j = head_[p];
      infeasible_side[p] = x_[j] < lo_[j] - ptol ? -1 : x_[j] > up_[j] + ptol ? 1 : 0;
      phase_one = phase_one || infeasible_side[p] != 0;
    }
    for (int p = 0; p < m_; ++p) {
      y[p] = phase_one ? static_cast<double>(infeasible_side[p]) : cost_[head_[p]];
    }
    factor_.btran(y);

    int entering = -1;
    double entering_d = 0.0;
    double best = 0.0;
    for (int j = 0; j < n_ + m_; ++j) {
      const VarState s = state_[j];
      if (s == VarState::Basic || lo_[j] == up_[j]) continue;
      const double cj = phase_one ? 0.0 : cost_[j];
      const double dj = cj - column_dot(j, y);
      const bool eligible = (s == VarState::AtLower && dj < -dtol) ||
                            (s == VarState::AtUpper && dj > dtol) ||
                            (s == VarState::FreeZero && std::abs(dj) > dtol);
      if (!eligible) continue;
      if (bland) {
        entering = j;
        entering_d = dj;
        break;
      }
      if (std::abs(dj) > best) {
        best = std::abs(dj);
        entering = j;
        entering_d = dj;
      }
    }

    if (entering < 0) {
      if (factor_.num_etas() > 0) {
        // Confirm on a fresh factorization before declaring termination.
        if (!refactor()) {
          if (++repairs > 3) return SolveStatus::IterationLimit;
          slack_basis();
          refactor();
          for (int j = 0; j < n_; ++j) place_nonbasic(j);
        }
        recompute_basics();
        continue;
      }
      if (phase_one) {
        farkas_.assign(y.data(), y.data() + m_);
        double worst = 0.0;
        for (int p = 0; p < m_; ++p) {
          const double v = infeasibility(p);
          if (v > worst) {
            worst = v;
            const int j = head_[p];
            infeasible_index_ = j >= n_ ? j - n_ : -2 - j;
          }
        }
        return SolveStatus::Infeasible;
      }
      finish_optimal();
      return SolveStatus::Optimal;
    }

    const double dir = entering_d < 0.0 ? 1.0 : -1.0;
    column_into(entering, alpha);
    factor_.ftran(alpha);

    // Working bounds: an infeasible basic may only move up to its violated bound.
    auto working = [&](int p, double& lb, double& ub) {
      const int j = head_[p];
      if (infeasible_side[p] < 0) {
        lb = -kInf;
        ub = lo_[j];
      } else if (infeasible_side[p] > 0) {
        lb = up_[j];
        ub = kInf;
      } else {
        lb = lo_[j];
        ub = up_[j];
      }
    };

    const double range = up_[entering] - lo_[entering];
    int leave = -1;
    double theta = kInf;
    if (bland) {
      for (int p = 0; p < m_; ++p) {
        const double rate = -dir * alpha[p];
        if (std::abs(alpha[p]) <= opt_.pivot_tolerance) continue;
        double lb, ub;
        working(p, lb, ub);
        const double xv = x_[head_[p]];
        double r = kInf;
        if (rate < 0.0 && std::isfinite(lb)) r = std::max(0.0, (xv - lb) / -rate);
        if (rate > 0.0 && std::isfinite(ub)) r = std::max(0.0, (ub - xv) / rate);
        if (r < theta || (r == theta && leave >= 0 && head_[p] < head_[leave])) {
          if (std::isfinite(r)) {
            theta = r;
            leave = p;
          }
        }
      }
    } else {
      double relaxed = kInf;
      for (int p = 0; p < m_; ++p) {
        const double rate = -dir * alpha[p];
        if (std::abs(alpha[p]) <= opt_.pivot_tolerance) continue;
        double lb, ub;
        working(p, lb, ub);
        const double xv = x_[head_[p]];
        if (rate < 0.0 && std::isfinite(lb)) relaxed = std::min(relaxed, (xv - lb + ptol) / -rate);
        if (rate > 0.0 && std::isfinite(ub)) relaxed = std::min(relaxed, (ub - xv + ptol) / rate);
      }
      double best_pivot = 0.0;
      for (int p = 0; p < m_ && std::isfinite(relaxed); ++p) {
        const double rate = -dir * alpha[p];
        if (std::abs(alpha[p]) <= opt_.pivot_tolerance) continue;
        double lb, ub;
        working(p, lb, ub);
        const double xv = x_[head_[p]];
        double r = kInf;
        if (rate < 0.0 && std::isfinite(lb)) r = std::max(0.0, (xv - lb) / -rate);
        if (rate > 0.0 && std::isfinite(ub)) r = std::max(0.0, (ub - xv) / rate);
        if (r <= relaxed && std::abs(alpha[p]) > best_pivot) {
          best_pivot = std::abs(alpha[p]);
          leave = p;
          theta = r;
        }
      }
    }

    const bool flip = std::isfinite(range) && range <= theta;
    if (!flip && leave < 0) {
      if (phase_one) {
        // Cannot happen with consistent working bounds; restart cleanly.
        if (++repairs > 3) return SolveStatus::IterationLimit;
        refactor();
        recompute_basics();
        continue;
      }
      ray_.assign(n_, 0.0);
      if (entering < n_) ray_[entering] = dir;
      for (int p = 0; p < m_; ++p) {
        if (head_[p] < n_) ray_[head_[p]] = -dir * alpha[p];
      }
      return SolveStatus::Unbounded;
    }
    if (flip) theta = range;

    ++iterations_;
    if (theta <= 1e-12) {
      if (++degenerate_run > 60) bland = true;
    } else {
      degenerate_run = 0;
      bland = false;
    }

    if (theta > 0.0) {
      x_[entering] += dir * theta;
      for (int p = 0; p < m_; ++p) {
        if (alpha[p] != 0.0) x_[head_[p]] -= dir * theta * alpha[p];
      }
    }

    if (flip) {
      state_[entering] = dir > 0.0 ? VarState::AtUpper : VarState::AtLower;
      x_[entering] = dir > 0.0 ? up_[entering] : lo_[entering];
      continue;
    }

    const int leaving = head_[leave];
    const double rate = -dir * alpha[leave];
    double lb, ub;
    working(leave, lb, ub);
    if (rate < 0.0) {
      x_[leaving] = lb;
      state_[leaving] = (lb == up_[leaving] && lb != lo_[leaving]) ? VarState::AtUpper
                                                                   : VarState::AtLower;
    } else {
      x_[leaving] = ub;
      state_[leaving] = (ub == lo_[leaving]) ? VarState::AtLower : VarState::AtUpper;
    }
    factor_.push_eta(leave, alpha, 1e-13);
    head_[leave] = entering;
    position_[entering] = leave;
    position_[leaving] = -1;
    state_[entering] = VarState::Basic;
  }
}

}  // namespace mgsched::solver::detail
