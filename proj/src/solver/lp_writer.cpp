#include <cctype>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include "mgsched/solver/solve.hpp"

namespace mgsched::solver {

namespace {

// CPLEX LP identifiers: no brackets, no leading digit/period/'e'.
std::string lp_name(const std::string& raw, char prefix, std::size_t index) {
  std::string s;
  s.reserve(raw.size() + 8);
  for (const char c : raw) {
    s.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ? c : '_');
  }
  s += "_" + std::to_string(index);
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s.front())) ||
      s.front() == 'e' || s.front() == 'E') {
    s.insert(s.begin(), {prefix, '_'});
  }
  return s;
}

void write_terms(std::ostream& out, const std::vector<Term>& terms,
                 const std::vector<std::string>& names) {
  int on_line = 0;
  for (const auto& t : terms) {
    out << (t.coeff < 0 ? " - " : " + ") << std::abs(t.coeff) << ' ' << names[t.var];
    if (++on_line == 6) {
      out << "\n   ";
      on_line = 0;
    }
  }
  if (terms.empty()) out << " 0 " << names.front();
}

}  // namespace

void write_lp_format(const MilpProblem& problem, std::ostream& out) {
  std::vector<std::string> names;
  names.reserve(problem.num_variables());
  for (std::size_t j = 0; j < problem.num_variables(); ++j) {
    names.push_back(lp_name(problem.variable(j).name, 'x', j));
  }
  const auto old_precision = out.precision(17);

  out << "\\ objective offset " << problem.objective_offset() << "\n";
  out << "Minimize\n obj:";
  std::vector<Term> objective;
  for (std::size_t j = 0; j < problem.num_variables(); ++j) {
    if (problem.costs()[j] != 0.0) {
      objective.push_back({static_cast<int>(j), problem.costs()[j]});
    }
  }
  if (!names.empty()) write_terms(out, objective, names);
  out << "\nSubject To\n";
  for (std::size_t i = 0; i < problem.num_rows(); ++i) {
    const auto& row = problem.rows()[i];
    out << ' ' << lp_name(row.name, 'r', i) << ':';
    write_terms(out, row.terms, names);
    switch (row.sense) {
      case Sense::LessEqual: out << " <= "; break;
      case Sense::GreaterEqual: out << " >= "; break;
      case Sense::Equal: out << " = "; break;
    }
    out << row.rhs << '\n';
  }
  out << "Bounds\n";
  for (std::size_t j = 0; j < problem.num_variables(); ++j) {
    const auto& v = problem.variable(j);
    const bool lo = std::isfinite(v.lower);
    const bool up = std::isfinite(v.upper);
    if (!lo && !up) {
      out << ' ' << names[j] << " free\n";
    } else if (lo && up && v.lower == v.upper) {
      out << ' ' << names[j] << " = " << v.lower << '\n';
    } else {
      out << ' ';
      if (lo) {
        out << v.lower;
      } else {
        out << "-inf";
      }
      out << " <= " << names[j];
      if (up) out << " <= " << v.upper;
      out << '\n';
    }
  }
  bool any_int = false;
  for (std::size_t j = 0; j < problem.num_variables(); ++j) {
    if (!problem.variable(j).integer) continue;
    if (!any_int) out << "General\n";
    any_int = true;
    out << ' ' << names[j] << '\n';
  }
  out << "End\n";
  out.precision(old_precision);
}

}  // namespace mgsched::solver
