#include <algorithm>
#include <cmath>

#include "mgsched/model/forecasts.hpp"
#include "mgsched/scheduler/scheduler.hpp"

namespace mgsched::scheduler {

namespace {

double clean(double v) { return std::abs(v) < 1e-9 ? 0.0 : v; }

double value_or_zero(const std::vector<double>& x, int col) { return col < 0 ? 0.0 : x[col]; }

}  // namespace

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Optimal: return "OPTIMAL";
    case RunStatus::Infeasible: return "INFEASIBLE";
    case RunStatus::NodeLimit: return "NODE_LIMIT";
    case RunStatus::Error: return "ERROR";
  }
  return "ERROR";
}

Schedule extract_schedule(const GridModel& m, const BuiltProblem& built,
                          const std::vector<double>& x, CaseFlag flag) {
  const int T = m.horizon();
  const double base = m.kw_per_pu();
  const auto& L = built.layout;
  Schedule s;
  s.horizon = T;
  s.network_constraints = flag.network_constraints;

  for (std::size_t i = 0; i < m.ders.size(); ++i) {
    const auto& d = m.ders[i];
    UnitSchedule u{d.id, std::vector<int>(T, 0), std::vector<double>(T, 0.0),
                   std::vector<int>(T, 0), std::vector<int>(T, 0)};
    int prev = d.dispatchable && d.initially_on() ? 1 : 0;
    for (int t = 0; t < T; ++t) {
      const double p = clean(x[L.unit_power[i][t]] * base);
      int on = 0;
      if (d.dispatchable) {
        on = x[L.unit_on[i][t]] > 0.5 ? 1 : 0;
      } else {
        on = p > 0.0 ? 1 : 0;
      }
      u.power[t] = on ? p : 0.0;
      u.status[t] = on;
      if (d.dispatchable) {
        u.startup[t] = on && !prev ? 1 : 0;
        u.shutdown[t] = !on && prev ? 1 : 0;
      }
      prev = on;
    }
    s.units.push_back(std::move(u));
  }

  for (std::size_t k = 0; k < m.tie_lines.size(); ++k) {
    TieSchedule tie{m.tie_lines[k].id, std::vector<double>(T, 0.0)};
    for (int t = 0; t < T; ++t) {
      tie.flow[t] = clean((x[L.tie_pos[k][t]] - x[L.tie_neg[k][t]]) * base);
    }
    s.ties.push_back(std::move(tie));
  }

  for (std::size_t k = 0; k < m.storages.size(); ++k) {
    StorageSchedule st{m.storages[k].id, std::vector<double>(T, 0.0),
                       std::vector<double>(T, 0.0), std::vector<double>(T, 0.0)};
    for (int t = 0; t < T; ++t) {
      st.charge[t] = clean(x[L.charge[k][t]] * base);
      st.discharge[t] = clean(x[L.discharge[k][t]] * base);
      st.soc[t] = clean(x[L.soc[k][t]] * base);
    }
    s.storages.push_back(std::move(st));
  }

  for (std::size_t k = 0; k < m.adjustable_loads.size(); ++k) {
    LoadSchedule l{m.adjustable_loads[k].id, std::vector<double>(T, 0.0)};
    for (int t = 0; t < T; ++t) l.served[t] = clean(value_or_zero(x, L.served[k][t]) * base);
    s.loads.push_back(std::move(l));
  }
  return s;
}

powerflow::NodalPower schedule_nodal_power(const GridModel& m, const HourlyInputs& in,
                                           const Schedule& s, int t) {
  auto p = powerflow::fixed_load_power(m, in, t);
  const double base = m.kw_per_pu();
  for (std::size_t i = 0; i < m.ders.size(); ++i) {
    p.generation[m.bus_index(m.ders[i].bus_id)] += s.units[i].power[t] / base;
  }
  for (std::size_t k = 0; k < m.storages.size(); ++k) {
    p.generation[m.bus_index(m.storages[k].bus_id)] +=
        (s.storages[k].discharge[t] - s.storages[k].charge[t]) / base;
  }
  for (std::size_t k = 0; k < m.adjustable_loads.size(); ++k) {
    // Adjustable demand is a decision, so it is treated as constant power.
    p.generation[m.bus_index(m.adjustable_loads[k].bus_id)] -= s.loads[k].served[t] / base;
  }
  return p;
}

CostReport cost_of(const Schedule& s, const GridModel& m, const HourlyInputs& in) {
  const int T = m.horizon();
  CostReport r;
  r.per_hour.assign(T, 0.0);
  for (const auto& mg : m.microgrids) {
    r.generation_by_microgrid[mg.id] = 0.0;
    r.exchange_by_microgrid[mg.id] = 0.0;
  }
  for (std::size_t i = 0; i < m.ders.size(); ++i) {
    const auto& d = m.ders[i];
    if (!d.dispatchable) continue;
    for (int t = 0; t < T; ++t) {
      const double gen = d.cost * s.units[i].power[t];
      const double trans = d.startup_cost * s.units[i].startup[t] +
                           d.shutdown_cost * s.units[i].shutdown[t];
      r.generation += gen;
      r.startup_shutdown += trans;
      r.generation_by_microgrid[d.microgrid_id] += gen + trans;
      r.per_hour[t] += gen + trans;
    }
  }
  for (std::size_t k = 0; k < m.tie_lines.size(); ++k) {
    const auto& tie = m.tie_lines[k];
    for (int t = 0; t < T; ++t) {
      const double f = s.ties[k].flow[t];
      if (f == 0.0) continue;
      const std::string& importer = f > 0.0 ? tie.to : tie.from;
      const std::string& exporter = f > 0.0 ? tie.from : tie.to;
      double c = 0.0;
      std::string payer;
      if (importer != kMainGrid) {
        c = in.tie_price[k][t] * std::abs(f);
        payer = importer;
      } else {
        c = -tie.export_price * std::abs(f);
        payer = exporter;
      }
      r.exchange += c;
      r.exchange_by_microgrid[payer] += c;
      r.per_hour[t] += c;
    }
  }
  r.total = r.generation + r.startup_shutdown + r.exchange;
  return r;
}

RunResult run_deterministic(const GridModel& m, CaseFlag flag, const RunOptions& options) {
  return run_deterministic(m, flag, scale_forecasts(m), options);
}

RunResult run_deterministic(const GridModel& m, CaseFlag flag, const HourlyInputs& in,
                            const RunOptions& options) {
  RunResult result;
  result.flag = flag;
  const int T = m.horizon();

  VoltageEstimate estimate = options.initial_estimate.empty() ? flat_estimate(m)
                                                              : options.initial_estimate;
  const int rounds = flag.network_constraints ? std::max(1, options.max_linearizations) : 1;
  BuiltProblem built;
  solver::MilpSolution sol;
  try {
    for (int round = 1; round <= rounds; ++round) {
      built = build_problem(m, CaseFlag::case1(), in);
      if (flag.network_constraints) link_network_constraints(m, in, built, estimate);
      sol = solver::solve_milp(built.problem, options.milp);
      result.linearizations = round;
      if (sol.status == solver::SolveStatus::Infeasible ||
          sol.status == solver::SolveStatus::Unbounded || !sol.has_incumbent) {
        break;
      }
      if (!flag.network_constraints) break;

      const auto schedule = extract_schedule(m, built, sol.values, flag);
      double change = 0.0;
      VoltageEstimate next(T);
      for (int t = 0; t < T; ++t) {
        const auto v = powerflow::solve_linear_pf(
            powerflow::assemble_zip(m, schedule_nodal_power(m, in, schedule, t)));
        next[t] = v.bus_voltages;
        for (std::size_t b = 0; b < v.bus_voltages.size(); ++b) {
          change = std::max(change, std::abs(v.bus_voltages[b] - estimate[t][b]));
        }
      }
      result.linearization_converged = change <= options.linearization_tolerance;
      if (result.linearization_converged) break;
      estimate = std::move(next);
    }
  } catch (const BuildError& e) {
    result.status = RunStatus::Infeasible;
    result.hint = e.what();
    return result;
  }

  result.nodes = sol.node_count;
  result.gap = sol.gap;
  if (sol.status == solver::SolveStatus::Infeasible) {
    result.status = RunStatus::Infeasible;
    result.hint = sol.hint;
    return result;
  }
  if (sol.status == solver::SolveStatus::Unbounded || !sol.has_incumbent) {
    result.status = RunStatus::Error;
    result.hint = sol.hint.empty() ? std::string(solver::to_string(sol.status)) : sol.hint;
    return result;
  }
  result.status = sol.status == solver::SolveStatus::Optimal ? RunStatus::Optimal
                                                             : RunStatus::NodeLimit;
  if (result.status == RunStatus::NodeLimit) result.hint = sol.hint;
  result.objective = sol.objective;
  result.schedule = extract_schedule(m, built, sol.values, flag);
  result.cost = cost_of(result.schedule, m, in);
  result.violations = validate_schedule(result.schedule, m, in);

  if (flag.network_constraints) {
    const auto& L = built.layout;
    for (int t = 0; t < T; ++t) {
      auto v = powerflow::solve_linear_pf(
          powerflow::assemble_zip(m, schedule_nodal_power(m, in, result.schedule, t)));
      for (std::size_t k = 0; k < L.eta_buses.size(); ++k) {
        const Complex opt(sol.values[L.v_re[t][k]], sol.values[L.v_im[t][k]]);
        result.voltage_mismatch =
            std::max(result.voltage_mismatch, std::abs(opt - v.voltages(static_cast<Eigen::Index>(k))));
      }
      result.voltages.push_back(std::move(v));
    }
  }
  return result;
}

}  // namespace mgsched::scheduler
