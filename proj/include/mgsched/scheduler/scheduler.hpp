#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgsched/model/grid_model.hpp"
#include "mgsched/model/schedule.hpp"
#include "mgsched/powerflow/zip_system.hpp"
#include "mgsched/solver/solve.hpp"

namespace mgsched::scheduler {

/// Case 1 ignores the distribution network; Case 2 enforces it.
struct CaseFlag {
  bool network_constraints = false;

  static CaseFlag case1() { return {false}; }
  static CaseFlag case2() { return {true}; }
  [[nodiscard]] int number() const { return network_constraints ? 2 : 1; }
};

/// Column indices of the decision variables, -1 where a variable is absent.
/// Outer index is the device, inner index the hour (0-based).
struct ProblemLayout {
  std::vector<std::vector<int>> unit_on, unit_power, unit_start, unit_stop;
  std::vector<std::vector<int>> tie_pos, tie_neg;
  std::vector<std::vector<int>> charge, discharge, charge_mode, discharge_mode, soc;
  std::vector<std::vector<int>> served, load_on;
  /// Network overlay: [hour][eta position] real and imaginary bus voltage.
  std::vector<std::vector<int>> v_re, v_im;
  std::vector<int> eta_buses;
};

struct BuiltProblem {
  solver::MilpProblem problem;
  ProblemLayout layout;
};

/// Raised when the inputs make the problem infeasible before any solve.
class BuildError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Hourly voltage estimate, [hour][model bus], used to linearize the
/// dispatch-dependent constant-power term.
using VoltageEstimate = std::vector<std::vector<Complex>>;

VoltageEstimate flat_estimate(const GridModel& model);

BuiltProblem build_problem(const GridModel& model, CaseFlag flag, const HourlyInputs& inputs);

/// Appends the linearized network block (voltages, limits, octagonal branch
/// current bounds) for every hour.
void link_network_constraints(const GridModel& model, const HourlyInputs& inputs,
                              BuiltProblem& built, const VoltageEstimate& estimate);

Schedule extract_schedule(const GridModel& model, const BuiltProblem& built,
                          const std::vector<double>& values, CaseFlag flag);

/// Nodal generation/load (pu) for one hour of a schedule: decision injections
/// at unity power factor plus the fixed bus loads.
powerflow::NodalPower schedule_nodal_power(const GridModel& model, const HourlyInputs& inputs,
                                           const Schedule& schedule, int hour);

struct CostReport {
  double total = 0.0;
  double generation = 0.0;
  double startup_shutdown = 0.0;
  double exchange = 0.0;  // signed; export revenue is negative
  std::map<std::string, double> generation_by_microgrid;
  std::map<std::string, double> exchange_by_microgrid;
  std::vector<double> per_hour;
};

/// Recomputes the objective from a schedule without the solver.
CostReport cost_of(const Schedule& schedule, const GridModel& model, const HourlyInputs& inputs);

enum class RunStatus { Optimal, Infeasible, NodeLimit, Error };
std::string to_string(RunStatus status);

struct RunOptions {
  solver::MilpOptions milp;
  int max_linearizations = 5;
  double linearization_tolerance = 1e-4;  // pu
  VoltageEstimate initial_estimate;       // empty: flat
};

struct RunResult {
  RunStatus status = RunStatus::Error;
  CaseFlag flag;
  Schedule schedule;
  CostReport cost;
  double objective = 0.0;
  double gap = 0.0;
  long nodes = 0;
  std::string hint;
  std::vector<Violation> violations;
  /// Case 2: linear power-flow voltages at the final dispatch, per hour.
  std::vector<powerflow::VoltageSolution> voltages;
  int linearizations = 0;
  bool linearization_converged = true;
  /// Largest gap between the optimizer's voltage variables and the
  /// reported linear power-flow solution.
  double voltage_mismatch = 0.0;
};

RunResult run_deterministic(const GridModel& model, CaseFlag flag, const HourlyInputs& inputs,
                            const RunOptions& options = {});
RunResult run_deterministic(const GridModel& model, CaseFlag flag, const RunOptions& options = {});

}  // namespace mgsched::scheduler
