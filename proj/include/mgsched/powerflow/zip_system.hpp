#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mgsched/model/admittance.hpp"
#include "mgsched/model/grid_model.hpp"

namespace mgsched::powerflow {

/// Per model bus, per-unit on the system base. `load` is the consumption at
/// nominal voltage and is split by the bus ZIP fractions; `generation` is
/// always constant power.
struct NodalPower {
  std::vector<Complex> generation;
  std::vector<Complex> load;
};

/// ZIP components per eta bus in injection convention (consumption negative).
struct ZipInjection {
  Eigen::VectorXcd s_p;
  Eigen::VectorXcd s_l;
  Eigen::VectorXcd s_z;
};

struct ZipSystem {
  Eigen::VectorXcd a1;
  Eigen::VectorXcd a2;  // diagonal of A2
  Eigen::MatrixXcd a3;
  Complex slack_voltage;
  double h = 1.0;
  std::vector<int> bus_order;  // eta position -> model bus index
  AdmittanceBlocks admittance;
  ZipInjection injection;
};

struct VoltageSolution {
  Eigen::VectorXcd voltages;          // eta buses, ZipSystem::bus_order
  std::vector<Complex> bus_voltages;  // every model bus, slack included
  Complex slack_injection;            // per-unit, injected into the network
  int iteration_count = 0;
  double residual_norm = 0.0;
  bool converged = true;
  int slack = 0;
};

class PowerFlowError : public std::runtime_error {
 public:
  PowerFlowError(const std::string& what, double rcond)
      : std::runtime_error(what), rcond_(rcond) {}
  [[nodiscard]] double reciprocal_condition() const { return rcond_; }

 private:
  double rcond_;
};

/// Fixed bus loads for one hour (0-based) as nodal power, no generation.
NodalPower fixed_load_power(const GridModel& model, const HourlyInputs& inputs, int hour);

ZipInjection split_zip(const GridModel& model, const AdmittanceBlocks& y, const NodalPower& power);

ZipSystem assemble_zip(const AdmittanceBlocks& y, const ZipInjection& injection,
                       Complex slack_voltage, double h);
ZipSystem assemble_zip(const GridModel& model, const NodalPower& power);

/// Solves A1 + A2 conj(V) + A3 V = 0 through the stacked real system.
VoltageSolution solve_linear_pf(const ZipSystem& system);

/// Max modulus of A1 + A2 conj(V) + A3 V.
double linear_residual(const ZipSystem& system, const Eigen::VectorXcd& v);

struct OracleOptions {
  double tolerance = 1e-8;
  int max_iterations = 50;
};

/// Newton-Raphson in rectangular coordinates on the exact ZIP power balance.
/// Non-convergence is reported through VoltageSolution::converged with the
/// last iterate kept.
VoltageSolution ac_pf_oracle(const ZipSystem& system, OracleOptions options = {});
VoltageSolution ac_pf_oracle(const GridModel& model, const NodalPower& power,
                             OracleOptions options = {});

/// Exact complex power injected by the network at every model bus for the
/// given voltages, P_n + jQ_n with P_n = sum |V_n||V_m||Y_nm| cos(theta_nm + d_m - d_n).
std::vector<Complex> polar_injections(const Eigen::MatrixXcd& y, const std::vector<Complex>& v);

struct BranchFlow {
  std::string id;
  Complex from_end;  // pu, leaving the from bus
  Complex to_end;    // pu, leaving the to bus
  Complex current;   // pu, from -> to
  bool overloaded = false;
};

std::vector<BranchFlow> branch_flows(const GridModel& model, const VoltageSolution& solution);

struct ErrorRow {
  double scaling = 0.0;
  double max_v_error = 0.0;  // relative magnitude error
  int oracle_iters = 0;
  bool oracle_converged = true;
};

std::vector<ErrorRow> linearization_error_report(const GridModel& model, const NodalPower& base,
                                                 const std::vector<double>& scalings);
std::string error_report_csv(const std::vector<ErrorRow>& rows);

}  // namespace mgsched::powerflow
