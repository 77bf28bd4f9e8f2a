#include <gtest/gtest.h>

#include <cmath>

#include "mgsched/model/case_io.hpp"
#include "mgsched/model/forecasts.hpp"
#include "mgsched/powerflow/zip_system.hpp"
#include "support/toy_models.hpp"

using namespace mgsched;
using namespace mgsched::powerflow;
using mgsched::testing::data_path;
using mgsched::testing::toy_model;

namespace {

NodalPower zero_power(const GridModel& m) {
  return {std::vector<Complex>(m.buses.size()), std::vector<Complex>(m.buses.size())};
}

GridModel with_zip(GridModel m, ZipFractions zip) {
  for (auto& b : m.buses) b.zip = zip;
  return m;
}

NodalPower bundled_peak(const GridModel& m, double scale) {
  const auto in = scale_forecasts(m);
  auto p = fixed_load_power(m, in, 8);
  for (auto& l : p.load) l *= scale;
  return p;
}

double max_rel_diff(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  return ((a - b).cwiseAbs().array() / b.cwiseAbs().array()).maxCoeff();
}

}  // namespace

TEST(AssembleZip, ZeroInjectionCoefficients) {
  const auto m = load_case(data_path("tables_case.json"));
  const auto s = assemble_zip(m, zero_power(m));
  const auto y = build_admittance(m);
  EXPECT_LT((s.a1 - y.y_eta_s * m.settings.slack_voltage).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(s.a2.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LT((s.a3 - y.y_eta_eta).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AssembleZip, TwoBusConstantPowerTerm) {
  const auto m = toy_model(1);
  auto p = zero_power(m);
  p.load[1] = -Complex(0.1, 0.05);  // injection S_p = 0.1+j0.05
  const auto s = assemble_zip(m, p);
  const auto y = build_admittance(m);
  const Complex second = s.a1(0) - (y.y_eta_s * m.settings.slack_voltage)(0);
  EXPECT_NEAR(std::abs(second - (-2.0 * Complex(0.1, -0.05))), 0.0, 1e-13);
  EXPECT_NEAR(std::abs(s.a2(0) - Complex(0.1, -0.05)), 0.0, 1e-15);
}

TEST(AssembleZip, ImpedanceLoadLeavesA2Zero) {
  const auto m = with_zip(toy_model(2), {0.0, 0.0, 1.0});
  auto p = zero_power(m);
  p.load[1] = {0.2, 0.1};
  p.load[2] = {0.1, 0.0};
  const auto s = assemble_zip(m, p);
  EXPECT_EQ(s.a2.cwiseAbs().maxCoeff(), 0.0);
  const auto y = build_admittance(m);
  EXPECT_LT(std::abs(s.a3(0, 0) - (y.y_eta_eta(0, 0) + std::conj(Complex(0.2, 0.1)))), 1e-14);
}

TEST(AssembleZip, DimensionMismatchThrows) {
  const auto m = toy_model(2);
  const auto y = build_admittance(m);
  ZipInjection z;
  z.s_p = z.s_l = z.s_z = Eigen::VectorXcd::Zero(5);
  EXPECT_THROW(assemble_zip(y, z, 1.0, 1.0), std::invalid_argument);
}

TEST(LinearPf, FlatVoltageIdentity) {
  auto m = load_case(data_path("tables_case.json"));
  for (const Complex vs : {Complex(1.0, 0.0), Complex(1.03, 0.0), Complex(0.98, 0.02)}) {
    m.settings.slack_voltage = vs;
    const auto sol = solve_linear_pf(assemble_zip(m, zero_power(m)));
    for (const auto& v : sol.bus_voltages) EXPECT_LT(std::abs(v - vs), 1e-14);
    EXPECT_LT(std::abs(sol.slack_injection), 1e-12);
  }
}

TEST(LinearPf, ExactWithoutConstantPower) {
  for (const ZipFractions zip : {ZipFractions{0, 0, 1}, ZipFractions{0, 0.5, 0.5}, ZipFractions{0, 1, 0}}) {
    const auto m = with_zip(load_case(data_path("tables_case.json")), zip);
    const auto p = bundled_peak(m, 1.0);
    const auto s = assemble_zip(m, p);
    const auto lin = solve_linear_pf(s);
    const auto nr = ac_pf_oracle(s);
    ASSERT_TRUE(nr.converged);
    EXPECT_LE(max_rel_diff(lin.voltages, nr.voltages), 1e-10);

    // Direct nodal solve: (Y_ee - h^2 diag(S_z*)) V = -Y_es Vs + h S_l*.
    Eigen::MatrixXcd a = s.admittance.y_eta_eta;
    a.diagonal() -= s.injection.s_z.conjugate();
    const Eigen::VectorXcd b = -s.admittance.y_eta_s * m.settings.slack_voltage +
                               s.injection.s_l.conjugate();
    const Eigen::VectorXcd direct = a.fullPivLu().solve(b);
    EXPECT_LE(max_rel_diff(lin.voltages, direct), 1e-12);
  }
}

TEST(LinearPf, ResidualOfDefiningSystem) {
  const auto m = load_case(data_path("tables_case.json"));
  const auto s = assemble_zip(m, bundled_peak(m, 1.0));
  const auto sol = solve_linear_pf(s);
  EXPECT_LE(sol.residual_norm, 1e-10);
  EXPECT_LE(linear_residual(s, sol.voltages), 1e-10);
}

TEST(LinearPf, TwoBusNearOracle) {
  const auto m = toy_model(1);
  auto p = zero_power(m);
  p.load[1] = {0.1, 0.05};
  const auto s = assemble_zip(m, p);
  const auto lin = solve_linear_pf(s);
  const auto nr = ac_pf_oracle(s);
  ASSERT_TRUE(nr.converged);
  EXPECT_LT(std::abs(lin.voltages(0) - nr.voltages(0)) / std::abs(nr.voltages(0)), 0.01);
}

TEST(LinearPf, SingularSystemReported) {
  auto m = toy_model(1);
  auto p = zero_power(m);
  m.buses[1].zip = {0, 0, 1};
  // An impedance load that cancels the line admittance.
  p.load[1] = std::conj(Complex(-50.0, 50.0));
  EXPECT_THROW(solve_linear_pf(assemble_zip(m, p)), PowerFlowError);
}

TEST(Oracle, ZeroInjectionOneIteration) {
  const auto m = load_case(data_path("tables_case.json"));
  const auto sol = ac_pf_oracle(m, zero_power(m));
  EXPECT_TRUE(sol.converged);
  EXPECT_EQ(sol.iteration_count, 1);
  for (const auto& v : sol.bus_voltages) EXPECT_LT(std::abs(v - Complex(1.0, 0.0)), 1e-15);
}

TEST(Oracle, LightLoadSweepWithinHalfPercent) {
  const auto m = load_case(data_path("tables_case.json"));
  const auto in = scale_forecasts(m);
  for (int hour = 0; hour < m.horizon(); ++hour) {
    auto p = fixed_load_power(m, in, hour);
    double worst = 0.0;
    for (auto& l : p.load) worst = std::max(worst, std::abs(l));
    for (auto& l : p.load) l *= 0.1 / worst;  // |S| <= 0.1 pu per bus
    const auto s = assemble_zip(m, p);
    const auto nr = ac_pf_oracle(s);
    ASSERT_TRUE(nr.converged);
    EXPECT_LE(nr.residual_norm, 1e-8);
    const auto lin = solve_linear_pf(s);
    for (Eigen::Index i = 0; i < lin.voltages.size(); ++i) {
      const double e = std::abs(nr.voltages(i));
      EXPECT_LE(std::abs(std::abs(lin.voltages(i)) - e) / e, 0.005);
    }
  }
}

TEST(Oracle, DivergenceKeepsLastIterate) {
  const auto m = toy_model(1);
  auto p = zero_power(m);
  p.load[1] = {200.0, 100.0};
  OracleOptions opt;
  opt.max_iterations = 20;
  const auto sol = ac_pf_oracle(m, p, opt);
  EXPECT_FALSE(sol.converged);
  EXPECT_LE(sol.iteration_count, 21);
  EXPECT_EQ(sol.voltages.size(), 1);
}

TEST(Oracle, PowerConservation) {
  const auto m = load_case(data_path("tables_case.json"));
  auto p = bundled_peak(m, 1.0);
  p.generation[m.bus_index("B11")] = {0.8, 0.0};
  p.generation[m.bus_index("B32")] = {0.5, 0.1};
  const auto s = assemble_zip(m, p);
  const auto sol = ac_pf_oracle(s);
  ASSERT_TRUE(sol.converged);

  Complex generation = 0.0;
  Complex consumed = 0.0;
  for (std::size_t b = 0; b < m.buses.size(); ++b) {
    if (static_cast<int>(b) == sol.slack) continue;
    const auto& zip = m.buses[b].zip;
    const Complex v = sol.bus_voltages[b];
    generation += p.generation[b];
    consumed += p.load[b] * (zip.constant_power + zip.constant_current * v + zip.constant_impedance * std::norm(v));
  }
  Complex losses = 0.0;
  for (const auto& f : branch_flows(m, sol)) losses += f.from_end + f.to_end;
  EXPECT_LT(std::abs(sol.slack_injection + generation - consumed - losses), 1e-8);
}

TEST(Oracle, PolarFormMatchesComplexForm) {
  const auto m = load_case(data_path("tables_case.json"));
  const auto sol = ac_pf_oracle(m, bundled_peak(m, 1.0));
  const auto y = build_admittance(m);
  Eigen::VectorXcd v(sol.bus_voltages.size());
  for (std::size_t i = 0; i < sol.bus_voltages.size(); ++i) v(i) = sol.bus_voltages[i];
  const Eigen::VectorXcd current = y.full * v;
  const auto polar = polar_injections(y.full, sol.bus_voltages);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    EXPECT_LT(std::abs(polar[i] - v(i) * std::conj(current(i))), 1e-10);
  }
}

TEST(BranchFlows, FlatVoltageZero) {
  const auto m = load_case(data_path("tables_case.json"));
  const auto sol = solve_linear_pf(assemble_zip(m, zero_power(m)));
  for (const auto& f : branch_flows(m, sol)) {
    EXPECT_LT(std::abs(f.from_end), 1e-12);
    EXPECT_FALSE(f.overloaded);
  }
}

TEST(BranchFlows, TwoBusSendingEndCarriesLosses) {
  auto m = toy_model(1);
  auto p = zero_power(m);
  p.load[1] = {0.1, 0.05};
  const auto sol = ac_pf_oracle(m, p);
  ASSERT_TRUE(sol.converged);
  const auto f = branch_flows(m, sol);
  ASSERT_EQ(f.size(), 1u);
  const Complex losses = std::norm(f[0].current) * m.branches[0].impedance;
  EXPECT_LT(std::abs(-f[0].to_end - Complex(0.1, 0.05)), 1e-8);
  EXPECT_LT(std::abs(f[0].from_end - Complex(0.1, 0.05) - losses), 1e-8);
  EXPECT_GT(std::real(losses), 0.0);

  m.branches[0].thermal_limit = 50.0;  // kVA, below the 112 kVA flow
  EXPECT_TRUE(branch_flows(m, sol)[0].overloaded);
}

TEST(ErrorReport, RowsAndCsv) {
  const auto m = load_case(data_path("tables_case.json"));
  const auto base = bundled_peak(m, 1.0);
  const auto rows = linearization_error_report(m, base, {0.0, 0.5, 1.0, 100.0});
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_LT(rows[0].max_v_error, 1e-14);
  EXPECT_LE(rows[1].max_v_error, rows[2].max_v_error);
  EXPECT_FALSE(rows[3].oracle_converged);
  const auto csv = error_report_csv(rows);
  EXPECT_EQ(csv.rfind("scaling,max_v_error,oracle_iters\n", 0), 0u);
  EXPECT_NE(csv.find("diverged"), std::string::npos);
}

TEST(ErrorReport, FivePercentDropWithinHalfPercent) {
  const auto m = load_case(data_path("tables_case.json"));
  const auto base = bundled_peak(m, 1.0);
  // Find the loading that produces a 5% drop, then check every lighter point.
  const auto y = build_admittance(m);
  double hi = 1.0;
  for (;; hi *= 1.5) {
    NodalPower p = base;
    for (auto& l : p.load) l *= hi;
    const auto nr = ac_pf_oracle(m, p);
    ASSERT_TRUE(nr.converged);
    if (nr.voltages.cwiseAbs().minCoeff() < 0.95) break;
  }
  std::vector<double> grid;
  for (int i = 1; i <= 20; ++i) grid.push_back(hi * i / 20.0);
  for (const auto& row : linearization_error_report(m, base, grid)) {
    NodalPower p = base;
    for (auto& l : p.load) l *= row.scaling;
    const auto nr = ac_pf_oracle(m, p);
    if (nr.voltages.cwiseAbs().minCoeff() < 0.95) continue;
    EXPECT_LE(row.max_v_error, 0.005) << "scaling " << row.scaling;
  }
}
