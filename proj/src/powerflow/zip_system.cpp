#include "mgsched/powerflow/zip_system.hpp"

#include <cmath>
#include <sstream>

namespace mgsched::powerflow {

NodalPower fixed_load_power(const GridModel& model, const HourlyInputs& inputs, int hour) {
  const double base = model.kw_per_pu();
  NodalPower p;
  p.generation.assign(model.buses.size(), Complex{});
  p.load.assign(model.buses.size(), Complex{});
  for (std::size_t b = 0; b < model.buses.size(); ++b) {
    p.load[b] = Complex(inputs.bus_load_p[b][hour], inputs.bus_load_q[b][hour]) / base;
  }
  return p;
}

ZipInjection split_zip(const GridModel& model, const AdmittanceBlocks& y, const NodalPower& power) {
  const auto m = static_cast<Eigen::Index>(y.eta_buses.size());
  if (power.generation.size() != model.buses.size() || power.load.size() != model.buses.size()) {
    throw std::invalid_argument("nodal power must have one entry per bus");
  }
  ZipInjection z;
  z.s_p = Eigen::VectorXcd::Zero(m);
  z.s_l = Eigen::VectorXcd::Zero(m);
  z.s_z = Eigen::VectorXcd::Zero(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const int b = y.eta_buses[k];
    const auto& zip = model.buses[b].zip;
    const Complex load = power.load[b];
    z.s_p(k) = power.generation[b] - zip.constant_power * load;
    z.s_l(k) = -zip.constant_current * load;
    z.s_z(k) = -zip.constant_impedance * load;
  }
  return z;
}

ZipSystem assemble_zip(const AdmittanceBlocks& y, const ZipInjection& injection,
                       Complex slack_voltage, double h) {
  const auto m = static_cast<Eigen::Index>(y.eta_buses.size());
  if (injection.s_p.size() != m || injection.s_l.size() != m || injection.s_z.size() != m) {
    throw std::invalid_argument("ZIP injection dimension does not match the eta partition");
  }
  ZipSystem s;
  s.h = h;
  s.slack_voltage = slack_voltage;
  s.bus_order = y.eta_buses;
  // The slack current term uses V_slack itself; for a real slack phasor this
  // coincides with the conjugated form.
  s.a1 = y.y_eta_s * slack_voltage - 2.0 * h * injection.s_p.conjugate() -
         h * injection.s_l.conjugate();
  s.a2 = h * h * injection.s_p.conjugate();
  s.a3 = y.y_eta_eta;
  s.a3.diagonal() -= h * h * injection.s_z.conjugate();
  s.admittance = y;
  s.injection = injection;
  return s;
}

ZipSystem assemble_zip(const GridModel& model, const NodalPower& power) {
  const auto y = build_admittance(model);
  return assemble_zip(y, split_zip(model, y, power), model.settings.slack_voltage,
                      1.0 / model.settings.v_norm);
}

namespace {

void finish(const ZipSystem& s, VoltageSolution& out) {
  const auto& y = s.admittance;
  out.slack = y.slack;
  const Complex i_slack = y.y_ss * s.slack_voltage + (y.y_s_eta * out.voltages)(0);
  out.slack_injection = s.slack_voltage * std::conj(i_slack);
  out.bus_voltages.assign(y.eta_position.size(), Complex{});
  out.bus_voltages[y.slack] = s.slack_voltage;
  for (std::size_t k = 0; k < s.bus_order.size(); ++k) {
    out.bus_voltages[s.bus_order[k]] = out.voltages(static_cast<Eigen::Index>(k));
  }
}

}  // namespace

double linear_residual(const ZipSystem& s, const Eigen::VectorXcd& v) {
  if (v.size() == 0) return 0.0;
  const Eigen::VectorXcd r = s.a1 + s.a2.cwiseProduct(v.conjugate()) + s.a3 * v;
  return r.cwiseAbs().maxCoeff();
}

VoltageSolution solve_linear_pf(const ZipSystem& s) {
  const auto m = s.a1.size();
  const Eigen::MatrixXd p = s.a3.real();
  const Eigen::MatrixXd q = s.a3.imag();
  const Eigen::VectorXd a = s.a2.real();
  const Eigen::VectorXd b = s.a2.imag();

  Eigen::MatrixXd k(2 * m, 2 * m);
  k.topLeftCorner(m, m) = p;
  k.topRightCorner(m, m) = -q;
  k.bottomLeftCorner(m, m) = q;
  k.bottomRightCorner(m, m) = p;
  k.topLeftCorner(m, m).diagonal() += a;
  k.topRightCorner(m, m).diagonal() += b;
  k.bottomLeftCorner(m, m).diagonal() += b;
  k.bottomRightCorner(m, m).diagonal() -= a;
  Eigen::VectorXd rhs(2 * m);
  rhs << -s.a1.real(), -s.a1.imag();

  VoltageSolution out;
  if (m > 0) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(k);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) {
      std::ostringstream os;
      os << "linear power-flow system is singular (reciprocal condition " << rcond << ")";
      throw PowerFlowError(os.str(), rcond);
    }
    const Eigen::VectorXd x = lu.solve(rhs);
    out.voltages = x.head(m).cast<Complex>() + Complex(0, 1) * x.tail(m).cast<Complex>();
  } else {
    out.voltages.resize(0);
  }
  out.residual_norm = linear_residual(s, out.voltages);
  finish(s, out);
  return out;
}

namespace {

// Power injected by the network minus the ZIP specification, per eta bus.
Eigen::VectorXcd mismatch(const ZipSystem& s, const Eigen::VectorXcd& v,
                          Eigen::VectorXcd& current) {
  const auto& y = s.admittance;
  current = y.y_eta_s * s.slack_voltage + y.y_eta_eta * v;
  const auto& z = s.injection;
  Eigen::VectorXcd f(v.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    const Complex target = z.s_p(k) + s.h * v(k) * z.s_l(k) + s.h * s.h * std::norm(v(k)) * z.s_z(k);
    f(k) = v(k) * std::conj(current(k)) - target;
  }
  return f;
}

}  // namespace

VoltageSolution ac_pf_oracle(const ZipSystem& s, OracleOptions options) {
  const auto m = s.a1.size();
  const auto& y = s.admittance;
  const auto& z = s.injection;
  Eigen::VectorXcd v = Eigen::VectorXcd::Constant(m, Complex(1.0, 0.0));
  Eigen::VectorXcd current;
  VoltageSolution out;
  out.converged = false;
  for (int it = 1; it <= options.max_iterations + 1; ++it) {
    const Eigen::VectorXcd f = mismatch(s, v, current);
    out.iteration_count = it;
    out.residual_norm = m > 0 ? f.cwiseAbs().maxCoeff() : 0.0;
    if (!std::isfinite(out.residual_norm)) break;
    if (out.residual_norm <= options.tolerance) {
      out.converged = true;
      break;
    }
    if (it > options.max_iterations) break;
    // Wirtinger derivatives of f with respect to V and conj(V).
    Eigen::MatrixXcd d_v = Eigen::MatrixXcd::Zero(m, m);
    Eigen::MatrixXcd d_vc = v.asDiagonal() * y.y_eta_eta.conjugate();
    for (Eigen::Index k = 0; k < m; ++k) {
      d_v(k, k) = std::conj(current(k)) - s.h * z.s_l(k) - s.h * s.h * z.s_z(k) * std::conj(v(k));
      d_vc(k, k) -= s.h * s.h * z.s_z(k) * v(k);
    }
    const Eigen::MatrixXcd d_e = d_v + d_vc;
    const Eigen::MatrixXcd d_f = Complex(0, 1) * (d_v - d_vc);
    Eigen::MatrixXd jac(2 * m, 2 * m);
    jac << d_e.real(), d_f.real(), d_e.imag(), d_f.imag();
    Eigen::VectorXd rhs(2 * m);
    rhs << -f.real(), -f.imag();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
    if (!(lu.rcond() > 1e-14)) break;
    const Eigen::VectorXd step = lu.solve(rhs);
    v += step.head(m).cast<Complex>() + Complex(0, 1) * step.tail(m).cast<Complex>();
  }
  out.voltages = v;
  finish(s, out);
  return out;
}

VoltageSolution ac_pf_oracle(const GridModel& model, const NodalPower& power,
                             OracleOptions options) {
  return ac_pf_oracle(assemble_zip(model, power), options);
}

std::vector<Complex> polar_injections(const Eigen::MatrixXcd& y, const std::vector<Complex>& v) {
  const auto n = static_cast<Eigen::Index>(v.size());
  std::vector<Complex> s(v.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    double p = 0.0;
    double q = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double mag = std::abs(v[i]) * std::abs(v[j]) * std::abs(y(i, j));
      if (mag == 0.0) continue;
      const double angle = std::arg(y(i, j)) + std::arg(v[j]) - std::arg(v[i]);
      p += mag * std::cos(angle);
      q -= mag * std::sin(angle);
    }
    s[i] = {p, q};
  }
  return s;
}

std::vector<BranchFlow> branch_flows(const GridModel& model, const VoltageSolution& sol) {
  std::vector<BranchFlow> flows;
  const double base = model.kw_per_pu();
  for (const auto& br : model.branches) {
    BranchFlow f;
    f.id = br.id;
    if (br.closed) {
      const Complex vn = sol.bus_voltages.at(model.bus_index(br.from_bus));
      const Complex vm = sol.bus_voltages.at(model.bus_index(br.to_bus));
      const Complex y = 1.0 / br.impedance;
      f.current = y * (vn - vm);
      f.from_end = vn * std::conj(f.current);
      f.to_end = vm * std::conj(-f.current);
      f.overloaded = std::max(std::abs(f.from_end), std::abs(f.to_end)) * base > br.thermal_limit;
    }
    flows.push_back(f);
  }
  return flows;
}

std::vector<ErrorRow> linearization_error_report(const GridModel& model, const NodalPower& base,
                                                 const std::vector<double>& scalings) {
  const auto y = build_admittance(model);
  const double h = 1.0 / model.settings.v_norm;
  std::vector<ErrorRow> rows;
  for (const double k : scalings) {
    NodalPower p = base;
    for (auto& g : p.generation) g *= k;
    for (auto& l : p.load) l *= k;
    const auto system = assemble_zip(y, split_zip(model, y, p), model.settings.slack_voltage, h);
    const auto lin = solve_linear_pf(system);
    const auto nr = ac_pf_oracle(system);
    ErrorRow row;
    row.scaling = k;
    row.oracle_iters = nr.iteration_count;
    row.oracle_converged = nr.converged;
    for (Eigen::Index i = 0; i < lin.voltages.size(); ++i) {
      const double exact = std::abs(nr.voltages(i));
      row.max_v_error = std::max(row.max_v_error, std::abs(std::abs(lin.voltages(i)) - exact) / exact);
    }
    if (!nr.converged) row.max_v_error = std::nan("");
    rows.push_back(row);
  }
  return rows;
}

std::string error_report_csv(const std::vector<ErrorRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "scaling,max_v_error,oracle_iters\n";
  for (const auto& r : rows) {
    os << r.scaling << ',';
    if (r.oracle_converged) {
      os << r.max_v_error;
    } else {
      os << "diverged";
    }
    os << ',' << r.oracle_iters << '\n';
  }
  return os.str();
}

}  // namespace mgsched::powerflow
