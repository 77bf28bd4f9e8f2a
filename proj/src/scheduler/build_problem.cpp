#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mgsched/model/admittance.hpp"
#include "mgsched/scheduler/scheduler.hpp"

namespace mgsched::scheduler {

using solver::Sense;
using solver::Term;

namespace {

// Smallest power that still marks a device as running; keeps the optimizer's
// mode binaries aligned with what the schedule validator can observe.
constexpr double kRunningFloorKw = 0.01;

std::string tag(const std::string& kind, const std::string& id, int t) {
  return kind + "_" + id + "_t" + std::to_string(t + 1);
}

std::vector<std::vector<int>> table(std::size_t rows, int horizon) {
  return std::vector<std::vector<int>>(rows, std::vector<int>(horizon, -1));
}

// Start indicators and minimum run-length rows for a 0/1 mode sequence over
// hours [first, last]; the mode is off before `first`.
void add_min_run(solver::MilpProblem& p, const std::vector<int>& mode, int first, int last,
                 int min_len, const std::string& name) {
  if (min_len <= 1) return;
  std::vector<int> start(mode.size(), -1);
  for (int t = first; t <= last; ++t) {
    start[t] = p.add_variable(tag(name + "_start", "", t), 0.0, 1.0);
    std::vector<Term> terms{{start[t], 1.0}, {mode[t], -1.0}};
    if (t > first) terms.push_back({mode[t - 1], 1.0});
    p.add_row(tag(name + "_starts", "", t), terms, Sense::GreaterEqual, 0.0);
  }
  for (int t = first; t <= last; ++t) {
    std::vector<Term> terms{{mode[t], -1.0}};
    for (int tau = std::max(first, t - min_len + 1); tau <= t; ++tau) terms.push_back({start[tau], 1.0});
    p.add_row(tag(name + "_minrun", "", t), terms, Sense::LessEqual, 0.0);
  }
}

void check_supply(const GridModel& m, const HourlyInputs& in) {
  const int T = m.horizon();
  for (int t = 0; t < T; ++t) {
    double need = 0.0;
    for (const auto& series : in.bus_load_p) need += series[t];
    double supply = 0.0;
    for (std::size_t i = 0; i < m.ders.size(); ++i) supply += in.der_available[i][t];
    for (const auto& s : m.storages) supply += s.p_discharge_max;
    for (const auto& tie : m.tie_lines) {
      if (tie.from == kMainGrid) supply += std::max(tie.p_max, 0.0);
      if (tie.to == kMainGrid) supply += std::max(-tie.p_min, 0.0);
    }
    for (const auto& l : m.adjustable_loads) {
      if (l.in_window(t + 1) && l.kind == LoadKind::Curtailable) need += l.p_min;
    }
    if (need > supply + 1e-9) {
      std::ostringstream os;
      os << "hour " << t + 1 << ": fixed demand " << need << " kW exceeds total supply capacity "
         << supply << " kW";
      throw BuildError(os.str());
    }
  }
  for (const auto& l : m.adjustable_loads) {
    const double len = l.window_length();
    if (l.required_energy > l.p_max * len + 1e-9 ||
        (l.kind == LoadKind::Curtailable && l.required_energy < l.p_min * len - 1e-9)) {
      throw BuildError("adjustable load '" + l.id + "': required energy outside window capacity");
    }
  }
}

}  // namespace

VoltageEstimate flat_estimate(const GridModel& model) {
  return VoltageEstimate(model.horizon(),
                         std::vector<Complex>(model.buses.size(), Complex(1.0, 0.0)));
}

BuiltProblem build_problem(const GridModel& m, CaseFlag flag, const HourlyInputs& in) {
  const int T = m.horizon();
  const double base = m.kw_per_pu();
  if (static_cast<int>(in.system_load.size()) != T || in.der_available.size() != m.ders.size() ||
      in.tie_price.size() != m.tie_lines.size() || in.bus_load_p.size() != m.buses.size()) {
    throw std::invalid_argument("realized inputs do not match the model dimensions");
  }
  check_supply(m, in);

  BuiltProblem built;
  auto& p = built.problem;
  auto& L = built.layout;

  // Power balance terms per microgrid and hour, completed at the end.
  std::vector<std::vector<std::vector<Term>>> balance(
      m.microgrids.size(), std::vector<std::vector<Term>>(T));
  auto mg_of = [&](const std::string& id) { return m.microgrid_index(id); };

  // Units.
  L.unit_on = table(m.ders.size(), T);
  L.unit_power = table(m.ders.size(), T);
  L.unit_start = table(m.ders.size(), T);
  L.unit_stop = table(m.ders.size(), T);
  for (std::size_t i = 0; i < m.ders.size(); ++i) {
    const auto& d = m.ders[i];
    const int g = mg_of(d.microgrid_id);
    if (!d.dispatchable) {
      for (int t = 0; t < T; ++t) {
        L.unit_power[i][t] = p.add_variable(tag("P", d.id, t), 0.0, in.der_available[i][t] / base);
        balance[g][t].push_back({L.unit_power[i][t], 1.0});
      }
      continue;
    }
    const int on0 = d.initially_on() ? 1 : 0;
    const double p0 = d.power_before_horizon() / base;
    // Hours forced by the run length carried into the horizon.
    const int forced_on = d.initially_on() ? std::max(0, d.min_up - d.initial_status) : 0;
    const int forced_off = d.initially_on() ? 0 : std::max(0, d.min_down + d.initial_status);
    for (int t = 0; t < T; ++t) {
      double lo = 0.0;
      double hi = 1.0;
      if (t < forced_on) lo = 1.0;
      if (t < forced_off) hi = 0.0;
      L.unit_on[i][t] = p.add_variable(tag("U", d.id, t), lo, hi, true);
      L.unit_power[i][t] = p.add_variable(tag("P", d.id, t), 0.0, d.p_max / base, false,
                                          d.cost * base);
      L.unit_start[i][t] = p.add_variable(tag("SU", d.id, t), 0.0, 1.0, false, d.startup_cost);
      L.unit_stop[i][t] = p.add_variable(tag("SD", d.id, t), 0.0, 1.0, false, d.shutdown_cost);
      const int u = L.unit_on[i][t];
      const int pw = L.unit_power[i][t];
      balance[g][t].push_back({pw, 1.0});

      // Status transition.
      std::vector<Term> tr{{u, 1.0}, {L.unit_start[i][t], -1.0}, {L.unit_stop[i][t], 1.0}};
      if (t > 0) tr.push_back({L.unit_on[i][t - 1], -1.0});
      p.add_row(tag("transition", d.id, t), tr, Sense::Equal, t > 0 ? 0.0 : on0);

      // Capacity with commitment.
      p.add_row(tag("pmin", d.id, t), {{pw, 1.0}, {u, -d.p_min / base}}, Sense::GreaterEqual, 0.0);
      p.add_row(tag("pmax", d.id, t), {{pw, 1.0}, {u, -d.p_max / base}}, Sense::LessEqual, 0.0);

      // Ramps.
      if (d.ramp_up < d.p_max) {
        if (t == 0) {
          p.add_row(tag("rampup", d.id, t), {{pw, 1.0}}, Sense::LessEqual, p0 + d.ramp_up / base);
        } else {
          p.add_row(tag("rampup", d.id, t), {{pw, 1.0}, {L.unit_power[i][t - 1], -1.0}},
                    Sense::LessEqual, d.ramp_up / base);
        }
      }
      if (d.ramp_down < d.p_max) {
        if (t == 0) {
          p.add_row(tag("rampdown", d.id, t), {{pw, -1.0}}, Sense::LessEqual,
                    d.ramp_down / base - p0);
        } else {
          p.add_row(tag("rampdown", d.id, t), {{pw, -1.0}, {L.unit_power[i][t - 1], 1.0}},
                    Sense::LessEqual, d.ramp_down / base);
        }
      }
    }
    // Minimum up and down times via turn-on / turn-off indicators.
    for (int t = 0; t < T; ++t) {
      if (d.min_up > 1) {
        std::vector<Term> terms{{L.unit_on[i][t], -1.0}};
        for (int tau = std::max(0, t - d.min_up + 1); tau <= t; ++tau) {
          terms.push_back({L.unit_start[i][tau], 1.0});
        }
        p.add_row(tag("minup", d.id, t), terms, Sense::LessEqual, 0.0);
      }
      if (d.min_down > 1) {
        std::vector<Term> terms{{L.unit_on[i][t], 1.0}};
        for (int tau = std::max(0, t - d.min_down + 1); tau <= t; ++tau) {
          terms.push_back({L.unit_stop[i][tau], 1.0});
        }
        p.add_row(tag("mindown", d.id, t), terms, Sense::LessEqual, 1.0);
      }
    }
  }

  // Tie lines: importer pays the hourly price; main-grid exports may earn
  // the export price.
  L.tie_pos = table(m.tie_lines.size(), T);
  L.tie_neg = table(m.tie_lines.size(), T);
  for (std::size_t k = 0; k < m.tie_lines.size(); ++k) {
    const auto& tie = m.tie_lines[k];
    const int to = mg_of(tie.to);
    const int from = mg_of(tie.from);
    for (int t = 0; t < T; ++t) {
      const double price = in.tie_price[k][t] * base;
      const double export_revenue = tie.export_price * base;
      const double pos_cost = to >= 0 ? price : -export_revenue;
      const double neg_cost = from >= 0 ? price : -export_revenue;
      const int pos = p.add_variable(tag("Fpos", tie.id, t), 0.0, std::max(tie.p_max, 0.0) / base,
                                     false, pos_cost);
      const int neg = p.add_variable(tag("Fneg", tie.id, t), 0.0, std::max(-tie.p_min, 0.0) / base,
                                     false, neg_cost);
      L.tie_pos[k][t] = pos;
      L.tie_neg[k][t] = neg;
      if (tie.p_min > 0.0) {
        p.add_row(tag("tiemin", tie.id, t), {{pos, 1.0}, {neg, -1.0}}, Sense::GreaterEqual,
                  tie.p_min / base);
      }
      if (tie.p_max < 0.0) {
        p.add_row(tag("tiemax", tie.id, t), {{pos, 1.0}, {neg, -1.0}}, Sense::LessEqual,
                  tie.p_max / base);
      }
      if (to >= 0) {
        balance[to][t].push_back({pos, 1.0});
        balance[to][t].push_back({neg, -1.0});
      }
      if (from >= 0) {
        balance[from][t].push_back({pos, -1.0});
        balance[from][t].push_back({neg, 1.0});
      }
    }
  }

  // Storage.
  const auto S = m.storages.size();
  L.charge = table(S, T);
  L.discharge = table(S, T);
  L.charge_mode = table(S, T);
  L.discharge_mode = table(S, T);
  L.soc = table(S, T);
  for (std::size_t k = 0; k < S; ++k) {
    const auto& s = m.storages[k];
    const int g = mg_of(s.microgrid_id);
    const double eta = s.one_way_efficiency();
    const double c_min = std::max(s.p_charge_min, kRunningFloorKw) / base;
    const double d_min = std::max(s.p_discharge_min, kRunningFloorKw) / base;
    for (int t = 0; t < T; ++t) {
      const int c = p.add_variable(tag("C", s.id, t), 0.0, s.p_charge_max / base);
      const int d = p.add_variable(tag("D", s.id, t), 0.0, s.p_discharge_max / base);
      const int mc = p.add_binary(tag("Mc", s.id, t));
      const int md = p.add_binary(tag("Md", s.id, t));
      const double final_floor = t == T - 1 ? s.final_soc_min / base : 0.0;
      const int e = p.add_variable(tag("SOC", s.id, t), final_floor, s.energy_capacity / base);
      L.charge[k][t] = c;
      L.discharge[k][t] = d;
      L.charge_mode[k][t] = mc;
      L.discharge_mode[k][t] = md;
      L.soc[k][t] = e;
      p.add_row(tag("cmin", s.id, t), {{c, 1.0}, {mc, -c_min}}, Sense::GreaterEqual, 0.0);
      p.add_row(tag("cmax", s.id, t), {{c, 1.0}, {mc, -s.p_charge_max / base}}, Sense::LessEqual, 0.0);
      p.add_row(tag("dmin", s.id, t), {{d, 1.0}, {md, -d_min}}, Sense::GreaterEqual, 0.0);
      p.add_row(tag("dmax", s.id, t), {{d, 1.0}, {md, -s.p_discharge_max / base}}, Sense::LessEqual,
                0.0);
      p.add_row(tag("mode", s.id, t), {{mc, 1.0}, {md, 1.0}}, Sense::LessEqual, 1.0);
      std::vector<Term> dyn{{e, 1.0}, {c, -eta}, {d, 1.0 / eta}};
      if (t > 0) dyn.push_back({L.soc[k][t - 1], -1.0});
      p.add_row(tag("soc", s.id, t), dyn, Sense::Equal, t > 0 ? 0.0 : s.initial_soc / base);
      balance[g][t].push_back({d, 1.0});
      balance[g][t].push_back({c, -1.0});
    }
    add_min_run(p, L.charge_mode[k], 0, T - 1, s.min_charge_time, "charge_" + s.id);
    add_min_run(p, L.discharge_mode[k], 0, T - 1, s.min_discharge_time, "discharge_" + s.id);
  }

  // Adjustable loads.
  L.served = table(m.adjustable_loads.size(), T);
  L.load_on = table(m.adjustable_loads.size(), T);
  for (std::size_t k = 0; k < m.adjustable_loads.size(); ++k) {
    const auto& l = m.adjustable_loads[k];
    const int g = mg_of(l.microgrid_id);
    const int first = l.window_start - 1;
    const int last = l.window_end - 1;
    const bool shiftable = l.kind == LoadKind::Shiftable;
    const bool needs_binary = shiftable && (l.p_min > 0.0 || l.min_on_time > 1);
    std::vector<Term> energy;
    for (int t = first; t <= last; ++t) {
      const double lo = shiftable ? 0.0 : l.p_min / base;
      const int dv = p.add_variable(tag("Dl", l.id, t), lo, l.p_max / base);
      L.served[k][t] = dv;
      energy.push_back({dv, 1.0});
      balance[g][t].push_back({dv, -1.0});
      if (needs_binary) {
        const double floor = std::max(l.p_min, l.min_on_time > 1 ? kRunningFloorKw : 0.0) / base;
        const int on = p.add_binary(tag("On", l.id, t));
        L.load_on[k][t] = on;
        p.add_row(tag("lmin", l.id, t), {{dv, 1.0}, {on, -floor}}, Sense::GreaterEqual, 0.0);
        p.add_row(tag("lmax", l.id, t), {{dv, 1.0}, {on, -l.p_max / base}}, Sense::LessEqual, 0.0);
      }
    }
    if (needs_binary) add_min_run(p, L.load_on[k], first, last, l.min_on_time, "load_" + l.id);
    p.add_row("energy_" + l.id, energy, Sense::Equal, l.required_energy / base);
  }

  // Per-microgrid balance.
  for (std::size_t g = 0; g < m.microgrids.size(); ++g) {
    const auto& mg = m.microgrids[g];
    for (int t = 0; t < T; ++t) {
      double fixed = 0.0;
      for (std::size_t b = 0; b < m.buses.size(); ++b) {
        if (m.buses[b].microgrid_id == mg.id) fixed += in.bus_load_p[b][t];
      }
      p.add_row(tag("balance", mg.id, t), balance[g][t], Sense::Equal, fixed / base);
    }
  }

  if (flag.network_constraints) link_network_constraints(m, in, built, flat_estimate(m));
  return built;
}

void link_network_constraints(const GridModel& m, const HourlyInputs& in, BuiltProblem& built,
                              const VoltageEstimate& estimate) {
  auto& p = built.problem;
  auto& L = built.layout;
  const int T = m.horizon();
  const double base = m.kw_per_pu();
  const double h = 1.0 / m.settings.v_norm;
  const Complex vs = m.settings.slack_voltage;
  const auto y = build_admittance(m);
  const auto n = y.eta_buses.size();
  if (static_cast<int>(estimate.size()) != T) {
    throw std::invalid_argument("voltage estimate must cover every hour");
  }
  L.eta_buses = y.eta_buses;
  L.v_re.assign(T, std::vector<int>(n, -1));
  L.v_im.assign(T, std::vector<int>(n, -1));

  // Decision injections by eta position: (column, sign) pairs in pu.
  std::vector<std::vector<std::pair<const std::vector<int>*, double>>> at_bus(n);
  auto attach = [&](const std::string& bus, const std::vector<int>* cols, double sign) {
    const int pos = y.eta_position.at(m.bus_index(bus));
    if (pos < 0) throw std::invalid_argument("device attached to the slack bus");
    at_bus[pos].push_back({cols, sign});
  };
  for (std::size_t i = 0; i < m.ders.size(); ++i) attach(m.ders[i].bus_id, &L.unit_power[i], 1.0);
  for (std::size_t k = 0; k < m.storages.size(); ++k) {
    attach(m.storages[k].bus_id, &L.discharge[k], 1.0);
    attach(m.storages[k].bus_id, &L.charge[k], -1.0);
  }
  for (std::size_t k = 0; k < m.adjustable_loads.size(); ++k) {
    attach(m.adjustable_loads[k].bus_id, &L.served[k], -1.0);
  }

  std::vector<std::vector<std::pair<int, Complex>>> y_rows(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const Complex v = y.y_eta_eta(r, c);
      if (v != Complex{}) y_rows[r].push_back({static_cast<int>(c), v});
    }
  }

  const double octagon = std::cos(std::numbers::pi / 8.0);
  for (int t = 0; t < T; ++t) {
    auto& re = L.v_re[t];
    auto& im = L.v_im[t];
    for (std::size_t k = 0; k < n; ++k) {
      const auto& bus = m.buses[y.eta_buses[k]];
      re[k] = p.add_variable(tag("Vre", bus.id, t), bus.v_min, bus.v_max);
      im[k] = p.add_variable(tag("Vim", bus.id, t), -m.settings.im_cap, m.settings.im_cap);
    }
    const auto fixed = powerflow::split_zip(m, y, powerflow::fixed_load_power(m, in, t));
    for (std::size_t k = 0; k < n; ++k) {
      const auto& bus = m.buses[y.eta_buses[k]];
      // A1_fixed + A2_fixed conj(V) + A3 V - h P_dec (2 - h conj(V_hat)) = 0
      const Complex a1 = (y.y_eta_s(k) * vs) - 2.0 * h * std::conj(fixed.s_p(k)) -
                         h * std::conj(fixed.s_l(k));
      const Complex a2 = h * h * std::conj(fixed.s_p(k));
      const Complex vhat = estimate[t].at(y.eta_buses[k]);
      const Complex coupling = -h * (2.0 - h * std::conj(vhat));
      std::vector<Term> row_re;
      std::vector<Term> row_im;
      for (const auto& [c, yv] : y_rows[k]) {
        Complex a3 = yv;
        if (c == static_cast<int>(k)) a3 -= h * h * std::conj(fixed.s_z(k));
        row_re.push_back({re[c], a3.real()});
        row_re.push_back({im[c], -a3.imag()});
        row_im.push_back({re[c], a3.imag()});
        row_im.push_back({im[c], a3.real()});
      }
      row_re.push_back({re[k], a2.real()});
      row_re.push_back({im[k], a2.imag()});
      row_im.push_back({re[k], a2.imag()});
      row_im.push_back({im[k], -a2.real()});
      for (const auto& [cols, sign] : at_bus[k]) {
        const int col = (*cols)[t];
        if (col < 0) continue;
        row_re.push_back({col, sign * coupling.real()});
        row_im.push_back({col, sign * coupling.imag()});
      }
      p.add_row(tag("pf_re", bus.id, t), row_re, Sense::Equal, -a1.real());
      p.add_row(tag("pf_im", bus.id, t), row_im, Sense::Equal, -a1.imag());
    }

    // Branch current magnitude, octagon inscribed in |I| <= I_max.
    for (const auto& br : m.branches) {
      if (!br.closed) continue;
      const int a = y.eta_position[m.bus_index(br.from_bus)];
      const int b = y.eta_position[m.bus_index(br.to_bus)];
      const Complex g = 1.0 / br.impedance;
      const double i_max = br.thermal_limit / base / m.settings.v_norm;
      // I = g (V_a - V_b); a slack end contributes a constant.
      Complex constant{};
      std::vector<std::pair<int, Complex>> coeffs;  // (eta position, multiplier of V)
      if (a >= 0) coeffs.push_back({a, g}); else constant += g * vs;
      if (b >= 0) coeffs.push_back({b, -g}); else constant -= g * vs;
      for (int s = 0; s < 8; ++s) {
        const double cs = std::cos(s * std::numbers::pi / 4.0);
        const double sn = std::sin(s * std::numbers::pi / 4.0);
        // cs Re(I) + sn Im(I), with Re(cV) = Re(c) e - Im(c) f, Im(cV) = Im(c) e + Re(c) f.
        std::vector<Term> terms;
        for (const auto& [pos, c] : coeffs) {
          terms.push_back({re[pos], cs * c.real() + sn * c.imag()});
          terms.push_back({im[pos], -cs * c.imag() + sn * c.real()});
        }
        const double rhs = i_max * octagon - (cs * constant.real() + sn * constant.imag());
        p.add_row(tag("thermal" + std::to_string(s), br.id, t), terms, Sense::LessEqual, rhs);
      }
    }
  }
}

}  // namespace mgsched::scheduler
