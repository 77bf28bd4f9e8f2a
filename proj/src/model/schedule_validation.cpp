#include <cmath>
#include <sstream>

#include "mgsched/model/forecasts.hpp"
#include "mgsched/model/schedule.hpp"

namespace mgsched {

namespace {

class Collector {
 public:
  explicit Collector(std::vector<Violation>& out) : out_(out) {}

  void add(std::string kind, const std::string& entity, int hour, double amount,
           std::string detail = {}) {
    out_.push_back({std::move(kind), entity, hour, amount, std::move(detail)});
  }

 private:
  std::vector<Violation>& out_;
};

template <typename T>
bool sized(const std::vector<T>& v, int horizon) {
  return static_cast<int>(v.size()) == horizon;
}

std::string describe(const char* what, double value, double limit) {
  std::ostringstream os;
  os << what << ' ' << value << " vs limit " << limit;
  return os.str();
}

// Hours at which a run of `active` ended too early. A run cut off by the end
// of `last` (inclusive, 1-based) is not a violation.
template <typename Pred>
void check_run_lengths(Collector& c, const char* kind, const std::string& id, int first,
                       int last, int min_len, int carried, Pred active) {
  if (min_len <= 1) return;
  int run = carried;
  for (int t = first; t <= last; ++t) {
    if (active(t)) {
      ++run;
    } else {
      if (run > 0 && run < min_len) {
        c.add(kind, id, t, min_len - run,
              "run of " + std::to_string(run) + " h, minimum " + std::to_string(min_len));
      }
      run = 0;
    }
  }
}

}  // namespace

std::vector<std::vector<double>> microgrid_net_imports(const Schedule& schedule,
                                                       const GridModel& model) {
  const int T = schedule.horizon;
  std::vector<std::vector<double>> net(model.microgrids.size(), std::vector<double>(T, 0.0));
  for (std::size_t k = 0; k < model.tie_lines.size() && k < schedule.ties.size(); ++k) {
    const auto& tie = model.tie_lines[k];
    const int to = model.microgrid_index(tie.to);
    const int from = model.microgrid_index(tie.from);
    for (int t = 0; t < T; ++t) {
      const double f = schedule.ties[k].flow[t];
      if (to >= 0) net[to][t] += f;
      if (from >= 0) net[from][t] -= f;
    }
  }
  return net;
}

std::vector<Violation> validate_schedule(const Schedule& s, const GridModel& model,
                                         ValidationTolerance tol) {
  return validate_schedule(s, model, scale_forecasts(model), tol);
}

std::vector<Violation> validate_schedule(const Schedule& s, const GridModel& model,
                                         const HourlyInputs& inputs, ValidationTolerance tol) {
  std::vector<Violation> out;
  Collector c(out);
  const int T = model.horizon();
  const double ptol = tol.power;
  const double etol = tol.energy;

  bool shape_ok = s.horizon == T && s.units.size() == model.ders.size() &&
                  s.ties.size() == model.tie_lines.size() &&
                  s.storages.size() == model.storages.size() &&
                  s.loads.size() == model.adjustable_loads.size();
  for (const auto& u : s.units) {
    shape_ok = shape_ok && sized(u.status, T) && sized(u.power, T) && sized(u.startup, T) &&
               sized(u.shutdown, T);
  }
  for (const auto& tie : s.ties) shape_ok = shape_ok && sized(tie.flow, T);
  for (const auto& st : s.storages) {
    shape_ok = shape_ok && sized(st.charge, T) && sized(st.discharge, T) && sized(st.soc, T);
  }
  for (const auto& l : s.loads) shape_ok = shape_ok && sized(l.served, T);
  if (!shape_ok) {
    c.add("dimension", "schedule", 0, 0.0, "schedule dimensions do not match the model");
    return out;
  }

  // Tie exchange bounds.
  for (std::size_t k = 0; k < model.tie_lines.size(); ++k) {
    const auto& tie = model.tie_lines[k];
    for (int t = 0; t < T; ++t) {
      const double f = s.ties[k].flow[t];
      if (f > tie.p_max + ptol) c.add("exchange-bounds", tie.id, t + 1, f - tie.p_max);
      if (f < tie.p_min - ptol) c.add("exchange-bounds", tie.id, t + 1, tie.p_min - f);
    }
  }

  // Units.
  for (std::size_t i = 0; i < model.ders.size(); ++i) {
    const auto& d = model.ders[i];
    const auto& u = s.units[i];
    int prev_on = d.dispatchable ? (d.initially_on() ? 1 : 0) : 0;
    double prev_p = d.dispatchable ? d.power_before_horizon() : 0.0;
    for (int t = 0; t < T; ++t) {
      const int on = u.status[t];
      const double p = u.power[t];
      const int hour = t + 1;
      if (on != 0 && on != 1) {
        c.add("status", d.id, hour, on, "status must be 0 or 1");
        continue;
      }
      if (on == 0 && std::abs(p) > ptol) c.add("dispatch-when-off", d.id, hour, std::abs(p));
      const double cap = d.dispatchable ? d.p_max : inputs.der_available[i][t];
      if (on == 1 && p > cap + ptol) {
        c.add("capacity", d.id, hour, p - cap, describe("output", p, cap));
      }
      const double floor = d.dispatchable ? d.p_min : 0.0;
      if (on == 1 && p < floor - ptol) {
        c.add("capacity", d.id, hour, floor - p, describe("output", p, floor));
      }
      if (d.dispatchable) {
        if (p - prev_p > d.ramp_up + ptol) c.add("ramp-up", d.id, hour, p - prev_p - d.ramp_up);
        if (prev_p - p > d.ramp_down + ptol) {
          c.add("ramp-down", d.id, hour, prev_p - p - d.ramp_down);
        }
        const int su = (on == 1 && prev_on == 0) ? 1 : 0;
        const int sd = (on == 0 && prev_on == 1) ? 1 : 0;
        if (u.startup[t] != su || u.shutdown[t] != sd) {
          c.add("transition-flags", d.id, hour, 1.0, "startup/shutdown flags disagree with status");
        }
      }
      prev_on = on;
      prev_p = p;
    }
    if (!d.dispatchable) continue;
    const int carried_on = d.initially_on() ? d.initial_status : 0;
    const int carried_off = d.initially_on() ? 0 : -d.initial_status;
    check_run_lengths(c, "min-up", d.id, 1, T, d.min_up, carried_on,
                      [&](int t) { return u.status[t - 1] == 1; });
    check_run_lengths(c, "min-down", d.id, 1, T, d.min_down, carried_off,
                      [&](int t) { return u.status[t - 1] == 0; });
  }

  // Storage.
  for (std::size_t k = 0; k < model.storages.size(); ++k) {
    const auto& m = model.storages[k];
    const auto& st = s.storages[k];
    const double eta = m.one_way_efficiency();
    double soc = m.initial_soc;
    for (int t = 0; t < T; ++t) {
      const int hour = t + 1;
      const double ch = st.charge[t];
      const double dis = st.discharge[t];
      if (ch < -ptol || dis < -ptol) c.add("storage-power", m.id, hour, std::min(ch, dis));
      const bool charging = ch > ptol;
      const bool discharging = dis > ptol;
      if (charging && discharging) c.add("storage-simultaneous", m.id, hour, std::min(ch, dis));
      if (charging && (ch < m.p_charge_min - ptol || ch > m.p_charge_max + ptol)) {
        c.add("storage-power", m.id, hour, ch, "charge outside bounds");
      }
      if (discharging && (dis < m.p_discharge_min - ptol || dis > m.p_discharge_max + ptol)) {
        c.add("storage-power", m.id, hour, dis, "discharge outside bounds");
      }
      const double expected = soc + eta * ch - dis / eta;
      if (std::abs(st.soc[t] - expected) > etol) {
        c.add("soc-dynamics", m.id, hour, st.soc[t] - expected);
      }
      if (st.soc[t] < -etol || st.soc[t] > m.energy_capacity + etol) {
        c.add("soc-bounds", m.id, hour, st.soc[t]);
      }
      soc = st.soc[t];
    }
    if (T > 0 && st.soc[T - 1] < m.final_soc_min - etol) {
      c.add("final-soc", m.id, T, m.final_soc_min - st.soc[T - 1]);
    }
    check_run_lengths(c, "min-charge-time", m.id, 1, T, m.min_charge_time, 0,
                      [&](int t) { return st.charge[t - 1] > ptol; });
    check_run_lengths(c, "min-discharge-time", m.id, 1, T, m.min_discharge_time, 0,
                      [&](int t) { return st.discharge[t - 1] > ptol; });
  }

  // Adjustable loads.
  for (std::size_t k = 0; k < model.adjustable_loads.size(); ++k) {
    const auto& l = model.adjustable_loads[k];
    const auto& served = s.loads[k].served;
    double energy = 0.0;
    for (int t = 0; t < T; ++t) {
      const int hour = t + 1;
      const double d = served[t];
      energy += d;
      if (!l.in_window(hour)) {
        if (std::abs(d) > ptol) c.add("window", l.id, hour, d, "served outside its window");
        continue;
      }
      const bool must_run = l.kind == LoadKind::Curtailable;
      if ((must_run || d > ptol) && (d < l.p_min - ptol || d > l.p_max + ptol)) {
        c.add("load-bounds", l.id, hour, d, describe("served", d, d > l.p_max ? l.p_max : l.p_min));
      } else if (d < -ptol) {
        c.add("load-bounds", l.id, hour, d);
      }
    }
    if (std::abs(energy - l.required_energy) > etol) {
      c.add("energy", l.id, 0, energy - l.required_energy,
            describe("served energy", energy, l.required_energy));
    }
    if (l.kind == LoadKind::Shiftable) {
      // The window end truncates the last run, matching the optimizer's encoding.
      check_run_lengths(c, "min-on", l.id, l.window_start, l.window_end, l.min_on_time, 0,
                        [&](int t) { return served[t - 1] > ptol; });
    }
  }

  // Per-microgrid power balance.
  const auto imports = microgrid_net_imports(s, model);
  for (std::size_t g = 0; g < model.microgrids.size(); ++g) {
    const auto& mg = model.microgrids[g];
    for (int t = 0; t < T; ++t) {
      double balance = imports[g][t];
      for (std::size_t b = 0; b < model.buses.size(); ++b) {
        if (model.buses[b].microgrid_id == mg.id) balance -= inputs.bus_load_p[b][t];
      }
      for (std::size_t i = 0; i < model.ders.size(); ++i) {
        if (model.ders[i].microgrid_id == mg.id) balance += s.units[i].power[t];
      }
      for (std::size_t k = 0; k < model.storages.size(); ++k) {
        if (model.storages[k].microgrid_id == mg.id) {
          balance += s.storages[k].discharge[t] - s.storages[k].charge[t];
        }
      }
      for (std::size_t k = 0; k < model.adjustable_loads.size(); ++k) {
        if (model.adjustable_loads[k].microgrid_id == mg.id) balance -= s.loads[k].served[t];
      }
      if (std::abs(balance) > ptol) c.add("balance", mg.id, t + 1, balance);
    }
  }
  return out;
}

}  // namespace mgsched
