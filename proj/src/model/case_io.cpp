#include "mgsched/model/case_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mgsched/model/forecasts.hpp"

namespace mgsched {

using nlohmann::json;

namespace {

// Field reader that records every missing or mistyped field instead of
// stopping at the first one.
class Reader {
 public:
  explicit Reader(std::vector<CaseIssue>& issues) : issues_(issues) {}

  template <typename T>
  T required(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) {
      issues_.push_back({path + "." + key, "missing required field"});
      return T{};
    }
    return convert<T>(obj.at(key), path + "." + key);
  }

  template <typename T>
  T optional(const json& obj, const char* key, const std::string& path, T fallback) {
    if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return fallback;
    return convert<T>(obj.at(key), path + "." + key);
  }

  template <typename T>
  T convert(const json& value, const std::string& path) {
    try {
      return value.get<T>();
    } catch (const json::exception& e) {
      issues_.push_back({path, std::string("wrong type: ") + e.what()});
      return T{};
    }
  }

  const json& array(const json& obj, const char* key, const std::string& path) {
    static const json empty = json::array();
    if (!obj.contains(key)) {
      issues_.push_back({path + key, "missing required section"});
      return empty;
    }
    const json& v = obj.at(key);
    if (!v.is_array()) {
      issues_.push_back({path + key, "expected an array"});
      return empty;
    }
    return v;
  }

  void issue(std::string path, std::string message) {
    issues_.push_back({std::move(path), std::move(message)});
  }

 private:
  std::vector<CaseIssue>& issues_;
};

Complex read_complex(Reader& rd, const json& v, const std::string& path) {
  if (v.is_array() && v.size() == 2) {
    return {rd.convert<double>(v[0], path + "[0]"), rd.convert<double>(v[1], path + "[1]")};
  }
  if (v.is_object()) {
    return {rd.required<double>(v, "re", path), rd.required<double>(v, "im", path)};
  }
  if (v.is_number()) return {v.get<double>(), 0.0};
  rd.issue(path, "expected [re, im] or {re, im}");
  return {};
}

ZipFractions read_zip(Reader& rd, const json& v, const std::string& path) {
  ZipFractions z;
  if (v.is_array() && v.size() == 3) {
    z.constant_power = rd.convert<double>(v[0], path + "[0]");
    z.constant_current = rd.convert<double>(v[1], path + "[1]");
    z.constant_impedance = rd.convert<double>(v[2], path + "[2]");
  } else if (v.is_object()) {
    z.constant_power = rd.required<double>(v, "p", path);
    z.constant_current = rd.required<double>(v, "i", path);
    z.constant_impedance = rd.required<double>(v, "z", path);
  } else {
    rd.issue(path, "expected [p, i, z] fractions");
  }
  return z;
}

GridModel from_json(const json& doc, std::vector<CaseIssue>& issues) {
  Reader rd(issues);
  GridModel m;
  if (!doc.is_object()) {
    rd.issue("$", "case document must be an object");
    return m;
  }

  const json settings = doc.contains("settings") ? doc.at("settings") : json::object();
  m.settings.name = rd.optional<std::string>(settings, "name", "settings", "");
  m.settings.horizon_hours = rd.optional<int>(settings, "horizon_hours", "settings", 24);
  m.settings.base_mva = rd.optional<double>(settings, "base_mva", "settings", 1.0);
  m.settings.v_norm = rd.optional<double>(settings, "v_norm", "settings", 1.0);
  m.settings.im_cap = rd.optional<double>(settings, "im_cap", "settings", 0.1);
  if (settings.contains("slack_voltage")) {
    m.settings.slack_voltage = read_complex(rd, settings.at("slack_voltage"), "settings.slack_voltage");
  }

  const auto& buses = rd.array(doc, "buses", "");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const auto& b = buses[i];
    const std::string p = "buses[" + std::to_string(i) + "]";
    Bus bus;
    bus.id = rd.required<std::string>(b, "id", p);
    bus.microgrid_id = rd.optional<std::string>(b, "microgrid", p, "");
    bus.slack = rd.optional<bool>(b, "slack", p, false);
    bus.v_min = rd.optional<double>(b, "v_min", p, 0.95);
    bus.v_max = rd.optional<double>(b, "v_max", p, 1.05);
    bus.load_share = rd.optional<double>(b, "load_share", p, 0.0);
    bus.power_factor = rd.optional<double>(b, "power_factor", p, 1.0);
    bus.fixed_load_p = rd.optional<std::vector<double>>(b, "fixed_load_p_kw", p, {});
    bus.fixed_load_q = rd.optional<std::vector<double>>(b, "fixed_load_q_kvar", p, {});
    if (b.contains("zip")) bus.zip = read_zip(rd, b.at("zip"), p + ".zip");
    m.buses.push_back(std::move(bus));
  }

  const auto& branches = rd.array(doc, "branches", "");
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const auto& b = branches[i];
    const std::string p = "branches[" + std::to_string(i) + "]";
    Branch br;
    br.id = rd.required<std::string>(b, "id", p);
    br.from_bus = rd.required<std::string>(b, "from", p);
    br.to_bus = rd.required<std::string>(b, "to", p);
    br.impedance = {rd.required<double>(b, "r", p), rd.required<double>(b, "x", p)};
    br.thermal_limit = rd.required<double>(b, "thermal_limit_kva", p);
    br.closed = rd.optional<bool>(b, "closed", p, true);
    m.branches.push_back(std::move(br));
  }

  const auto& regions = rd.array(doc, "microgrids", "");
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto& r = regions[i];
    const std::string p = "microgrids[" + std::to_string(i) + "]";
    MicrogridRegion mg;
    mg.id = rd.required<std::string>(r, "id", p);
    mg.buses = rd.required<std::vector<std::string>>(r, "buses", p);
    mg.tie_lines = rd.optional<std::vector<std::string>>(r, "tie_lines", p, {});
    m.microgrids.push_back(std::move(mg));
  }

  const auto& ties = rd.array(doc, "tie_lines", "");
  for (std::size_t i = 0; i < ties.size(); ++i) {
    const auto& t = ties[i];
    const std::string p = "tie_lines[" + std::to_string(i) + "]";
    TieLine tie;
    tie.id = rd.required<std::string>(t, "id", p);
    tie.from = rd.required<std::string>(t, "from", p);
    tie.to = rd.required<std::string>(t, "to", p);
    tie.p_min = rd.required<double>(t, "p_min_kw", p);
    tie.p_max = rd.required<double>(t, "p_max_kw", p);
    tie.price_profile = rd.optional<std::vector<double>>(t, "price_profile", p, {});
    tie.price_scale = rd.optional<double>(t, "price_scale", p, 1.0);
    tie.export_price = rd.optional<double>(t, "export_price", p, 0.0);
    m.tie_lines.push_back(std::move(tie));
  }

  const auto& ders = rd.array(doc, "ders", "");
  for (std::size_t i = 0; i < ders.size(); ++i) {
    const auto& d = ders[i];
    const std::string p = "ders[" + std::to_string(i) + "]";
    DerUnit u;
    u.id = rd.required<std::string>(d, "id", p);
    u.microgrid_id = rd.required<std::string>(d, "microgrid", p);
    u.bus_id = rd.required<std::string>(d, "bus", p);
    const auto type = rd.optional<std::string>(d, "type", p, "D");
    if (type != "D" && type != "ND") rd.issue(p + ".type", "expected \"D\" or \"ND\"");
    u.dispatchable = type != "ND";
    u.cost = rd.optional<double>(d, "cost", p, 0.0);
    u.p_min = rd.optional<double>(d, "p_min_kw", p, 0.0);
    u.p_max = rd.required<double>(d, "p_max_kw", p);
    u.min_up = rd.optional<int>(d, "min_up", p, 0);
    u.min_down = rd.optional<int>(d, "min_down", p, 0);
    u.ramp_up = rd.optional<double>(d, "ramp_up", p, u.p_max);
    u.ramp_down = rd.optional<double>(d, "ramp_down", p, u.p_max);
    u.startup_cost = rd.optional<double>(d, "startup_cost", p, 0.0);
    u.shutdown_cost = rd.optional<double>(d, "shutdown_cost", p, 0.0);
    u.initial_status = rd.optional<int>(d, "initial_status", p, -1);
    if (d.contains("initial_power_kw") && !d.at("initial_power_kw").is_null()) {
      u.initial_power = rd.convert<double>(d.at("initial_power_kw"), p + ".initial_power_kw");
    }
    u.profile = rd.optional<std::string>(d, "profile", p, "");
    m.ders.push_back(std::move(u));
  }

  const auto& storages = rd.array(doc, "storages", "");
  for (std::size_t i = 0; i < storages.size(); ++i) {
    const auto& s = storages[i];
    const std::string p = "storages[" + std::to_string(i) + "]";
    StorageUnit st;
    st.id = rd.required<std::string>(s, "id", p);
    st.microgrid_id = rd.required<std::string>(s, "microgrid", p);
    st.bus_id = rd.required<std::string>(s, "bus", p);
    st.energy_capacity = rd.required<double>(s, "capacity_kwh", p);
    st.p_charge_min = rd.optional<double>(s, "charge_min_kw", p, 0.0);
    st.p_charge_max = rd.required<double>(s, "charge_max_kw", p);
    st.p_discharge_min = rd.optional<double>(s, "discharge_min_kw", p, 0.0);
    st.p_discharge_max = rd.required<double>(s, "discharge_max_kw", p);
    st.min_charge_time = rd.optional<int>(s, "min_charge_time", p, 1);
    st.min_discharge_time = rd.optional<int>(s, "min_discharge_time", p, 1);
    st.round_trip_efficiency = rd.optional<double>(s, "round_trip_efficiency", p, 1.0);
    st.initial_soc = rd.optional<double>(s, "initial_soc_kwh", p, 0.0);
    st.final_soc_min = rd.optional<double>(s, "final_soc_min_kwh", p, 0.0);
    m.storages.push_back(std::move(st));
  }

  const auto& loads = rd.array(doc, "adjustable_loads", "");
  for (std::size_t i = 0; i < loads.size(); ++i) {
    const auto& l = loads[i];
    const std::string p = "adjustable_loads[" + std::to_string(i) + "]";
    AdjustableLoad ld;
    ld.id = rd.required<std::string>(l, "id", p);
    ld.microgrid_id = rd.required<std::string>(l, "microgrid", p);
    ld.bus_id = rd.required<std::string>(l, "bus", p);
    const auto type = rd.optional<std::string>(l, "type", p, "S");
    if (type != "S" && type != "C") rd.issue(p + ".type", "expected \"S\" or \"C\"");
    ld.kind = type == "C" ? LoadKind::Curtailable : LoadKind::Shiftable;
    ld.p_min = rd.optional<double>(l, "p_min_kw", p, 0.0);
    ld.p_max = rd.required<double>(l, "p_max_kw", p);
    ld.required_energy = rd.required<double>(l, "required_energy_kwh", p);
    const auto window = rd.required<std::vector<int>>(l, "window", p);
    if (window.size() == 2) {
      ld.window_start = window[0];
      ld.window_end = window[1];
    } else {
      rd.issue(p + ".window", "expected [start, end] hours");
    }
    ld.min_on_time = rd.optional<int>(l, "min_on_time", p, 1);
    m.adjustable_loads.push_back(std::move(ld));
  }

  if (!doc.contains("forecasts") || !doc.at("forecasts").is_object()) {
    rd.issue("forecasts", "missing required section");
  } else {
    const auto& f = doc.at("forecasts");
    m.forecasts.peak_load = rd.required<double>(f, "peak_load_kw", "forecasts");
    m.forecasts.load_shape = rd.required<std::vector<double>>(f, "load_shape", "forecasts");
    m.forecasts.price_shape = rd.required<std::vector<double>>(f, "price_shape", "forecasts");
    m.forecasts.wind_shapes =
        rd.optional<std::map<std::string, std::vector<double>>>(f, "wind_shapes", "forecasts", {});
  }
  if (!doc.contains("settings")) rd.issue("settings", "missing required section");

  // Region membership is authoritative; fill in the per-bus back references.
  for (const auto& mg : m.microgrids) {
    for (const auto& bid : mg.buses) {
      const int b = m.bus_index(bid);
      if (b >= 0 && m.buses[b].microgrid_id.empty()) m.buses[b].microgrid_id = mg.id;
    }
  }
  for (auto& mg : m.microgrids) {
    if (!mg.tie_lines.empty()) continue;
    for (const auto& tie : m.tie_lines) {
      if (tie.from == mg.id || tie.to == mg.id) mg.tie_lines.push_back(tie.id);
    }
  }
  return m;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

template <typename T>
std::string index_path(const char* section, std::size_t i, const T& item) {
  return std::string(section) + "[" + std::to_string(i) + "] (" + item.id + ")";
}

void check_series(std::vector<CaseIssue>& out, const std::vector<double>& s, int horizon,
                  const std::string& path) {
  if (static_cast<int>(s.size()) != horizon) {
    out.push_back({path, "expected " + std::to_string(horizon) + " hourly entries, found " +
                             std::to_string(s.size())});
  }
  for (std::size_t t = 0; t < s.size(); ++t) {
    if (!(s[t] >= 0.0) || !std::isfinite(s[t])) {
      out.push_back({path + "[" + std::to_string(t) + "]", "must be a finite value >= 0"});
    }
  }
}

}  // namespace

std::vector<CaseIssue> validate_model(const GridModel& m) {
  std::vector<CaseIssue> out;
  const int horizon = m.settings.horizon_hours;
  if (horizon < 1) out.push_back({"settings.horizon_hours", "must be >= 1"});
  if (!(m.settings.base_mva > 0.0)) out.push_back({"settings.base_mva", "must be > 0"});
  if (!(m.settings.v_norm > 0.0)) out.push_back({"settings.v_norm", "must be > 0"});
  if (!(m.settings.im_cap > 0.0)) out.push_back({"settings.im_cap", "must be > 0"});
  if (!(std::abs(m.settings.slack_voltage) > 0.0)) {
    out.push_back({"settings.slack_voltage", "must be nonzero"});
  }

  std::set<std::string> device_ids;
  auto unique_device = [&](const std::string& id, const std::string& path) {
    if (id.empty()) out.push_back({path, "empty id"});
    if (!device_ids.insert(id).second) out.push_back({path, "duplicate device id '" + id + "'"});
  };

  // Buses.
  std::set<std::string> bus_ids;
  int slack_count = 0;
  for (std::size_t i = 0; i < m.buses.size(); ++i) {
    const auto& b = m.buses[i];
    const auto p = index_path("buses", i, b);
    if (!bus_ids.insert(b.id).second) out.push_back({p, "duplicate bus id"});
    if (b.slack) ++slack_count;
    if (!(b.v_min > 0.0 && b.v_min < b.v_max)) {
      out.push_back({p + ".v_min", "require 0 < v_min < v_max"});
    }
    const auto& z = b.zip;
    if (z.constant_power < 0.0 || z.constant_current < 0.0 || z.constant_impedance < 0.0) {
      out.push_back({p + ".zip", "fractions must be nonnegative"});
    }
    if (std::abs(z.sum() - 1.0) > 1e-9) {
      out.push_back({p + ".zip", "fractions sum " + fmt(z.sum()) + ", expected 1"});
    }
    if (!(b.power_factor > 0.0 && b.power_factor <= 1.0)) {
      out.push_back({p + ".power_factor", "must lie in (0, 1]"});
    }
    if (!(b.load_share >= 0.0)) out.push_back({p + ".load_share", "must be >= 0"});
    if (!b.fixed_load_p.empty()) check_series(out, b.fixed_load_p, horizon, p + ".fixed_load_p_kw");
    if (!b.fixed_load_q.empty()) {
      if (b.fixed_load_p.empty()) {
        out.push_back({p + ".fixed_load_q_kvar", "requires fixed_load_p_kw"});
      }
      if (static_cast<int>(b.fixed_load_q.size()) != horizon) {
        out.push_back({p + ".fixed_load_q_kvar", "expected " + std::to_string(horizon) + " entries"});
      }
    }
    if (b.microgrid_id.empty() && !b.slack) {
      out.push_back({p, "bus belongs to no microgrid and is not the slack bus"});
    }
    if (b.slack && b.microgrid_id.empty() && (b.load_share != 0.0 || !b.fixed_load_p.empty())) {
      out.push_back({p, "utility slack bus outside any microgrid cannot carry load"});
    }
  }
  if (slack_count != 1) {
    out.push_back({"buses", "expected exactly one slack bus, found " + std::to_string(slack_count)});
  }

  // Microgrid regions.
  std::set<std::string> mg_ids;
  std::map<std::string, int> membership;
  for (std::size_t i = 0; i < m.microgrids.size(); ++i) {
    const auto& mg = m.microgrids[i];
    const auto p = index_path("microgrids", i, mg);
    if (mg.id == kMainGrid) out.push_back({p, "reserved id"});
    if (!mg_ids.insert(mg.id).second) out.push_back({p, "duplicate microgrid id"});
    for (const auto& bid : mg.buses) {
      const int b = m.bus_index(bid);
      if (b < 0) {
        out.push_back({p + ".buses", "unknown bus '" + bid + "'"});
        continue;
      }
      ++membership[bid];
      if (m.buses[b].microgrid_id != mg.id) {
        out.push_back({p + ".buses", "bus '" + bid + "' is assigned to '" +
                                         m.buses[b].microgrid_id + "'"});
      }
    }
    for (const auto& tid : mg.tie_lines) {
      const auto it = std::find_if(m.tie_lines.begin(), m.tie_lines.end(),
                                   [&](const TieLine& t) { return t.id == tid; });
      if (it == m.tie_lines.end()) {
        out.push_back({p + ".tie_lines", "unknown tie line '" + tid + "'"});
      } else if (it->from != mg.id && it->to != mg.id) {
        out.push_back({p + ".tie_lines", "tie line '" + tid + "' does not touch this microgrid"});
      }
    }
  }
  for (std::size_t i = 0; i < m.buses.size(); ++i) {
    const auto& b = m.buses[i];
    const int count = membership.count(b.id) ? membership[b.id] : 0;
    if (!b.microgrid_id.empty() && count != 1) {
      out.push_back({index_path("buses", i, b),
                     "must be listed by exactly one microgrid region (found " +
                         std::to_string(count) + ")"});
    }
    if (!b.microgrid_id.empty() && !mg_ids.count(b.microgrid_id)) {
      out.push_back({index_path("buses", i, b), "unknown microgrid '" + b.microgrid_id + "'"});
    }
  }

  // Branches and connectivity over the physical topology.
  std::set<std::string> branch_ids;
  std::vector<std::vector<int>> adjacent(m.buses.size());
  for (std::size_t i = 0; i < m.branches.size(); ++i) {
    const auto& br = m.branches[i];
    const auto p = index_path("branches", i, br);
    if (!branch_ids.insert(br.id).second) out.push_back({p, "duplicate branch id"});
    const int a = m.bus_index(br.from_bus);
    const int b = m.bus_index(br.to_bus);
    if (a < 0) out.push_back({p + ".from", "unknown bus '" + br.from_bus + "'"});
    if (b < 0) out.push_back({p + ".to", "unknown bus '" + br.to_bus + "'"});
    if (a >= 0 && a == b) out.push_back({p, "branch endpoints must differ"});
    if (std::abs(br.impedance) == 0.0) out.push_back({p, "impedance must be nonzero"});
    if (!(br.thermal_limit > 0.0)) out.push_back({p + ".thermal_limit_kva", "must be > 0"});
    if (a >= 0 && b >= 0 && a != b) {
      adjacent[a].push_back(b);
      adjacent[b].push_back(a);
    }
  }
  const int slack = m.slack_index();
  if (slack >= 0 && slack_count == 1) {
    std::vector<bool> seen(m.buses.size(), false);
    std::queue<int> frontier;
    frontier.push(slack);
    seen[slack] = true;
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (const int v : adjacent[u]) {
        if (!seen[v]) {
          seen[v] = true;
          frontier.push(v);
        }
      }
    }
    for (std::size_t i = 0; i < m.buses.size(); ++i) {
      if (!seen[i]) {
        out.push_back({index_path("buses", i, m.buses[i]),
                       "disconnected bus: no branch path to the slack bus"});
      }
    }
  }

  // Forecasts.
  if (!(m.forecasts.peak_load >= 0.0)) out.push_back({"forecasts.peak_load_kw", "must be >= 0"});
  check_series(out, m.forecasts.load_shape, horizon, "forecasts.load_shape");
  check_series(out, m.forecasts.price_shape, horizon, "forecasts.price_shape");
  for (const auto& [name, shape] : m.forecasts.wind_shapes) {
    check_series(out, shape, horizon, "forecasts.wind_shapes." + name);
  }

  auto check_placement = [&](const std::string& p, const std::string& mg, const std::string& bus) {
    if (!mg_ids.count(mg)) out.push_back({p + ".microgrid", "unknown microgrid '" + mg + "'"});
    const int b = m.bus_index(bus);
    if (b < 0) {
      out.push_back({p + ".bus", "unknown bus '" + bus + "'"});
    } else if (m.buses[b].microgrid_id != mg) {
      out.push_back({p + ".bus", "bus '" + bus + "' is not part of microgrid '" + mg + "'"});
    }
  };

  // Tie lines.
  for (std::size_t i = 0; i < m.tie_lines.size(); ++i) {
    const auto& t = m.tie_lines[i];
    const auto p = index_path("tie_lines", i, t);
    unique_device(t.id, p);
    for (const auto* side : {&t.from, &t.to}) {
      if (*side != kMainGrid && !mg_ids.count(*side)) {
        out.push_back({p, "unknown endpoint '" + *side + "'"});
      }
    }
    if (t.from == t.to) out.push_back({p, "endpoints must differ"});
    if (!(t.p_min <= t.p_max)) out.push_back({p, "require p_min_kw <= p_max_kw"});
    if (!t.price_profile.empty()) check_series(out, t.price_profile, horizon, p + ".price_profile");
    if (!(t.price_scale >= 0.0)) out.push_back({p + ".price_scale", "must be >= 0"});
    if (!(t.export_price >= 0.0)) out.push_back({p + ".export_price", "must be >= 0"});
    if (t.export_price > 0.0 && !t.touches_main_grid()) {
      out.push_back({p + ".export_price", "only main-grid ties may carry an export price"});
    }
  }

  // Units.
  for (std::size_t i = 0; i < m.ders.size(); ++i) {
    const auto& u = m.ders[i];
    const auto p = index_path("ders", i, u);
    unique_device(u.id, p);
    check_placement(p, u.microgrid_id, u.bus_id);
    if (!(u.p_min >= 0.0 && u.p_min <= u.p_max)) out.push_back({p, "require 0 <= p_min <= p_max"});
    if (u.min_up < 0 || u.min_down < 0) out.push_back({p, "min up/down times must be >= 0"});
    if (!(u.ramp_up >= 0.0 && u.ramp_down >= 0.0)) out.push_back({p, "ramp rates must be >= 0"});
    if (!(u.startup_cost >= 0.0 && u.shutdown_cost >= 0.0)) {
      out.push_back({p, "startup/shutdown costs must be >= 0"});
    }
    if (u.dispatchable) {
      if (u.initial_status == 0) out.push_back({p + ".initial_status", "must be nonzero"});
      const double p0 = u.power_before_horizon();
      if (!u.initially_on() && p0 != 0.0) {
        out.push_back({p + ".initial_power_kw", "unit is initially off"});
      }
      if (u.initially_on() && (p0 < u.p_min || p0 > u.p_max)) {
        out.push_back({p + ".initial_power_kw", "outside [p_min, p_max]"});
      }
    } else if (!m.forecasts.wind_shapes.count(u.profile)) {
      out.push_back({p + ".profile", "unknown forecast series '" + u.profile + "'"});
    }
  }

  // Storage.
  for (std::size_t i = 0; i < m.storages.size(); ++i) {
    const auto& s = m.storages[i];
    const auto p = index_path("storages", i, s);
    unique_device(s.id, p);
    check_placement(p, s.microgrid_id, s.bus_id);
    if (!(s.energy_capacity > 0.0)) out.push_back({p + ".capacity_kwh", "must be > 0"});
    if (!(s.p_charge_min >= 0.0 && s.p_charge_min <= s.p_charge_max)) {
      out.push_back({p, "require 0 <= charge_min_kw <= charge_max_kw"});
    }
    if (!(s.p_discharge_min >= 0.0 && s.p_discharge_min <= s.p_discharge_max)) {
      out.push_back({p, "require 0 <= discharge_min_kw <= discharge_max_kw"});
    }
    if (s.min_charge_time < 1 || s.min_discharge_time < 1) {
      out.push_back({p, "minimum charge/discharge times must be >= 1"});
    }
    if (!(s.round_trip_efficiency > 0.0 && s.round_trip_efficiency <= 1.0)) {
      out.push_back({p + ".round_trip_efficiency", "must lie in (0, 1]"});
    }
    if (!(s.initial_soc >= 0.0 && s.initial_soc <= s.energy_capacity)) {
      out.push_back({p + ".initial_soc_kwh", "must lie in [0, capacity]"});
    }
    if (!(s.final_soc_min >= 0.0 && s.final_soc_min <= s.energy_capacity)) {
      out.push_back({p + ".final_soc_min_kwh", "must lie in [0, capacity]"});
    }
  }

  // Adjustable loads.
  for (std::size_t i = 0; i < m.adjustable_loads.size(); ++i) {
    const auto& l = m.adjustable_loads[i];
    const auto p = index_path("adjustable_loads", i, l);
    unique_device(l.id, p);
    check_placement(p, l.microgrid_id, l.bus_id);
    if (!(l.window_start >= 1 && l.window_start <= l.window_end && l.window_end <= horizon)) {
      out.push_back({p + ".window", "window must satisfy 1 <= start <= end <= horizon"});
      continue;
    }
    if (!(l.p_min >= 0.0 && l.p_min <= l.p_max)) out.push_back({p, "require 0 <= p_min <= p_max"});
    const double len = l.window_length();
    if (l.required_energy > l.p_max * len + 1e-9) {
      out.push_back({p + ".required_energy_kwh",
                     "required energy " + fmt(l.required_energy) +
                         " kWh exceeds window capacity " + fmt(l.p_max * len) + " kWh"});
    }
    if (l.required_energy < l.p_min * len - 1e-9 && l.kind == LoadKind::Curtailable) {
      out.push_back({p + ".required_energy_kwh",
                     "required energy below the minimum draw over the window"});
    }
    if (l.required_energy < 0.0) out.push_back({p + ".required_energy_kwh", "must be >= 0"});
    if (l.min_on_time < 0 || l.min_on_time > l.window_length()) {
      out.push_back({p + ".min_on_time", "must lie in [0, window length]"});
    }
    if (l.kind == LoadKind::Shiftable && l.p_min > 0.0 && l.min_on_time > 0 &&
        l.required_energy > 0.0 && l.required_energy < l.p_min * l.min_on_time - 1e-9) {
      out.push_back({p + ".required_energy_kwh",
                     "required energy below one minimum-length run at p_min"});
    }
  }

  // Export revenue must not exceed the purchase price (no free arbitrage loops).
  if (out.empty()) {
    const auto inputs = scale_forecasts(m);
    for (std::size_t i = 0; i < m.tie_lines.size(); ++i) {
      const auto& t = m.tie_lines[i];
      if (t.export_price <= 0.0) continue;
      const double lowest = *std::min_element(inputs.tie_price[i].begin(), inputs.tie_price[i].end());
      if (t.export_price > lowest) {
        out.push_back({index_path("tie_lines", i, t) + ".export_price",
                       "exceeds the lowest hourly import price " + fmt(lowest)});
      }
    }
  }
  return out;
}

namespace {

GridModel finish(const json& doc) {
  std::vector<CaseIssue> issues;
  GridModel model = from_json(doc, issues);
  if (!issues.empty()) {
    throw CaseError(CaseError::Kind::Parse, "case file does not match the schema", issues);
  }
  issues = validate_model(model);
  if (!issues.empty()) {
    throw CaseError(CaseError::Kind::Validation,
                    std::to_string(issues.size()) + " invariant violation(s)", issues);
  }
  return model;
}

}  // namespace

GridModel parse_case(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CaseError(CaseError::Kind::Parse, std::string("malformed case file: ") + e.what(),
                    {{"$", e.what()}});
  }
  return finish(doc);
}

GridModel load_case(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw CaseError(CaseError::Kind::Io, "cannot open case file '" + path.string() + "'",
                    {{path.string(), "file not found or unreadable"}});
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_case(buffer.str());
}

std::string dump_case(const GridModel& m) {
  json doc;
  doc["settings"] = {
      {"name", m.settings.name},
      {"horizon_hours", m.settings.horizon_hours},
      {"base_mva", m.settings.base_mva},
      {"v_norm", m.settings.v_norm},
      {"im_cap", m.settings.im_cap},
      {"slack_voltage", {m.settings.slack_voltage.real(), m.settings.slack_voltage.imag()}},
  };
  doc["buses"] = json::array();
  for (const auto& b : m.buses) {
    json j = {{"id", b.id},
              {"slack", b.slack},
              {"v_min", b.v_min},
              {"v_max", b.v_max},
              {"load_share", b.load_share},
              {"power_factor", b.power_factor},
              {"zip", {b.zip.constant_power, b.zip.constant_current, b.zip.constant_impedance}}};
    if (!b.microgrid_id.empty()) j["microgrid"] = b.microgrid_id;
    if (!b.fixed_load_p.empty()) j["fixed_load_p_kw"] = b.fixed_load_p;
    if (!b.fixed_load_q.empty()) j["fixed_load_q_kvar"] = b.fixed_load_q;
    doc["buses"].push_back(std::move(j));
  }
  doc["branches"] = json::array();
  for (const auto& br : m.branches) {
    doc["branches"].push_back({{"id", br.id},
                               {"from", br.from_bus},
                               {"to", br.to_bus},
                               {"r", br.impedance.real()},
                               {"x", br.impedance.imag()},
                               {"thermal_limit_kva", br.thermal_limit},
                               {"closed", br.closed}});
  }
  doc["microgrids"] = json::array();
  for (const auto& mg : m.microgrids) {
    doc["microgrids"].push_back({{"id", mg.id}, {"buses", mg.buses}, {"tie_lines", mg.tie_lines}});
  }
  doc["tie_lines"] = json::array();
  for (const auto& t : m.tie_lines) {
    json j = {{"id", t.id},
              {"from", t.from},
              {"to", t.to},
              {"p_min_kw", t.p_min},
              {"p_max_kw", t.p_max},
              {"price_scale", t.price_scale},
              {"export_price", t.export_price}};
    if (!t.price_profile.empty()) j["price_profile"] = t.price_profile;
    doc["tie_lines"].push_back(std::move(j));
  }
  doc["ders"] = json::array();
  for (const auto& u : m.ders) {
    json j = {{"id", u.id},
              {"microgrid", u.microgrid_id},
              {"bus", u.bus_id},
              {"type", u.dispatchable ? "D" : "ND"},
              {"cost", u.cost},
              {"p_min_kw", u.p_min},
              {"p_max_kw", u.p_max},
              {"min_up", u.min_up},
              {"min_down", u.min_down},
              {"ramp_up", u.ramp_up},
              {"ramp_down", u.ramp_down},
              {"startup_cost", u.startup_cost},
              {"shutdown_cost", u.shutdown_cost},
              {"initial_status", u.initial_status},
              {"profile", u.profile}};
    if (u.initial_power) j["initial_power_kw"] = *u.initial_power;
    doc["ders"].push_back(std::move(j));
  }
  doc["storages"] = json::array();
  for (const auto& s : m.storages) {
    doc["storages"].push_back({{"id", s.id},
                               {"microgrid", s.microgrid_id},
                               {"bus", s.bus_id},
                               {"capacity_kwh", s.energy_capacity},
                               {"charge_min_kw", s.p_charge_min},
                               {"charge_max_kw", s.p_charge_max},
                               {"discharge_min_kw", s.p_discharge_min},
                               {"discharge_max_kw", s.p_discharge_max},
                               {"min_charge_time", s.min_charge_time},
                               {"min_discharge_time", s.min_discharge_time},
                               {"round_trip_efficiency", s.round_trip_efficiency},
                               {"initial_soc_kwh", s.initial_soc},
                               {"final_soc_min_kwh", s.final_soc_min}});
  }
  doc["adjustable_loads"] = json::array();
  for (const auto& l : m.adjustable_loads) {
    doc["adjustable_loads"].push_back({{"id", l.id},
                                       {"microgrid", l.microgrid_id},
                                       {"bus", l.bus_id},
                                       {"type", l.kind == LoadKind::Curtailable ? "C" : "S"},
                                       {"p_min_kw", l.p_min},
                                       {"p_max_kw", l.p_max},
                                       {"required_energy_kwh", l.required_energy},
                                       {"window", {l.window_start, l.window_end}},
                                       {"min_on_time", l.min_on_time}});
  }
  doc["forecasts"] = {{"peak_load_kw", m.forecasts.peak_load},
                      {"load_shape", m.forecasts.load_shape},
                      {"price_shape", m.forecasts.price_shape},
                      {"wind_shapes", m.forecasts.wind_shapes}};
  return doc.dump(2);
}

void save_case(const GridModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw CaseError(CaseError::Kind::Io, "cannot write '" + path.string() + "'");
  out << dump_case(model) << '\n';
}

}  // namespace mgsched
