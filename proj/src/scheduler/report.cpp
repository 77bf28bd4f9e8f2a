#include "mgsched/scheduler/report.hpp"

#include <charconv>
#include <map>
#include <sstream>

#include <json.hpp>

namespace mgsched::scheduler {

namespace {

constexpr const char* kHeader = "entity_id,hour,status,power_kw,soc_kwh";

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_num(const std::string& s, int line) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ReportError("line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

template <typename Items>
int find(const Items& items, const std::string& id) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

std::string schedule_csv(const Schedule& s) {
  std::ostringstream out;
  out << kHeader << '\n';
  auto row = [&](const std::string& id, int t, int status, double p, const std::string& soc) {
    out << id << ',' << t + 1 << ',' << status << ',' << num(p) << ',' << soc << '\n';
  };
  for (const auto& u : s.units) {
    for (int t = 0; t < s.horizon; ++t) row(u.id, t, u.status[t], u.power[t], "");
  }
  for (const auto& tie : s.ties) {
    for (int t = 0; t < s.horizon; ++t) row(tie.id, t, tie.flow[t] != 0.0, tie.flow[t], "");
  }
  for (const auto& st : s.storages) {
    for (int t = 0; t < s.horizon; ++t) {
      const double net = st.discharge[t] - st.charge[t];
      row(st.id, t, net != 0.0, net, num(st.soc[t]));
    }
  }
  for (const auto& l : s.loads) {
    for (int t = 0; t < s.horizon; ++t) row(l.id, t, l.served[t] != 0.0, l.served[t], "");
  }
  return out.str();
}

Schedule parse_schedule_csv(const std::string& text, const GridModel& m) {
  const int T = m.horizon();
  Schedule s;
  s.horizon = T;
  for (const auto& d : m.ders) {
    s.units.push_back({d.id, std::vector<int>(T, 0), std::vector<double>(T, 0.0),
                       std::vector<int>(T, 0), std::vector<int>(T, 0)});
  }
  for (const auto& tie : m.tie_lines) s.ties.push_back({tie.id, std::vector<double>(T, 0.0)});
  for (const auto& st : m.storages) {
    s.storages.push_back({st.id, std::vector<double>(T, 0.0), std::vector<double>(T, 0.0),
                          std::vector<double>(T, 0.0)});
  }
  for (const auto& l : m.adjustable_loads) s.loads.push_back({l.id, std::vector<double>(T, 0.0)});

  std::istringstream in(text);
  std::string line;
  int n = 0;
  if (!std::getline(in, line) || line != kHeader) throw ReportError("missing schedule header");
  ++n;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 5) throw ReportError("line " + std::to_string(n) + ": expected 5 fields");
    const int t = static_cast<int>(parse_num(f[1], n)) - 1;
    if (t < 0 || t >= T) throw ReportError("line " + std::to_string(n) + ": hour out of range");
    const int status = static_cast<int>(parse_num(f[2], n));
    const double p = parse_num(f[3], n);
    if (int i = find(m.ders, f[0]); i >= 0) {
      s.units[i].status[t] = status;
      s.units[i].power[t] = p;
    } else if (int k = find(m.tie_lines, f[0]); k >= 0) {
      s.ties[k].flow[t] = p;
    } else if (int k = find(m.storages, f[0]); k >= 0) {
      s.storages[k].discharge[t] = p > 0.0 ? p : 0.0;
      s.storages[k].charge[t] = p < 0.0 ? -p : 0.0;
      if (f[4].empty()) throw ReportError("line " + std::to_string(n) + ": storage row needs soc_kwh");
      s.storages[k].soc[t] = parse_num(f[4], n);
    } else if (int k = find(m.adjustable_loads, f[0]); k >= 0) {
      s.loads[k].served[t] = p;
    } else {
      throw ReportError("line " + std::to_string(n) + ": unknown entity '" + f[0] + "'");
    }
  }

  for (std::size_t i = 0; i < m.ders.size(); ++i) {
    if (!m.ders[i].dispatchable) continue;
    int prev = m.ders[i].initially_on() ? 1 : 0;
    auto& u = s.units[i];
    for (int t = 0; t < T; ++t) {
      u.startup[t] = u.status[t] && !prev;
      u.shutdown[t] = !u.status[t] && prev;
      prev = u.status[t];
    }
  }
  return s;
}

std::string cost_report_json(const CostReport& r) {
  nlohmann::ordered_json j;
  j["total"] = r.total;
  j["generation"] = r.generation;
  j["startup_shutdown"] = r.startup_shutdown;
  j["exchange"] = r.exchange;
  j["generation_by_microgrid"] = r.generation_by_microgrid;
  j["exchange_by_microgrid"] = r.exchange_by_microgrid;
  j["per_hour"] = r.per_hour;
  return j.dump(2) + "\n";
}

CostReport parse_cost_report_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    CostReport r;
    r.total = j.at("total").get<double>();
    r.generation = j.at("generation").get<double>();
    r.startup_shutdown = j.at("startup_shutdown").get<double>();
    r.exchange = j.at("exchange").get<double>();
    r.generation_by_microgrid = j.at("generation_by_microgrid").get<std::map<std::string, double>>();
    r.exchange_by_microgrid = j.at("exchange_by_microgrid").get<std::map<std::string, double>>();
    r.per_hour = j.at("per_hour").get<std::vector<double>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ReportError(std::string("cost report: ") + e.what());
  }
}

}  // namespace mgsched::scheduler
