#include "mgsched/model/admittance.hpp"

#include <queue>

namespace mgsched {

AdmittanceBlocks build_admittance(const GridModel& model) {
  const int n = static_cast<int>(model.buses.size());
  const int slack = model.slack_index();
  if (slack < 0) throw std::invalid_argument("model has no slack bus");

  AdmittanceBlocks y;
  y.full = Eigen::MatrixXcd::Zero(n, n);
  std::vector<std::vector<int>> adjacent(n);
  for (const auto& br : model.branches) {
    if (!br.closed) continue;
    const int a = model.bus_index(br.from_bus);
    const int b = model.bus_index(br.to_bus);
    if (a < 0 || b < 0 || a == b) {
      throw std::invalid_argument("branch '" + br.id + "' has invalid endpoints");
    }
    const Complex g = 1.0 / br.impedance;
    y.full(a, a) += g;
    y.full(b, b) += g;
    y.full(a, b) -= g;
    y.full(b, a) -= g;
    adjacent[a].push_back(b);
    adjacent[b].push_back(a);
  }

  std::vector<bool> energized(n, false);
  std::queue<int> frontier;
  frontier.push(slack);
  energized[slack] = true;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (const int v : adjacent[u]) {
      if (!energized[v]) {
        energized[v] = true;
        frontier.push(v);
      }
    }
  }
  std::vector<std::string> island;
  for (int i = 0; i < n; ++i) {
    if (!energized[i]) island.push_back(model.buses[i].id);
  }
  if (!island.empty()) {
    std::string list;
    for (const auto& id : island) list += (list.empty() ? "" : ", ") + id;
    throw IslandError("singular Y_eta_eta: buses without a closed path to the slack: " + list,
                      island);
  }

  y.slack = slack;
  y.eta_position.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    if (i == slack) continue;
    y.eta_position[i] = static_cast<int>(y.eta_buses.size());
    y.eta_buses.push_back(i);
  }
  const int m = static_cast<int>(y.eta_buses.size());
  y.y_ss = y.full(slack, slack);
  y.y_s_eta.resize(m);
  y.y_eta_s.resize(m);
  y.y_eta_eta.resize(m, m);
  for (int r = 0; r < m; ++r) {
    const int i = y.eta_buses[r];
    y.y_s_eta(r) = y.full(slack, i);
    y.y_eta_s(r) = y.full(i, slack);
    for (int c = 0; c < m; ++c) y.y_eta_eta(r, c) = y.full(i, y.eta_buses[c]);
  }
  return y;
}

}  // namespace mgsched
