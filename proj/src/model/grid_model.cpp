#include "mgsched/model/grid_model.hpp"

#include <algorithm>
#include <cmath>

namespace mgsched {

namespace {

template <typename Range>
int find_id(const Range& items, std::string_view id) {
  const auto it = std::find_if(items.begin(), items.end(),
                               [&](const auto& item) { return item.id == id; });
  return it == items.end() ? -1 : static_cast<int>(it - items.begin());
}

}  // namespace

double StorageUnit::one_way_efficiency() const {
  return std::sqrt(round_trip_efficiency);
}

int GridModel::bus_index(std::string_view id) const { return find_id(buses, id); }

int GridModel::microgrid_index(std::string_view id) const {
  return find_id(microgrids, id);
}

int GridModel::slack_index() const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].slack) return static_cast<int>(i);
  }
  return -1;
}

CaseError::CaseError(Kind kind, std::string what, std::vector<CaseIssue> issues)
    : std::runtime_error(std::move(what)), kind_(kind), issues_(std::move(issues)) {}

}  // namespace mgsched
