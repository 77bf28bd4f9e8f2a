#pragma once

#include <string>
#include <vector>

#include "mgsched/model/grid_model.hpp"

namespace mgsched {

struct UnitSchedule {
  std::string id;
  std::vector<int> status;  // U_t
  std::vector<double> power;  // kW
  std::vector<int> startup;
  std::vector<int> shutdown;
};

struct TieSchedule {
  std::string id;
  std::vector<double> flow;  // kW, positive from `from` to `to`
};

struct StorageSchedule {
  std::string id;
  std::vector<double> charge;     // kW
  std::vector<double> discharge;  // kW
  std::vector<double> soc;        // kWh at the end of each hour
};

struct LoadSchedule {
  std::string id;
  std::vector<double> served;  // kW
};

/// Per-hour decisions; every vector has horizon entries, hour t at index t-1.
struct Schedule {
  int horizon = 0;
  std::vector<UnitSchedule> units;  // model DER order
  std::vector<TieSchedule> ties;
  std::vector<StorageSchedule> storages;
  std::vector<LoadSchedule> loads;
  bool network_constraints = false;
  std::string mode = "deterministic";
};

struct Violation {
  std::string kind;    // e.g. "min-up", "ramp-up", "balance"
  std::string entity;  // device or microgrid id
  int hour = 0;        // 1-based, 0 for whole-horizon checks
  double amount = 0.0;
  std::string detail;
};

struct ValidationTolerance {
  double power = 1e-3;   // kW
  double energy = 1e-3;  // kWh
};

/// Checks every device and balance constraint without using the solver.
std::vector<Violation> validate_schedule(const Schedule& schedule,
                                         const GridModel& model,
                                         const HourlyInputs& inputs,
                                         ValidationTolerance tol = {});
/// Uses scale_forecasts(model) as the realized inputs.
std::vector<Violation> validate_schedule(const Schedule& schedule,
                                         const GridModel& model,
                                         ValidationTolerance tol = {});

/// Net import into each microgrid per hour (kW), from tie flows.
std::vector<std::vector<double>> microgrid_net_imports(const Schedule& schedule,
                                                       const GridModel& model);

}  // namespace mgsched
