#pragma once

#include <stdexcept>
#include <string>

#include "mgsched/model/grid_model.hpp"
#include "mgsched/model/schedule.hpp"
#include "mgsched/scheduler/scheduler.hpp"

namespace mgsched::scheduler {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One row per entity and hour: entity_id,hour,status,power_kw,soc_kwh.
/// Units report output, ties their flow, storage net discharge (negative
/// while charging) with the end-of-hour SOC, adjustable loads served power.
/// Numbers use the shortest round-trip representation.
std::string schedule_csv(const Schedule& schedule);

/// Inverse of schedule_csv. Entity kinds come from the model; start-up and
/// shut-down flags are rebuilt from status and the initial conditions.
Schedule parse_schedule_csv(const std::string& text, const GridModel& model);

std::string cost_report_json(const CostReport& report);
CostReport parse_cost_report_json(const std::string& text);

}  // namespace mgsched::scheduler
