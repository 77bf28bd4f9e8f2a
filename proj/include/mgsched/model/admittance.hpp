#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mgsched/model/grid_model.hpp"

namespace mgsched {

/// Bus admittance matrix split into slack / remaining-bus ("eta") blocks.
struct AdmittanceBlocks {
  Eigen::MatrixXcd full;        // in model bus order
  int slack = 0;                // model bus index of the slack bus
  std::vector<int> eta_buses;   // model bus indices, in block order
  std::vector<int> eta_position;  // model bus index -> block position (-1 for slack)
  Complex y_ss;
  Eigen::RowVectorXcd y_s_eta;
  Eigen::VectorXcd y_eta_s;
  Eigen::MatrixXcd y_eta_eta;
};

class IslandError : public std::runtime_error {
 public:
  IslandError(std::string what, std::vector<std::string> buses)
      : std::runtime_error(std::move(what)), buses_(std::move(buses)) {}
  [[nodiscard]] const std::vector<std::string>& buses() const { return buses_; }

 private:
  std::vector<std::string> buses_;
};

/// Series admittances of closed branches. Throws IslandError when some bus is
/// not energized from the slack (Y_eta_eta would be singular).
AdmittanceBlocks build_admittance(const GridModel& model);

}  // namespace mgsched
