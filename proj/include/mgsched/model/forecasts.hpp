#pragma once

#include "mgsched/model/grid_model.hpp"

namespace mgsched {

/// Expands normalized shapes: load(t) = shape(t) * peak, wind_i(t) =
/// shape(t) * p_max_i, tie prices from the price shape (or explicit profiles).
/// Dispatchable units report p_max as their availability.
HourlyInputs scale_forecasts(const GridModel& model);

/// Multiplicative perturbation of realized inputs. Each factor vector is either
/// of size 1 (applied to every hour) or of size horizon.
struct ForecastFactors {
  std::vector<double> load{1.0};
  std::vector<double> wind{1.0};
  std::vector<double> price{1.0};
};

HourlyInputs apply_factors(const GridModel& model, const HourlyInputs& base,
                           const ForecastFactors& factors);

}  // namespace mgsched
