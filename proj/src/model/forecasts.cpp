#include "mgsched/model/forecasts.hpp"

#include <cmath>
#include <stdexcept>

namespace mgsched {

HourlyInputs scale_forecasts(const GridModel& model) {
  const int T = model.horizon();
  const auto& f = model.forecasts;
  HourlyInputs in;
  in.system_load.assign(T, 0.0);
  in.price.assign(T, 0.0);
  for (int t = 0; t < T; ++t) {
    in.system_load[t] = f.load_shape.at(t) * f.peak_load;
    in.price[t] = f.price_shape.at(t);
  }

  in.bus_load_p.assign(model.buses.size(), std::vector<double>(T, 0.0));
  in.bus_load_q.assign(model.buses.size(), std::vector<double>(T, 0.0));
  for (std::size_t b = 0; b < model.buses.size(); ++b) {
    const auto& bus = model.buses[b];
    const double tan_phi =
        std::sqrt(std::max(0.0, 1.0 - bus.power_factor * bus.power_factor)) / bus.power_factor;
    for (int t = 0; t < T; ++t) {
      const double p = bus.fixed_load_p.empty() ? bus.load_share * in.system_load[t]
                                                : bus.fixed_load_p.at(t);
      in.bus_load_p[b][t] = p;
      in.bus_load_q[b][t] = bus.fixed_load_q.empty() ? p * tan_phi : bus.fixed_load_q.at(t);
    }
  }

  in.der_available.assign(model.ders.size(), std::vector<double>(T, 0.0));
  for (std::size_t i = 0; i < model.ders.size(); ++i) {
    const auto& u = model.ders[i];
    if (u.dispatchable) {
      in.der_available[i].assign(T, u.p_max);
      continue;
    }
    const auto& shape = f.wind_shapes.at(u.profile);
    for (int t = 0; t < T; ++t) in.der_available[i][t] = shape.at(t) * u.p_max;
  }

  in.tie_price.assign(model.tie_lines.size(), std::vector<double>(T, 0.0));
  for (std::size_t k = 0; k < model.tie_lines.size(); ++k) {
    const auto& tie = model.tie_lines[k];
    for (int t = 0; t < T; ++t) {
      in.tie_price[k][t] =
          tie.price_profile.empty() ? tie.price_scale * in.price[t] : tie.price_profile.at(t);
    }
  }
  return in;
}

namespace {

double factor_at(const std::vector<double>& factor, int t, int horizon, const char* name) {
  if (factor.size() == 1) return factor[0];
  if (static_cast<int>(factor.size()) == horizon) return factor[t];
  throw std::invalid_argument(std::string(name) + " factor must have 1 or horizon entries");
}

}  // namespace

HourlyInputs apply_factors(const GridModel& model, const HourlyInputs& base,
                           const ForecastFactors& factors) {
  const int T = model.horizon();
  HourlyInputs out = base;
  for (int t = 0; t < T; ++t) {
    const double load = factor_at(factors.load, t, T, "load");
    const double wind = factor_at(factors.wind, t, T, "wind");
    const double price = factor_at(factors.price, t, T, "price");
    out.system_load[t] *= load;
    for (std::size_t b = 0; b < out.bus_load_p.size(); ++b) {
      out.bus_load_p[b][t] *= load;
      out.bus_load_q[b][t] *= load;
    }
    for (std::size_t i = 0; i < model.ders.size(); ++i) {
      if (!model.ders[i].dispatchable) out.der_available[i][t] *= wind;
    }
    out.price[t] *= price;
    for (auto& series : out.tie_price) series[t] *= price;
  }
  return out;
}

}  // namespace mgsched
