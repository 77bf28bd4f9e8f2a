#pragma once

#include <complex>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mgsched {

/// Placeholder used on either side of a tie line for the utility grid.
inline constexpr std::string_view kMainGrid = "MAIN_GRID";

using Complex = std::complex<double>;

/// Shares of a bus load modelled as constant power / current / impedance.
struct ZipFractions {
  double constant_power = 1.0;
  double constant_current = 0.0;
  double constant_impedance = 0.0;

  [[nodiscard]] double sum() const {
    return constant_power + constant_current + constant_impedance;
  }
  bool operator==(const ZipFractions&) const = default;
};

struct Bus {
  std::string id;
  std::string microgrid_id;  // empty for the utility interconnection bus
  bool slack = false;
  double v_min = 0.95;
  double v_max = 1.05;
  /// Share of the system load shape attached here (used unless an explicit
  /// profile is supplied).
  double load_share = 0.0;
  double power_factor = 1.0;
  std::vector<double> fixed_load_p;  // kW, explicit profile (optional)
  std::vector<double> fixed_load_q;  // kVAr, explicit profile (optional)
  ZipFractions zip;

  bool operator==(const Bus&) const = default;
};

struct Branch {
  std::string id;
  std::string from_bus;
  std::string to_bus;
  Complex impedance;           // per-unit series impedance
  double thermal_limit = 0.0;  // kVA
  bool closed = true;

  bool operator==(const Branch&) const = default;
};

struct MicrogridRegion {
  std::string id;
  std::vector<std::string> buses;
  std::vector<std::string> tie_lines;

  bool operator==(const MicrogridRegion&) const = default;
};

/// Positive flow means power moves from `from` to `to`.
struct TieLine {
  std::string id;
  std::string from;
  std::string to;
  double p_min = 0.0;  // kW
  double p_max = 0.0;  // kW
  /// Explicit hourly price ($/kWh); when empty the system price shape is
  /// used, multiplied by price_scale.
  std::vector<double> price_profile;
  double price_scale = 1.0;
  /// Revenue per kWh for power delivered into the main grid (main-grid ties only).
  double export_price = 0.0;

  [[nodiscard]] bool touches_main_grid() const {
    return from == kMainGrid || to == kMainGrid;
  }
  bool operator==(const TieLine&) const = default;
};

struct DerUnit {
  std::string id;
  std::string microgrid_id;
  std::string bus_id;
  bool dispatchable = true;
  double cost = 0.0;  // $/kWh
  double p_min = 0.0;
  double p_max = 0.0;
  int min_up = 0;
  int min_down = 0;
  double ramp_up = 0.0;    // kW/h
  double ramp_down = 0.0;  // kW/h
  double startup_cost = 0.0;
  double shutdown_cost = 0.0;
  /// Hours already on (> 0) or off (< 0) before hour 1.
  int initial_status = -1;
  /// Output during hour 0; defaults to p_min when initially on.
  std::optional<double> initial_power;
  /// Forecast series id for nondispatchable units.
  std::string profile;

  [[nodiscard]] bool initially_on() const { return initial_status > 0; }
  [[nodiscard]] double power_before_horizon() const {
    return initial_power.value_or(initially_on() ? p_min : 0.0);
  }
  bool operator==(const DerUnit&) const = default;
};

struct StorageUnit {
  std::string id;
  std::string microgrid_id;
  std::string bus_id;
  double energy_capacity = 0.0;  // kWh
  double p_charge_min = 0.0;
  double p_charge_max = 0.0;
  double p_discharge_min = 0.0;
  double p_discharge_max = 0.0;
  int min_charge_time = 1;
  int min_discharge_time = 1;
  double round_trip_efficiency = 1.0;
  double initial_soc = 0.0;    // kWh
  double final_soc_min = 0.0;  // kWh

  /// One-way efficiency applied on both charge and discharge.
  [[nodiscard]] double one_way_efficiency() const;
  bool operator==(const StorageUnit&) const = default;
};

enum class LoadKind { Shiftable, Curtailable };

struct AdjustableLoad {
  std::string id;
  std::string microgrid_id;
  std::string bus_id;
  LoadKind kind = LoadKind::Shiftable;
  double p_min = 0.0;
  double p_max = 0.0;
  double required_energy = 0.0;  // kWh
  int window_start = 1;          // inclusive, 1-based
  int window_end = 1;            // inclusive, 1-based
  int min_on_time = 1;

  [[nodiscard]] int window_length() const { return window_end - window_start + 1; }
  [[nodiscard]] bool in_window(int hour) const {
    return hour >= window_start && hour <= window_end;
  }
  bool operator==(const AdjustableLoad&) const = default;
};

struct ForecastSet {
  std::vector<double> load_shape;
  double peak_load = 0.0;  // kW
  std::map<std::string, std::vector<double>> wind_shapes;
  std::vector<double> price_shape;  // $/kWh

  bool operator==(const ForecastSet&) const = default;
};

struct CaseSettings {
  std::string name;
  int horizon_hours = 24;
  double base_mva = 1.0;
  double v_norm = 1.0;
  Complex slack_voltage{1.0, 0.0};
  /// Bound on |Im V| used by the linear voltage-limit proxy.
  double im_cap = 0.1;

  bool operator==(const CaseSettings&) const = default;
};

struct GridModel {
  CaseSettings settings;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<MicrogridRegion> microgrids;
  std::vector<TieLine> tie_lines;
  std::vector<DerUnit> ders;
  std::vector<StorageUnit> storages;
  std::vector<AdjustableLoad> adjustable_loads;
  ForecastSet forecasts;

  [[nodiscard]] int horizon() const { return settings.horizon_hours; }
  /// kW per per-unit power on the system base.
  [[nodiscard]] double kw_per_pu() const { return settings.base_mva * 1000.0; }

  [[nodiscard]] int bus_index(std::string_view id) const;
  [[nodiscard]] int microgrid_index(std::string_view id) const;
  [[nodiscard]] int slack_index() const;

  bool operator==(const GridModel&) const = default;
};

/// Absolute hourly series derived from the normalized forecasts.
struct HourlyInputs {
  std::vector<double> system_load;                 // kW [t]
  std::vector<std::vector<double>> bus_load_p;     // kW [bus][t]
  std::vector<std::vector<double>> bus_load_q;     // kVAr [bus][t]
  std::vector<std::vector<double>> der_available;  // kW [der][t]
  std::vector<std::vector<double>> tie_price;      // $/kWh [tie][t]
  std::vector<double> price;                       // $/kWh [t]
};

struct CaseIssue {
  std::string path;
  std::string message;
};

class CaseError : public std::runtime_error {
 public:
  enum class Kind { Io, Parse, Validation };
  CaseError(Kind kind, std::string what, std::vector<CaseIssue> issues = {});
  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] const std::vector<CaseIssue>& issues() const { return issues_; }

 private:
  Kind kind_;
  std::vector<CaseIssue> issues_;
};

}  // namespace mgsched
