#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mgsched/scheduler/scheduler.hpp"
#include "mgsched/stochastic/unscented.hpp"

namespace mgsched::stochastic {

/// Realized inputs with every factor of `x` applied to its target.
HourlyInputs factor_inputs(const GridModel& model, const HourlyInputs& base,
                           const std::vector<FactorTarget>& factor_map, const Eigen::VectorXd& x);

struct StochasticOptions {
  scheduler::RunOptions run;
  /// Workers for the sigma-point sweep; 0 picks the hardware concurrency.
  int threads = 0;
  /// Append per-microgrid costs (generation + exchange) to the output vector.
  bool per_microgrid = false;
};

struct PointResult {
  Eigen::VectorXd factors;
  double weight = 0.0;
  scheduler::RunResult run;
  [[nodiscard]] bool feasible() const {
    return run.status == scheduler::RunStatus::Optimal ||
           run.status == scheduler::RunStatus::NodeLimit;
  }
};

struct StochasticResult {
  /// Optimal when every point is optimal; otherwise the worst point status.
  scheduler::RunStatus status = scheduler::RunStatus::Error;
  /// Present only when every point produced a schedule.
  std::optional<OutputStatistics> stats;
  std::vector<PointResult> points;
  std::vector<std::string> output_names;  // "total", then microgrid ids
  std::string message;

  [[nodiscard]] double mean_cost() const { return stats ? stats->mean(0) : 0.0; }
  [[nodiscard]] double cost_std() const;
};

/// Runs the deterministic scheduler at each of the 2*alpha + 1 sigma points.
StochasticResult run_stochastic(const GridModel& model, scheduler::CaseFlag flag,
                                const UncertainInput& input, const StochasticOptions& options = {});

/// Sampled reference for the total cost; infeasible samples are excluded.
MonteCarloResult monte_carlo_reference(const GridModel& model, scheduler::CaseFlag flag,
                                       const UncertainInput& input, long samples,
                                       std::uint64_t seed, const StochasticOptions& options = {});

/// Statistics report: mean_cost, cost_std and one per_point entry per sigma
/// point (factors, weight, cost, feasible, status).
std::string stats_json(const StochasticResult& result, const UncertainInput& input,
                       const MonteCarloResult* reference = nullptr);

/// Parsed form of stats_json output.
struct StatsSummary {
  std::string status;
  std::optional<double> mean_cost;
  std::optional<double> cost_std;
  double w0 = 0.0;
  int alpha = 0;
  struct Point {
    std::vector<double> factors;
    double weight = 0.0;
    bool feasible = false;
    std::string status;
    std::optional<double> cost;
  };
  std::vector<Point> per_point;
  std::optional<double> mc_mean_cost;
  std::optional<double> mc_standard_error;
};

/// Throws ParameterError on malformed documents.
StatsSummary parse_stats_json(const std::string& text);

}  // namespace mgsched::stochastic
