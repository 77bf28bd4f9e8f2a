#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mgsched::stochastic {

/// What one uncertain factor multiplies. hour == 0 means every hour,
/// otherwise the 1-based hour it applies to.
struct FactorTarget {
  enum class Kind { Load, Wind, Price };
  Kind kind = Kind::Load;
  int hour = 0;
};

std::string to_string(FactorTarget::Kind kind);

struct UncertainInput {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  double w0 = 1.0 / 3.0;
  std::vector<FactorTarget> factor_map;

  [[nodiscard]] int alpha() const { return static_cast<int>(mean.size()); }
};

/// Three scalar factors (system load, wind, price) with mean 1 and standard
/// deviations given as fractions of the mean.
UncertainInput three_factor_input(double sigma_load, double sigma_wind, double sigma_price,
                                  double w0 = 1.0 / 3.0);

/// One independent factor per quantity and hour (3 * horizon factors).
UncertainInput hourly_factor_input(int horizon, double sigma_load, double sigma_wind,
                                   double sigma_price, double w0 = 1.0 / 3.0);

/// Bad UT parameters (w0 outside [0, 1), empty or mis-sized inputs).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Covariance is not symmetric positive semidefinite.
class DecompositionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lower-triangular L with L * L^T = a, columns in index order. Zero pivots
/// (semidefinite directions) yield zero columns.
Eigen::MatrixXd psd_cholesky(const Eigen::MatrixXd& a, double tolerance = 1e-12);

struct SigmaPointSet {
  std::vector<Eigen::VectorXd> points;  // x_0, x_0 + L_1..L_a, x_0 - L_1..L_a
  std::vector<double> weights;
};

std::vector<double> weights(int alpha, double w0);
SigmaPointSet sigma_points(const UncertainInput& input);

struct OutputStatistics {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  std::vector<Eigen::VectorXd> outputs;
};

using PointFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
/// Same, also told the sigma-point index being evaluated.
using IndexedPointFunction = std::function<Eigen::VectorXd(int, const Eigen::VectorXd&)>;

/// Raised when f fails on a sigma point; carries the point.
class PropagationError : public std::runtime_error {
 public:
  PropagationError(int index, Eigen::VectorXd point, const std::string& what);
  [[nodiscard]] int index() const { return index_; }
  [[nodiscard]] const Eigen::VectorXd& point() const { return point_; }

 private:
  int index_;
  Eigen::VectorXd point_;
};

/// Weighted mean and scatter of already evaluated outputs, accumulated in
/// index order. The mean is accumulated as offsets from outputs[0] so equal
/// outputs collapse exactly.
OutputStatistics weighted_statistics(const std::vector<double>& weights,
                                     std::vector<Eigen::VectorXd> outputs);

/// Evaluates f on every sigma point (concurrently when threads > 1) and
/// aggregates in index order.
OutputStatistics propagate(const SigmaPointSet& set, const PointFunction& f, int threads = 1);
OutputStatistics propagate(const SigmaPointSet& set, const IndexedPointFunction& f, int threads = 1);

/// Thrown by a point function to mark a sample as infeasible; Monte Carlo
/// excludes such samples instead of aborting.
class PointFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MonteCarloResult {
  OutputStatistics stats;  // over accepted samples; outputs not retained
  Eigen::VectorXd standard_error;
  long samples = 0;
  long excluded = 0;
  [[nodiscard]] double exclusion_rate() const {
    return samples > 0 ? static_cast<double>(excluded) / static_cast<double>(samples) : 0.0;
  }
};

/// Gaussian samples x = mean + L z from a seeded mt19937_64. Samples are drawn
/// up front, so results do not depend on the thread count.
MonteCarloResult monte_carlo(const UncertainInput& input, const PointFunction& f, long samples,
                             std::uint64_t seed, int threads = 1);

}  // namespace mgsched::stochastic
