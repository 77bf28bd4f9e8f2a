#include "mgsched/stochastic/unscented.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

namespace mgsched::stochastic {

namespace {

void check_w0(double w0) {
  if (!(w0 >= 0.0 && w0 < 1.0)) {
    throw ParameterError("w0 must lie in [0, 1), got " + std::to_string(w0));
  }
}

// Runs job(i) for i in [0, n) on up to `threads` workers. The first exception
// (lowest index among those seen) is rethrown after all workers stop.
template <typename Job>
void parallel_for(int n, int threads, Job job) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex mu;
  std::exception_ptr error;
  int error_index = n;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (int k = 0; k < std::min(threads, n); ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::string to_string(FactorTarget::Kind kind) {
  switch (kind) {
    case FactorTarget::Kind::Load: return "load";
    case FactorTarget::Kind::Wind: return "wind";
    case FactorTarget::Kind::Price: return "price";
  }
  return "load";
}

UncertainInput three_factor_input(double sigma_load, double sigma_wind, double sigma_price,
                                  double w0) {
  UncertainInput in;
  in.mean = Eigen::VectorXd::Ones(3);
  in.covariance = Eigen::Vector3d(sigma_load * sigma_load, sigma_wind * sigma_wind,
                                  sigma_price * sigma_price)
                      .asDiagonal();
  in.w0 = w0;
  in.factor_map = {{FactorTarget::Kind::Load, 0},
                   {FactorTarget::Kind::Wind, 0},
                   {FactorTarget::Kind::Price, 0}};
  return in;
}

UncertainInput hourly_factor_input(int horizon, double sigma_load, double sigma_wind,
                                   double sigma_price, double w0) {
  UncertainInput in;
  const int a = 3 * horizon;
  in.mean = Eigen::VectorXd::Ones(a);
  in.covariance = Eigen::MatrixXd::Zero(a, a);
  in.w0 = w0;
  const double s[3] = {sigma_load, sigma_wind, sigma_price};
  const FactorTarget::Kind kinds[3] = {FactorTarget::Kind::Load, FactorTarget::Kind::Wind,
                                       FactorTarget::Kind::Price};
  for (int q = 0; q < 3; ++q) {
    for (int t = 0; t < horizon; ++t) {
      const int i = q * horizon + t;
      in.covariance(i, i) = s[q] * s[q];
      in.factor_map.push_back({kinds[q], t + 1});
    }
  }
  return in;
}

Eigen::MatrixXd psd_cholesky(const Eigen::MatrixXd& a, double tolerance) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw DecompositionError("covariance is not square");
  if (!a.allFinite()) throw DecompositionError("covariance has non-finite entries");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > tolerance * scale) {
    throw DecompositionError("covariance is not symmetric");
  }
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (d < -tolerance * scale) {
      throw DecompositionError("covariance is not positive semidefinite (pivot " +
                               std::to_string(j) + " = " + std::to_string(d) + ")");
    }
    if (d <= tolerance * scale) {
      // Semidefinite direction: the rest of the column must vanish too.
      for (Eigen::Index i = j + 1; i < n; ++i) {
        const double r = a(i, j) - l.row(i).head(j).dot(l.row(j).head(j));
        if (std::abs(r) > std::sqrt(tolerance) * scale) {
          throw DecompositionError("covariance is not positive semidefinite (column " +
                                   std::to_string(j) + ")");
        }
      }
      continue;
    }
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
  return l;
}

std::vector<double> weights(int alpha, double w0) {
  if (alpha < 1) throw ParameterError("alpha must be at least 1");
  check_w0(w0);
  std::vector<double> w(2 * alpha + 1, (1.0 - w0) / (2.0 * alpha));
  w[0] = w0;
  return w;
}

SigmaPointSet sigma_points(const UncertainInput& input) {
  const int a = input.alpha();
  if (a < 1) throw ParameterError("uncertain input has no factors");
  if (input.covariance.rows() != a || input.covariance.cols() != a) {
    throw ParameterError("covariance must be " + std::to_string(a) + "x" + std::to_string(a));
  }
  if (!input.factor_map.empty() && static_cast<int>(input.factor_map.size()) != a) {
    throw ParameterError("factor map must name every factor");
  }
  check_w0(input.w0);
  const Eigen::MatrixXd l = psd_cholesky((a / (1.0 - input.w0)) * input.covariance);
  SigmaPointSet set;
  set.weights = weights(a, input.w0);
  set.points.assign(2 * a + 1, input.mean);
  for (int w = 0; w < a; ++w) {
    set.points[1 + w] += l.col(w);
    set.points[1 + a + w] -= l.col(w);
  }
  return set;
}

PropagationError::PropagationError(int index, Eigen::VectorXd point, const std::string& what)
    : std::runtime_error(what), index_(index), point_(std::move(point)) {}

OutputStatistics weighted_statistics(const std::vector<double>& w,
                                     std::vector<Eigen::VectorXd> outputs) {
  OutputStatistics s;
  if (outputs.empty()) return s;
  const Eigen::Index m = outputs[0].size();
  s.mean = outputs[0];
  for (std::size_t i = 1; i < outputs.size(); ++i) s.mean += w[i] * (outputs[i] - outputs[0]);
  // outputs[0] enters with weight w[0]; the offsets above carry the remaining
  // 1 - w[0] through the other points.
  s.covariance = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const Eigen::VectorXd d = outputs[i] - s.mean;
    s.covariance += w[i] * d * d.transpose();
  }
  s.covariance = 0.5 * (s.covariance + s.covariance.transpose());
  s.outputs = std::move(outputs);
  return s;
}

OutputStatistics propagate(const SigmaPointSet& set, const PointFunction& f, int threads) {
  return propagate(set, IndexedPointFunction([&](int, const Eigen::VectorXd& x) { return f(x); }),
                   threads);
}

OutputStatistics propagate(const SigmaPointSet& set, const IndexedPointFunction& f, int threads) {
  const int n = static_cast<int>(set.points.size());
  std::vector<Eigen::VectorXd> y(n);
  parallel_for(n, threads, [&](int i) {
    try {
      y[i] = f(i, set.points[i]);
    } catch (const std::exception& e) {
      throw PropagationError(i, set.points[i], "sigma point " + std::to_string(i) + ": " + e.what());
    }
  });
  for (int i = 1; i < n; ++i) {
    if (y[i].size() != y[0].size()) {
      throw PropagationError(i, set.points[i], "sigma point " + std::to_string(i) +
                                                   ": output size differs from point 0");
    }
  }
  return weighted_statistics(set.weights, std::move(y));
}

MonteCarloResult monte_carlo(const UncertainInput& input, const PointFunction& f, long samples,
                             std::uint64_t seed, int threads) {
  if (samples < 2) throw ParameterError("Monte Carlo needs at least 2 samples");
  const int a = input.alpha();
  if (input.covariance.rows() != a || input.covariance.cols() != a) {
    throw ParameterError("covariance must be " + std::to_string(a) + "x" + std::to_string(a));
  }
  const Eigen::MatrixXd l = psd_cholesky(input.covariance);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::VectorXd> x(samples);
  for (long s = 0; s < samples; ++s) {
    Eigen::VectorXd z(a);
    for (int i = 0; i < a; ++i) z(i) = normal(rng);
    x[s] = input.mean + l * z;
  }

  std::vector<Eigen::VectorXd> y(samples);
  std::vector<char> ok(samples, 0);
  parallel_for(static_cast<int>(samples), threads, [&](int s) {
    try {
      y[s] = f(x[s]);
      ok[s] = 1;
    } catch (const PointFailure&) {
      ok[s] = 0;
    }
  });

  MonteCarloResult r;
  r.samples = samples;
  Eigen::VectorXd sum;
  long n = 0;
  for (long s = 0; s < samples; ++s) {
    if (!ok[s]) {
      ++r.excluded;
      continue;
    }
    if (n == 0) sum = Eigen::VectorXd::Zero(y[s].size());
    sum += y[s];
    ++n;
  }
  if (n < 2) throw ParameterError("fewer than 2 Monte Carlo samples were feasible");
  r.stats.mean = sum / static_cast<double>(n);
  const Eigen::Index m = r.stats.mean.size();
  r.stats.covariance = Eigen::MatrixXd::Zero(m, m);
  for (long s = 0; s < samples; ++s) {
    if (!ok[s]) continue;
    const Eigen::VectorXd d = y[s] - r.stats.mean;
    r.stats.covariance += d * d.transpose();
  }
  r.stats.covariance /= static_cast<double>(n - 1);
  r.standard_error = (r.stats.covariance.diagonal() / static_cast<double>(n)).cwiseSqrt();
  return r;
}

}  // namespace mgsched::stochastic
