#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include <json.hpp>

#include "mgsched/model/forecasts.hpp"
#include "mgsched/stochastic/stochastic.hpp"

namespace mgsched::stochastic {

namespace {

using scheduler::RunStatus;

int worker_count(int requested, int jobs) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  return std::clamp(n, 1, std::max(1, jobs));
}

int severity(RunStatus s) {
  switch (s) {
    case RunStatus::Optimal: return 0;
    case RunStatus::NodeLimit: return 1;
    case RunStatus::Infeasible: return 2;
    case RunStatus::Error: return 3;
  }
  return 3;
}

Eigen::VectorXd outputs_of(const GridModel& m, const scheduler::RunResult& r, bool per_mg) {
  Eigen::VectorXd y(per_mg ? 1 + static_cast<Eigen::Index>(m.microgrids.size()) : 1);
  y(0) = r.cost.total;
  if (per_mg) {
    for (std::size_t g = 0; g < m.microgrids.size(); ++g) {
      const auto& id = m.microgrids[g].id;
      y(1 + static_cast<Eigen::Index>(g)) =
          r.cost.generation_by_microgrid.at(id) + r.cost.exchange_by_microgrid.at(id);
    }
  }
  return y;
}

std::string describe(const Eigen::VectorXd& x) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(x(i));
  }
  return s + "]";
}

}  // namespace

HourlyInputs factor_inputs(const GridModel& m, const HourlyInputs& base,
                           const std::vector<FactorTarget>& map, const Eigen::VectorXd& x) {
  const int T = m.horizon();
  ForecastFactors f{std::vector<double>(T, 1.0), std::vector<double>(T, 1.0),
                    std::vector<double>(T, 1.0)};
  for (std::size_t i = 0; i < map.size(); ++i) {
    auto& series = map[i].kind == FactorTarget::Kind::Load   ? f.load
                   : map[i].kind == FactorTarget::Kind::Wind ? f.wind
                                                             : f.price;
    const double v = x(static_cast<Eigen::Index>(i));
    if (map[i].hour == 0) {
      for (auto& s : series) s *= v;
    } else {
      if (map[i].hour < 1 || map[i].hour > T) throw ParameterError("factor hour out of range");
      series[map[i].hour - 1] *= v;
    }
  }
  return apply_factors(m, base, f);
}

double StochasticResult::cost_std() const {
  return stats ? std::sqrt(std::max(0.0, stats->covariance(0, 0))) : 0.0;
}

StochasticResult run_stochastic(const GridModel& m, scheduler::CaseFlag flag,
                                const UncertainInput& input, const StochasticOptions& options) {
  const auto set = sigma_points(input);
  if (static_cast<int>(input.factor_map.size()) != input.alpha()) {
    throw ParameterError("factor map must name every factor");
  }
  const auto base = scale_forecasts(m);
  const int n = static_cast<int>(set.points.size());

  StochasticResult result;
  result.output_names.push_back("total");
  if (options.per_microgrid) {
    for (const auto& mg : m.microgrids) result.output_names.push_back(mg.id);
  }
  result.points.resize(n);
  for (int i = 0; i < n; ++i) {
    result.points[i].factors = set.points[i];
    result.points[i].weight = set.weights[i];
  }

  // Each point writes only its own slot; a failed point yields NaN outputs so
  // the sweep still reports every point, and the statistics are withheld.
  const Eigen::Index outputs = static_cast<Eigen::Index>(result.output_names.size());
  auto f = [&](int i, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    auto& slot = result.points[i];
    slot.run = scheduler::run_deterministic(m, flag, factor_inputs(m, base, input.factor_map, x),
                                            options.run);
    if (!slot.feasible()) {
      return Eigen::VectorXd::Constant(outputs, std::numeric_limits<double>::quiet_NaN());
    }
    return outputs_of(m, slot.run, options.per_microgrid);
  };
  auto stats = propagate(set, IndexedPointFunction(f), worker_count(options.threads, n));

  result.status = RunStatus::Optimal;
  for (int i = 0; i < n; ++i) {
    const auto& p = result.points[i];
    if (severity(p.run.status) > severity(result.status)) result.status = p.run.status;
    if (!p.feasible() && result.message.empty()) {
      result.message = "sigma point " + std::to_string(i) + " " +
                       scheduler::to_string(p.run.status) + " at factors " + describe(p.factors) +
                       (p.run.hint.empty() ? "" : ": " + p.run.hint);
    }
  }
  if (result.message.empty()) result.stats = std::move(stats);
  return result;
}

MonteCarloResult monte_carlo_reference(const GridModel& m, scheduler::CaseFlag flag,
                                       const UncertainInput& input, long samples,
                                       std::uint64_t seed, const StochasticOptions& options) {
  if (static_cast<int>(input.factor_map.size()) != input.alpha()) {
    throw ParameterError("factor map must name every factor");
  }
  const auto base = scale_forecasts(m);
  auto f = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const auto r = scheduler::run_deterministic(m, flag, factor_inputs(m, base, input.factor_map, x),
                                                options.run);
    if (r.status != RunStatus::Optimal && r.status != RunStatus::NodeLimit) {
      throw PointFailure(scheduler::to_string(r.status));
    }
    return outputs_of(m, r, options.per_microgrid);
  };
  return monte_carlo(input, f, samples, seed, worker_count(options.threads, static_cast<int>(samples)));
}

std::string stats_json(const StochasticResult& r, const UncertainInput& input,
                       const MonteCarloResult* reference) {
  nlohmann::ordered_json j;
  j["status"] = scheduler::to_string(r.status);
  if (r.stats) {
    j["mean_cost"] = r.mean_cost();
    j["cost_std"] = r.cost_std();
  } else {
    j["mean_cost"] = nullptr;
    j["cost_std"] = nullptr;
  }
  j["w0"] = input.w0;
  j["alpha"] = input.alpha();
  auto factors = nlohmann::ordered_json::array();
  for (const auto& t : input.factor_map) {
    factors.push_back({{"kind", to_string(t.kind)}, {"hour", t.hour}});
  }
  j["factors"] = factors;
  auto points = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const auto& p = r.points[i];
    nlohmann::ordered_json e;
    e["index"] = i;
    e["weight"] = p.weight;
    e["factors"] = std::vector<double>(p.factors.data(), p.factors.data() + p.factors.size());
    e["feasible"] = p.feasible();
    e["status"] = scheduler::to_string(p.run.status);
    if (p.feasible()) {
      e["cost"] = p.run.cost.total;
    } else {
      e["cost"] = nullptr;
    }
    points.push_back(e);
  }
  j["per_point"] = points;
  if (r.stats && r.output_names.size() > 1) {
    nlohmann::ordered_json by;
    for (std::size_t k = 1; k < r.output_names.size(); ++k) {
      by[r.output_names[k]] = r.stats->mean(static_cast<Eigen::Index>(k));
    }
    j["mean_cost_by_microgrid"] = by;
  }
  if (!r.message.empty()) j["message"] = r.message;
  if (reference) {
    j["monte_carlo"] = {{"samples", reference->samples},
                        {"excluded", reference->excluded},
                        {"exclusion_rate", reference->exclusion_rate()},
                        {"mean_cost", reference->stats.mean(0)},
                        {"standard_error", reference->standard_error(0)}};
  }
  return j.dump(2) + "\n";
}

StatsSummary parse_stats_json(const std::string& text) {
  auto optional_number = [](const nlohmann::json& v) -> std::optional<double> {
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
  };
  try {
    const auto j = nlohmann::json::parse(text);
    StatsSummary s;
    s.status = j.at("status").get<std::string>();
    s.mean_cost = optional_number(j.at("mean_cost"));
    s.cost_std = optional_number(j.at("cost_std"));
    s.w0 = j.at("w0").get<double>();
    s.alpha = j.at("alpha").get<int>();
    for (const auto& e : j.at("per_point")) {
      s.per_point.push_back({e.at("factors").get<std::vector<double>>(), e.at("weight").get<double>(),
                             e.at("feasible").get<bool>(), e.at("status").get<std::string>(),
                             optional_number(e.at("cost"))});
    }
    if (j.contains("monte_carlo")) {
      s.mc_mean_cost = j["monte_carlo"].at("mean_cost").get<double>();
      s.mc_standard_error = j["monte_carlo"].at("standard_error").get<double>();
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("statistics report: ") + e.what());
  }
}

}  // namespace mgsched::stochastic
