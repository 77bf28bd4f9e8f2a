// Acceptance gate: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes. Tolerances are fixed here and never relaxed at run
// time.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mgsched/cli/app.hpp"
#include "mgsched/model/case_io.hpp"
#include "mgsched/model/forecasts.hpp"
#include "mgsched/powerflow/zip_system.hpp"
#include "mgsched/scheduler/report.hpp"
#include "mgsched/stochastic/stochastic.hpp"
#include "support/milp_oracle.hpp"
#include "support/toy_models.hpp"

namespace {

namespace fs = std::filesystem;
using namespace mgsched;
using Clock = std::chrono::steady_clock;
using scheduler::CaseFlag;
using scheduler::RunStatus;

namespace tol {
constexpr double kMoment = 1e-10;          // criterion 1, absolute
constexpr double kAffine = 1e-9;           // criterion 2, relative
constexpr double kSquareUlps = 2.0;        // criterion 3, UT mean of x^2 at the default w0
constexpr double kLinearExact = 1e-10;     // criterion 4, relative voltage
constexpr double kLinearDrop = 0.005;      // criterion 4, relative magnitude
constexpr double kFlat = 1e-14;            // criterion 5, absolute pu
constexpr double kMilp = 1e-6;             // criterion 6, relative
constexpr double kForced = 1e-6;           // criterion 7, kW / kWh
constexpr double kAudit = 1e-5;            // criterion 8, relative
constexpr double kSpot = 1e-9;             // criterion 8, $
constexpr double kOrder = 1e-9;            // criteria 9-10, relative slack for solver round-off
constexpr double kMomentSeconds = 1.0;
constexpr double kMilpSeconds = 60.0;
constexpr double kSweepSeconds = 600.0;
}  // namespace tol

struct Line {
  bool pass = false;
  std::string detail;
};

std::map<int, Line> lines;
const char* const kTitles[] = {
    "",
    "UT moment matching",
    "UT affine exactness",
    "UT vs Monte Carlo on x^2",
    "linear power flow vs Newton oracle",
    "flat-voltage identity",
    "MILP vs exhaustive enumeration",
    "forced-load schedule",
    "cost audit",
    "case ordering and feeder tightening",
    "uncertainty raises expected cost",
    "validator concordance",
    "end-to-end compare runtime",
};

void record(int n, bool pass, const std::string& detail) {
  lines[n] = {pass, detail};
  std::cerr << "  [" << n << "] " << (pass ? "pass" : "FAIL") << " " << detail << std::endl;
}

std::string fmt(double v, int digits = 6) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("missing artifact " + p.string());
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Eigen::MatrixXd random_psd(std::mt19937_64& rng, int n, int rank) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd b(n, rank);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < rank; ++j) b(i, j) = normal(rng);
  return b * b.transpose();
}

// Weighted moments of the sigma points, computed here rather than by the
// library's aggregation.
void point_moments(const stochastic::SigmaPointSet& s, Eigen::VectorXd& mean, Eigen::MatrixXd& cov) {
  const auto n = s.points.front().size();
  mean = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < s.points.size(); ++i) mean += s.weights[i] * s.points[i];
  cov = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    const Eigen::VectorXd d = s.points[i] - mean;
    cov += s.weights[i] * d * d.transpose();
  }
}

void criterion1() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 6);
  double worst = 0.0;
  const auto start = Clock::now();
  for (int trial = 0; trial < 100; ++trial) {
    const int a = dim(rng);
    const int rank = std::uniform_int_distribution<int>(0, a)(rng);
    stochastic::UncertainInput in;
    in.mean = Eigen::VectorXd::NullaryExpr(a, [&] { return 4.0 * unit(rng) - 2.0; });
    in.covariance = random_psd(rng, a, rank);
    in.w0 = 0.9 * unit(rng);
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    point_moments(stochastic::sigma_points(in), mean, cov);
    worst = std::max({worst, (mean - in.mean).cwiseAbs().maxCoeff(),
                      (cov - in.covariance).cwiseAbs().maxCoeff()});
  }
  const double dt = seconds_since(start);
  record(1, worst <= tol::kMoment && dt < tol::kMomentSeconds,
         "100 cases, max error " + fmt(worst, 3) + " (<= 1e-10), " + fmt(dt, 3) + " s (< 1 s)");
}

void criterion2() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int a = 1 + trial % 6;
    const int m = 1 + (trial / 6) % 4;
    stochastic::UncertainInput in;
    in.mean = Eigen::VectorXd::NullaryExpr(a, [&] { return 10.0 * unit(rng) - 5.0; });
    in.covariance = random_psd(rng, a, 1 + trial % a);
    in.w0 = 0.9 * unit(rng);
    const Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(m, a, [&] { return 6.0 * unit(rng) - 3.0; });
    const Eigen::VectorXd b = Eigen::VectorXd::NullaryExpr(m, [&] { return 100.0 * unit(rng); });
    const auto stats = stochastic::propagate(
        stochastic::sigma_points(in),
        stochastic::PointFunction([&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return A * x + b; }));
    const Eigen::VectorXd mean = A * in.mean + b;
    const Eigen::MatrixXd cov = A * in.covariance * A.transpose();
    worst = std::max(worst, (stats.mean - mean).cwiseAbs().maxCoeff() / mean.cwiseAbs().maxCoeff());
    worst = std::max(worst, (stats.covariance - cov).cwiseAbs().maxCoeff() /
                                std::max(1e-300, cov.cwiseAbs().maxCoeff()));
  }
  record(2, worst <= tol::kAffine, "100 random affine maps, max relative error " + fmt(worst, 3) +
                                       " (<= 1e-9)");
}

void criterion3() {
  auto scalar = [](double w0) {
    stochastic::UncertainInput in;
    in.mean = Eigen::VectorXd::Zero(1);
    in.covariance = Eigen::MatrixXd::Identity(1, 1);
    in.w0 = w0;
    return in;
  };
  stochastic::PointFunction square = [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Constant(1, x(0) * x(0));
  };
  // Exact in floating point where the spread and weights are representable;
  // within a couple of ulps at the default w0 = 1/3 (spread sqrt(1.5)).
  bool exact = true;
  for (double w0 : {0.0, 0.75, 0.9375}) {
    exact = exact && stochastic::propagate(stochastic::sigma_points(scalar(w0)), square).mean(0) == 1.0;
  }
  const auto in = scalar(1.0 / 3.0);
  const double ut = stochastic::propagate(stochastic::sigma_points(in), square).mean(0);
  const double ulps = std::abs(ut - 1.0) / std::numeric_limits<double>::epsilon();
  const auto mc = stochastic::monte_carlo(in, square, 100000, 20240901);
  const double dev = std::abs(mc.stats.mean(0) - 1.0);
  const bool ok = exact && ulps <= tol::kSquareUlps && dev <= 3.0 * mc.standard_error(0);
  record(3, ok,
         std::string("UT mean ") + (exact ? "== 1.0 exactly" : "NOT exact") + " (w0 0, 0.75, 0.9375), " +
             fmt(ulps, 2) + " ulp at w0 1/3; MC 1e5 mean " + fmt(mc.stats.mean(0), 8) + ", |dev| " +
             fmt(dev / mc.standard_error(0), 3) + " SE (<= 3)");
}

powerflow::NodalPower bundled_hour(const GridModel& m, int hour, double scale) {
  const auto in = scale_forecasts(m);
  auto p = powerflow::fixed_load_power(m, in, hour);
  for (auto& l : p.load) l *= scale;
  return p;
}

void criterion4(const GridModel& bundled) {
  double exact_worst = 0.0;
  for (const ZipFractions zip : {ZipFractions{0, 0, 1}, ZipFractions{0, 1, 0}, ZipFractions{0, 0.4, 0.6}}) {
    auto m = bundled;
    for (auto& b : m.buses) b.zip = zip;
    for (int hour : {0, 8, 19}) {
      const auto s = powerflow::assemble_zip(m, bundled_hour(m, hour, 1.0));
      const auto lin = powerflow::solve_linear_pf(s);
      const auto nr = powerflow::ac_pf_oracle(s);
      if (!nr.converged) exact_worst = INFINITY;
      exact_worst = std::max(exact_worst, ((lin.voltages - nr.voltages).cwiseAbs().array() /
                                           nr.voltages.cwiseAbs().array()).maxCoeff());
    }
  }

  // Constant-power heavy loading, scaled so the oracle's deepest drop stays
  // within 5% of the slack magnitude.
  double drop_worst = 0.0, deepest = 0.0;
  int profiles = 0;
  auto m = bundled;
  for (auto& b : m.buses) b.zip = {1.0, 0.0, 0.0};
  const double vs = std::abs(m.settings.slack_voltage);
  for (int hour = 0; hour < m.horizon(); ++hour) {
    for (double scale = 4.0; scale > 1e-3; scale *= 0.8) {
      const auto s = powerflow::assemble_zip(m, bundled_hour(m, hour, scale));
      const auto nr = powerflow::ac_pf_oracle(s);
      if (!nr.converged) continue;
      const double drop = 1.0 - nr.voltages.cwiseAbs().minCoeff() / vs;
      if (drop > 0.05) continue;
      const auto lin = powerflow::solve_linear_pf(s);
      for (Eigen::Index i = 0; i < lin.voltages.size(); ++i) {
        const double e = std::abs(nr.voltages(i));
        drop_worst = std::max(drop_worst, std::abs(std::abs(lin.voltages(i)) - e) / e);
      }
      deepest = std::max(deepest, drop);
      ++profiles;
      break;
    }
  }
  const bool ok = exact_worst <= tol::kLinearExact && drop_worst <= tol::kLinearDrop && profiles == m.horizon();
  record(4, ok, "no constant-power part: max rel error " + fmt(exact_worst, 3) + " (<= 1e-10); " +
                    std::to_string(profiles) + " constant-power profiles up to " + fmt(100 * deepest, 3) +
                    "% drop: max |V| error " + fmt(100 * drop_worst, 3) + "% (<= 0.5%)");
}

void criterion5(const GridModel& bundled) {
  double worst = 0.0;
  std::vector<GridModel> nets = {bundled, testing::toy_model(1), testing::toy_model(6)};
  for (auto m : nets) {  // branches carry no shunt admittance
    for (const Complex vs : {Complex(1.0, 0.0), Complex(1.04, 0.0), Complex(0.97, -0.03)}) {
      m.settings.slack_voltage = vs;
      const powerflow::NodalPower zero{std::vector<Complex>(m.buses.size()),
                                       std::vector<Complex>(m.buses.size())};
      const auto sol = powerflow::solve_linear_pf(powerflow::assemble_zip(m, zero));
      for (const auto& v : sol.bus_voltages) worst = std::max(worst, std::abs(v - vs));
    }
  }
  record(5, worst <= tol::kFlat, "3 networks x 3 slack voltages, max |V - Vs| " + fmt(worst, 3) +
                                     " pu (<= 1e-14)");
}

void criterion6() {
  std::mt19937_64 rng(606);
  std::uniform_int_distribution<int> bins(1, 12);
  std::uniform_int_distribution<int> cont(0, 4);
  std::uniform_int_distribution<int> rows(3, 8);
  double worst = 0.0;
  int matched = 0, max_bins = 0;
  const auto start = Clock::now();
  for (int trial = 0; trial < 50; ++trial) {
    const int k = trial < 5 ? 12 : bins(rng);  // always include the largest size
    max_bins = std::max(max_bins, k);
    auto inst = testing::random_milp(rng, k, cont(rng), rows(rng));
    const double oracle = testing::enumerate_binaries(inst.problem, inst.binaries);
    const auto sol = solver::solve_milp(inst.problem);
    if (!std::isfinite(oracle) || sol.status != solver::SolveStatus::Optimal) continue;
    const double rel = std::abs(sol.objective - oracle) / std::max(1.0, std::abs(oracle));
    worst = std::max(worst, rel);
    if (rel <= tol::kMilp) ++matched;
  }
  const double dt = seconds_since(start);
  record(6, matched == 50 && dt < tol::kMilpSeconds,
         std::to_string(matched) + "/50 match (<= " + std::to_string(max_bins) +
             " binaries), max rel diff " + fmt(worst, 3) + " (<= 1e-6), " + fmt(dt, 3) +
             " s incl. enumeration (< 60 s)");
}

// ---------------------------------------------------------------------------
// Scheduling criteria. The 2x2 sweep runs once through the command layer;
// its artifacts are read back and audited, then a few targeted runs add the
// feeder-tightening and zero-uncertainty evidence.

struct Audited {
  std::string label;
  Schedule schedule;
  HourlyInputs inputs;
  double objective = 0.0;  // as reported by the optimizer
  const GridModel* model = nullptr;
};

std::vector<Audited> audit_pool;

void audit(const std::string& label, const GridModel& m, const HourlyInputs& in, const Schedule& s,
           double objective) {
  audit_pool.push_back({label, s, in, objective, &m});
}

void audit_run(const std::string& label, const GridModel& m, const HourlyInputs& in,
               const scheduler::RunResult& r) {
  if (r.status == RunStatus::Optimal) audit(label, m, in, r.schedule, r.objective);
}

void recompute_flags(Schedule& s, const GridModel& m) {
  for (std::size_t g = 0; g < s.units.size(); ++g) {
    auto& u = s.units[g];
    int prev = m.ders[g].initial_status > 0 ? 1 : 0;
    for (int t = 0; t < s.horizon; ++t) {
      u.startup[t] = u.status[t] && !prev ? 1 : 0;
      u.shutdown[t] = !u.status[t] && prev ? 1 : 0;
      prev = u.status[t];
    }
  }
}

int index_of_unit(const GridModel& m, const std::string& id) {
  for (std::size_t g = 0; g < m.ders.size(); ++g)
    if (m.ders[g].id == id) return static_cast<int>(g);
  throw std::runtime_error("no unit " + id);
}

int committed_hours(const Schedule& s, const GridModel& m, const std::string& mg) {
  int n = 0;
  for (std::size_t g = 0; g < m.ders.size(); ++g) {
    if (m.ders[g].microgrid_id != mg || !m.ders[g].dispatchable) continue;
    for (int u : s.units[g].status) n += u;
  }
  return n;
}

std::vector<std::string> committed_units(const Schedule& s, const GridModel& m, const std::string& mg) {
  std::vector<std::string> ids;
  for (std::size_t g = 0; g < m.ders.size(); ++g) {
    if (m.ders[g].microgrid_id != mg || !m.ders[g].dispatchable) continue;
    for (int u : s.units[g].status) {
      if (u) {
        ids.push_back(m.ders[g].id);
        break;
      }
    }
  }
  return ids;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : "+") + x;
  return s.empty() ? "none" : s;
}

}  // namespace

int main() {
  std::cerr << "acceptance: running criteria (progress on stderr, verdicts on stdout)" << std::endl;
  const auto bundled = load_case(testing::data_path("tables_case.json"));
  const auto base_inputs = scale_forecasts(bundled);
  int internal_errors = 0;
  auto guarded = [&](int n, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      ++internal_errors;
      record(n, false, std::string("exception: ") + e.what());
    }
  };
  // Shared runs feeding several criteria; a failure here fails each of them.
  std::string prep_error;
  auto prepare = [&](const char* what, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      ++internal_errors;
      prep_error += std::string(what) + ": " + e.what() + "; ";
      std::cerr << "  preparation failed: " << what << ": " << e.what() << std::endl;
    }
  };
  auto dependent = [&](int n, auto&& fn) {
    guarded(n, [&] {
      if (!prep_error.empty()) throw std::runtime_error(prep_error);
      fn();
    });
  };

  guarded(1, criterion1);
  guarded(2, criterion2);
  guarded(3, criterion3);
  guarded(4, [&] { criterion4(bundled); });
  guarded(5, [&] { criterion5(bundled); });
  guarded(6, criterion6);

  // Criterion 12 first among the scheduling criteria: its artifacts feed 7-11.
  const fs::path sweep_dir = fs::temp_directory_path() / "mgsched_acceptance_sweep";
  fs::remove_all(sweep_dir);
  std::optional<cli::CompareTable> table;
  guarded(12, [&] {
    cli::RunConfig config;
    config.case_path = testing::data_path("tables_case.json");
    config.mode = cli::Mode::Unscented;
    config.out_dir = sweep_dir.string();
    std::ostringstream out, err;
    const auto start = Clock::now();
    const int code = cli::cmd_compare(config, out, err);
    const double dt = seconds_since(start);
    std::cerr << out.str() << err.str();
    table = cli::parse_compare_long_csv(slurp(sweep_dir / "compare_long.csv"));
    bool all = table->cells.size() == 4;
    for (const auto& c : table->cells) all = all && c.status == "OPTIMAL" && c.cost;
    record(12, code == cli::kExitOk && all && dt < tol::kSweepSeconds,
           "2x2 sweep (alpha 3, w0 1/3, sigma 5%) exit " + std::to_string(code) + ", " + fmt(dt, 4) +
               " s (< 600 s), all four cells " + (all ? "OPTIMAL" : "NOT optimal"));
  });

  // Sweep schedules, read back through their parsers.
  std::map<std::string, Schedule> sweep;
  prepare("sweep artifacts", [&] {
    if (!table) throw std::runtime_error("sweep did not run");
    for (int k : {1, 2}) {
      for (const char* mode : {"deterministic", "stochastic"}) {
        const std::string prefix = "case" + std::to_string(k) + "_" + mode + "_";
        const auto s = scheduler::parse_schedule_csv(slurp(sweep_dir / (prefix + "schedule.csv")), bundled);
        const auto cost = scheduler::parse_cost_report_json(slurp(sweep_dir / (prefix + "cost.json")));
        double objective = cost.total;
        if (std::string(mode) == "deterministic") {
          objective = *table->find(k, cli::Mode::Deterministic)->cost;
        } else {
          const auto stats = stochastic::parse_stats_json(slurp(sweep_dir / (prefix + "stats.json")));
          objective = *stats.per_point.at(0).cost;
        }
        sweep[prefix] = s;
        audit("sweep " + prefix + "schedule", bundled, base_inputs, s, objective);
      }
    }
  });

  // Feeder tightening: the MG-1 feeder section L1c limited to 520 kVA.
  std::optional<scheduler::RunResult> tight1, tight2;
  auto tight = bundled;
  prepare("feeder tightening runs", [&] {
    bool found = false;
    for (auto& br : tight.branches) {
      if (br.id == "L1c") {
        br.thermal_limit = 520.0;
        found = true;
      }
    }
    if (!found) throw std::runtime_error("branch L1c missing");
    tight1 = scheduler::run_deterministic(tight, CaseFlag::case1());
    tight2 = scheduler::run_deterministic(tight, CaseFlag::case2());
    audit_run("tight case 1", tight, base_inputs, *tight1);
    audit_run("tight case 2", tight, base_inputs, *tight2);
  });

  // Zero uncertainty: Case 1 on the bundled case; Case 2 on a meshed-free
  // three-bus feeder where the network block is active but cheap.
  struct Collapse {
    std::string label;
    double deterministic = 0.0, mean = 0.0, std = 0.0;
    bool ok = false;
  };
  std::vector<Collapse> collapses;
  auto toy2 = testing::toy_model(3, 6, 0.2);
  toy2.ders.push_back(testing::toy_unit("G", 0.12, 50.0, 600.0));
  toy2.ders.back().bus_id = "N3";
  toy2.forecasts.load_shape = {0.6, 0.8, 1.0, 1.1, 0.9, 0.7};
  toy2.forecasts.price_shape = {0.05, 0.1, 0.3, 0.35, 0.2, 0.08};
  prepare("zero-uncertainty runs", [&] {
    const auto zero = stochastic::three_factor_input(0.0, 0.0, 0.0);
    stochastic::StochasticOptions opts;
    opts.threads = 1;
    for (int k : {1, 2}) {
      const GridModel& m = k == 1 ? bundled : toy2;
      const auto flag = k == 1 ? CaseFlag::case1() : CaseFlag::case2();
      const auto det = scheduler::run_deterministic(m, flag);
      const auto r = stochastic::run_stochastic(m, flag, zero, opts);
      Collapse c;
      c.label = k == 1 ? "case 1 bundled" : "case 2 three-bus";
      c.deterministic = det.cost.total;
      c.mean = r.stats ? r.mean_cost() : NAN;
      c.std = r.stats ? r.cost_std() : NAN;
      c.ok = det.status == RunStatus::Optimal && r.status == RunStatus::Optimal && r.stats &&
             c.mean == c.deterministic && c.std == 0.0;
      collapses.push_back(c);
      const auto in = scale_forecasts(m);
      audit_run("zero-uncertainty deterministic " + c.label, m, in, det);
      for (std::size_t i = 0; i < r.points.size(); ++i) {
        audit_run("zero-uncertainty point " + std::to_string(i) + " " + c.label, m, in, r.points[i].run);
      }
    }
  });

  dependent(7, [&] {
    const int l1 = [&] {
      for (std::size_t k = 0; k < bundled.adjustable_loads.size(); ++k)
        if (bundled.adjustable_loads[k].id == "L1") return static_cast<int>(k);
      throw std::runtime_error("no L1");
    }();
    double worst = 0.0, total = 0.0;
    int schedules = 0;
    for (const char* key : {"case1_deterministic_", "case2_deterministic_"}) {
      if (!sweep.count(key)) throw std::runtime_error("sweep schedule missing");
      const auto& served = sweep[key].loads[l1].served;
      double sum = 0.0;
      for (int t = 1; t <= bundled.horizon(); ++t) {
        worst = std::max(worst, std::abs(served[t - 1] - (t >= 11 && t <= 14 ? 120.0 : 0.0)));
        sum += served[t - 1];
      }
      worst = std::max(worst, std::abs(sum - 480.0));
      total = sum;
      ++schedules;
    }
    record(7, worst <= tol::kForced && schedules == 2,
           "L1 at 120 kW in hours 11-14 only, total " + fmt(total, 10) + " kWh; max deviation " +
               fmt(worst, 3) + " (<= 1e-6), both cases");
  });

  dependent(8, [&] {
    double worst = 0.0;
    for (const auto& a : audit_pool) {
      const double c = scheduler::cost_of(a.schedule, *a.model, a.inputs).total;
      worst = std::max(worst, std::abs(c - a.objective) / std::max(1.0, std::abs(a.objective)));
    }
    Schedule spot;
    spot.horizon = bundled.horizon();
    for (const auto& g : bundled.ders) {
      spot.units.push_back({g.id, std::vector<int>(spot.horizon, 0), std::vector<double>(spot.horizon, 0.0),
                            std::vector<int>(spot.horizon, 0), std::vector<int>(spot.horizon, 0)});
    }
    for (const auto& t : bundled.tie_lines) spot.ties.push_back({t.id, std::vector<double>(spot.horizon, 0.0)});
    for (const auto& s : bundled.storages) {
      spot.storages.push_back({s.id, std::vector<double>(spot.horizon, 0.0),
                               std::vector<double>(spot.horizon, 0.0),
                               std::vector<double>(spot.horizon, s.initial_soc)});
    }
    for (const auto& l : bundled.adjustable_loads) {
      spot.loads.push_back({l.id, std::vector<double>(spot.horizon, 0.0)});
    }
    const int g1 = index_of_unit(bundled, "G1");
    spot.units[g1].status[0] = 1;
    spot.units[g1].power[0] = 1000.0;
    const auto cost = scheduler::cost_of(spot, bundled, base_inputs);
    const double spot_err = std::abs(cost.per_hour.at(0) - 154.0);
    record(8, !audit_pool.empty() && worst <= tol::kAudit && spot_err <= tol::kSpot,
           std::to_string(audit_pool.size()) + " OPTIMAL runs, max |cost_of - objective| rel " + fmt(worst, 3) +
               " (<= 1e-5); G1 at 1000 kW for one hour costs $" + fmt(cost.per_hour.at(0), 10));
  });

  dependent(9, [&] {
    if (!table || !tight1 || !tight2) throw std::runtime_error("inputs missing");
    bool ordered = true;
    std::string detail;
    for (auto mode : {cli::Mode::Deterministic, cli::Mode::Unscented}) {
      const double c1 = *table->find(1, mode)->cost, c2 = *table->find(2, mode)->cost;
      ordered = ordered && c2 >= c1 - tol::kOrder * std::abs(c1);
      detail += std::string(mode == cli::Mode::Deterministic ? "det" : "ut") + " case 2 " + fmt(c2, 10) +
                " vs case 1 " + fmt(c1, 10) + "; ";
    }
    const bool tight_ok = tight1->status == RunStatus::Optimal && tight2->status == RunStatus::Optimal;
    const auto& base2 = sweep.at("case2_deterministic_");
    const int before = committed_hours(base2, bundled, "MG1");
    const int after = tight_ok ? committed_hours(tight2->schedule, tight, "MG1") : 0;
    const auto units_before = committed_units(base2, bundled, "MG1");
    const auto units_after = tight_ok ? committed_units(tight2->schedule, tight, "MG1") : std::vector<std::string>{};
    const bool more = tight_ok && after > before && units_after.size() > units_before.size();
    const bool tight_ordered = tight_ok && tight2->objective >= tight1->objective - tol::kOrder * tight1->objective;
    detail += "L1c at 520 kVA: MG1 commits " + join(units_before) + " (" + std::to_string(before) + " unit-h) -> " +
              join(units_after) + " (" + std::to_string(after) + " unit-h), cost " +
              (tight_ok ? fmt(tight2->objective, 10) : std::string("n/a")) + " vs case 1 " +
              (tight_ok ? fmt(tight1->objective, 10) : std::string("n/a"));
    record(9, ordered && more && tight_ordered, detail);
  });

  dependent(10, [&] {
    if (!table) throw std::runtime_error("sweep did not run");
    bool up = true;
    std::string detail;
    for (int k : {1, 2}) {
      const double d = *table->find(k, cli::Mode::Deterministic)->cost;
      const double u = *table->find(k, cli::Mode::Unscented)->cost;
      up = up && u >= d - tol::kOrder * std::abs(d);
      detail += "case " + std::to_string(k) + " UT " + fmt(u, 10) + " vs det " + fmt(d, 10) + " (+" +
                fmt(u - d, 4) + "); ";
    }
    bool collapse = collapses.size() == 2;
    for (const auto& c : collapses) {
      collapse = collapse && c.ok;
      detail += "zero sigma " + c.label + (c.ok ? " collapses exactly" : " DOES NOT collapse") + "; ";
    }
    detail.resize(detail.size() - 2);
    record(10, up && collapse, detail);
  });

  dependent(11, [&] {
    std::size_t clean = 0;
    std::string first_bad;
    for (const auto& a : audit_pool) {
      if (validate_schedule(a.schedule, *a.model, a.inputs).empty()) {
        ++clean;
      } else if (first_bad.empty()) {
        first_bad = a.label;
      }
    }
    // Mutations of the Case 1 schedule: status flips with consistent
    // transition flags, and dispatch bumps that break a balance or a bound.
    const auto& base = sweep.at("case1_deterministic_");
    struct Mutation {
      std::string name;
      std::function<void(Schedule&)> apply;
    };
    std::vector<Mutation> mutations;
    const int g1 = index_of_unit(bundled, "G1"), g2 = index_of_unit(bundled, "G2"),
              g6 = index_of_unit(bundled, "G6"), g8 = index_of_unit(bundled, "G8");
    for (int h : {1, 7, 13, 24}) {
      mutations.push_back({"switch G1 off in hour " + std::to_string(h), [=](Schedule& s) {
                             s.units[g1].status[h - 1] = 0;
                             recompute_flags(s, bundled);
                           }});
    }
    for (int h : {2, 12}) {
      mutations.push_back({"switch G2 on in hour " + std::to_string(h), [=](Schedule& s) {
                             s.units[g2].status[h - 1] = 1;
                             recompute_flags(s, bundled);
                           }});
    }
    mutations.push_back({"switch G6 off in hour 18", [=](Schedule& s) {
                           s.units[g6].status[17] = 0;
                           recompute_flags(s, bundled);
                         }});
    mutations.push_back({"switch G8 on in hour 5", [=](Schedule& s) {
                           s.units[g8].status[4] = 1;
                           recompute_flags(s, bundled);
                         }});
    for (int h : {3, 10, 20}) {
      mutations.push_back({"bump G1 by 25 kW in hour " + std::to_string(h),
                           [=](Schedule& s) { s.units[g1].power[h - 1] += 25.0; }});
    }
    mutations.push_back({"bump G6 by 10 kW in hour 9", [=](Schedule& s) { s.units[g6].power[8] += 10.0; }});
    mutations.push_back({"cut G6 by 5 kW in hour 15", [=](Schedule& s) { s.units[g6].power[14] -= 5.0; }});
    mutations.push_back({"bump the first tie by 40 kW in hour 11", [=](Schedule& s) { s.ties[0].flow[10] += 40.0; }});
    mutations.push_back({"reverse-bump the last tie by 15 kW in hour 22",
                         [=](Schedule& s) { s.ties.back().flow[21] -= 15.0; }});
    mutations.push_back({"raise storage SOC by 50 kWh in hour 6",
                         [=](Schedule& s) { s.storages[0].soc[5] += 50.0; }});
    mutations.push_back({"storage discharge of 20 kW in hour 4 without SOC change",
                         [=](Schedule& s) { s.storages[0].discharge[3] += 20.0; }});
    mutations.push_back({"move L1 energy from hour 12 to hour 16", [=](Schedule& s) {
                           const int l1 = [&] {
                             for (std::size_t k = 0; k < s.loads.size(); ++k)
                               if (s.loads[k].id == "L1") return static_cast<int>(k);
                             return 0;
                           }();
                           s.loads[l1].served[15] += s.loads[l1].served[11];
                           s.loads[l1].served[11] = 0.0;
                         }});
    mutations.push_back({"G1 output over its maximum in hour 8",
                         [=](Schedule& s) { s.units[g1].power[7] = bundled.ders[g1].p_max + 1.0; }});
    mutations.push_back({"wind output over its forecast in hour 14", [=](Schedule& s) {
                           const int w = index_of_unit(bundled, "G4");
                           s.units[w].power[13] = base_inputs.der_available[w][13] + 30.0;
                         }});

    int caught = 0;
    std::string missed;
    for (const auto& mut : mutations) {
      auto s = base;
      mut.apply(s);
      if (!validate_schedule(s, bundled, base_inputs).empty()) {
        ++caught;
      } else if (missed.empty()) {
        missed = mut.name;
      }
    }
    const bool ok = !audit_pool.empty() && clean == audit_pool.size() && mutations.size() == 20 &&
                    caught == 20;
    record(11, ok,
           std::to_string(clean) + "/" + std::to_string(audit_pool.size()) +
               " OPTIMAL schedules with zero violations" + (first_bad.empty() ? "" : " (first bad: " + first_bad + ")") +
               "; " + std::to_string(caught) + "/" + std::to_string(mutations.size()) + " mutations caught" +
               (missed.empty() ? "" : " (missed: " + missed + ")"));
  });

  fs::remove_all(sweep_dir);

  int failed = 0;
  for (int n = 1; n <= 12; ++n) {
    const auto it = lines.find(n);
    const bool pass = it != lines.end() && it->second.pass;
    if (!pass) ++failed;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << std::setw(2) << n << " " << kTitles[n] << ": "
              << (it != lines.end() ? it->second.detail : "not evaluated") << "\n";
  }
  std::cout << (failed == 0 ? "ALL 12 CRITERIA PASS" : std::to_string(failed) + " CRITERIA FAIL") << std::endl;
  return failed == 0 && internal_errors == 0 ? 0 : 1;
}
