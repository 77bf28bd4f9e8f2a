#include "mgsched/cli/app.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "mgsched/model/case_io.hpp"
#include "mgsched/model/forecasts.hpp"
#include "mgsched/scheduler/report.hpp"
#include "mgsched/solver/solve.hpp"
#include "mgsched/stochastic/stochastic.hpp"

namespace mgsched::cli {

namespace fs = std::filesystem;
using scheduler::RunStatus;

namespace {

std::string number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, end);
}

std::optional<double> parse_optional(const std::string& field) {
  if (field.empty()) return std::nullopt;
  double v = 0.0;
  auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || end != field.data() + field.size()) {
    throw std::invalid_argument("bad number '" + field + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

const char* mode_name(Mode m) { return m == Mode::Deterministic ? "deterministic" : "stochastic"; }

Mode parse_mode(const std::string& s) {
  if (s == "det" || s == "deterministic") return Mode::Deterministic;
  if (s == "ut" || s == "stochastic") return Mode::Unscented;
  throw std::invalid_argument("unknown mode '" + s + "'");
}

bool usable(RunStatus s) { return s == RunStatus::Optimal || s == RunStatus::NodeLimit; }

int severity(int code) {
  switch (code) {
    case kExitOk: return 0;
    case kExitNodeLimit: return 1;
    case kExitInfeasible: return 2;
    default: return 3;
  }
}

// Writes through a temporary so a crash never leaves a truncated artifact.
void write_file(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

stochastic::UncertainInput uncertain_input(const RunConfig& c, int horizon) {
  return c.hourly_factors
             ? stochastic::hourly_factor_input(horizon, c.sigma_load, c.sigma_wind, c.sigma_price, c.w0)
             : stochastic::three_factor_input(c.sigma_load, c.sigma_wind, c.sigma_price, c.w0);
}

scheduler::RunOptions run_options(const RunConfig& c) {
  scheduler::RunOptions o;
  o.milp.node_limit = c.node_limit;
  return o;
}

stochastic::StochasticOptions stochastic_options(const RunConfig& c) {
  stochastic::StochasticOptions o;
  o.run = run_options(c);
  o.threads = c.threads;
  o.per_microgrid = true;
  return o;
}

scheduler::CaseFlag flag_of(int n) {
  return n == 2 ? scheduler::CaseFlag::case2() : scheduler::CaseFlag::case1();
}

/// Loads the case, mapping every failure to a message; empty optional on error.
std::optional<GridModel> load(const std::string& path, std::ostream& err) {
  try {
    return load_case(path);
  } catch (const CaseError& e) {
    err << "error: " << e.what() << "\n";
    for (const auto& i : e.issues()) err << "  " << i.path << ": " << i.message << "\n";
  }
  return std::nullopt;
}

void dump_lp(const GridModel& m, scheduler::CaseFlag flag, const std::string& path) {
  const auto inputs = scale_forecasts(m);
  auto built = scheduler::build_problem(m, flag, inputs);
  if (flag.network_constraints) {
    scheduler::link_network_constraints(m, inputs, built, scheduler::flat_estimate(m));
  }
  std::ostringstream out;
  solver::write_lp_format(built.problem, out);
  write_file(path, out.str());
}

void report_run(const scheduler::RunResult& r, std::ostream& out, std::ostream& err,
                const std::string& label) {
  out << label << ": " << scheduler::to_string(r.status);
  if (usable(r.status)) out << " objective " << number(r.objective);
  if (r.status == RunStatus::NodeLimit) out << " gap " << number(r.gap);
  out << "\n";
  if (!r.hint.empty()) err << label << ": " << r.hint << "\n";
  if (r.flag.network_constraints && !r.linearization_converged) {
    err << label << ": warning: voltage linearization did not converge after "
        << r.linearizations << " rounds\n";
  }
}

void write_schedule_outputs(const RunConfig& c, const scheduler::RunResult& r, Mode mode,
                            const std::string& prefix = "") {
  auto schedule = r.schedule;
  schedule.mode = mode_name(mode);
  const fs::path dir(c.out_dir);
  if (c.write_csv) write_file(dir / (prefix + "schedule.csv"), scheduler::schedule_csv(schedule));
  if (c.write_json) write_file(dir / (prefix + "cost.json"), scheduler::cost_report_json(r.cost));
}

struct CellRun {
  CompareCell cell;
  int code = kExitInternal;
};

CellRun run_cell(const GridModel& m, const RunConfig& c, int case_flag, Mode mode,
                 std::ostream& out, std::ostream& err) {
  CellRun result;
  result.cell.case_flag = case_flag;
  result.cell.mode = mode;
  const std::string label = "case " + std::to_string(case_flag) + " " + mode_name(mode);
  const std::string prefix = "case" + std::to_string(case_flag) + "_" + mode_name(mode) + "_";
  if (mode == Mode::Deterministic) {
    const auto r = scheduler::run_deterministic(m, flag_of(case_flag), run_options(c));
    report_run(r, out, err, label);
    result.cell.status = scheduler::to_string(r.status);
    if (usable(r.status)) {
      result.cell.cost = r.objective;
      write_schedule_outputs(c, r, mode, prefix);
    }
    result.code = exit_code(r.status);
  } else {
    const auto input = uncertain_input(c, m.horizon());
    const auto r = stochastic::run_stochastic(m, flag_of(case_flag), input, stochastic_options(c));
    if (r.points.front().feasible()) write_schedule_outputs(c, r.points.front().run, mode, prefix);
    if (c.write_json) {
      write_file(fs::path(c.out_dir) / (prefix + "stats.json"), stochastic::stats_json(r, input));
    }
    result.cell.status = scheduler::to_string(r.status);
    out << label << ": " << result.cell.status;
    if (r.stats) {
      result.cell.cost = r.mean_cost();
      result.cell.cost_std = r.cost_std();
      out << " mean " << number(r.mean_cost()) << " std " << number(r.cost_std());
    }
    out << "\n";
    if (!r.message.empty()) err << label << ": " << r.message << "\n";
    result.code = exit_code(r.status);
  }
  return result;
}

}  // namespace

int exit_code(RunStatus status) {
  switch (status) {
    case RunStatus::Optimal: return kExitOk;
    case RunStatus::Infeasible: return kExitInfeasible;
    case RunStatus::NodeLimit: return kExitNodeLimit;
    case RunStatus::Error: return kExitInternal;
  }
  return kExitInternal;
}

std::vector<std::string> check_config(const RunConfig& c) {
  std::vector<std::string> problems;
  std::error_code ec;
  if (c.case_path.empty()) {
    problems.push_back("no case file given");
  } else if (!fs::is_regular_file(c.case_path, ec)) {
    problems.push_back("case file '" + c.case_path + "' does not exist");
  }
  if (c.case_flag != 1 && c.case_flag != 2) problems.push_back("--case must be 1 or 2");
  if (!(c.w0 >= 0.0 && c.w0 < 1.0)) problems.push_back("--w0 must lie in [0, 1)");
  const std::pair<const char*, double> sigmas[] = {
      {"--sigma-load", c.sigma_load}, {"--sigma-wind", c.sigma_wind}, {"--sigma-price", c.sigma_price}};
  for (const auto& [name, v] : sigmas) {
    if (!std::isfinite(v) || v < 0.0) problems.push_back(std::string(name) + " must be >= 0");
  }
  if (c.mc_samples < 0) problems.push_back("--mc-samples must be >= 0");
  if (c.mc_samples > 0 && c.mode != Mode::Unscented) {
    problems.push_back("--mc-samples needs --mode ut");
  }
  if (c.node_limit <= 0) problems.push_back("--node-limit must be positive");
  if (c.threads < 0) problems.push_back("--threads must be >= 0");
  if (!c.write_csv && !c.write_json) problems.push_back("--format selects no output");
  if (fs::exists(c.out_dir, ec) && !fs::is_directory(c.out_dir, ec)) {
    problems.push_back("output path '" + c.out_dir + "' is not a directory");
  }
  return problems;
}

int cmd_run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (const auto problems = check_config(c); !problems.empty()) {
    for (const auto& p : problems) err << "error: " << p << "\n";
    return kExitInvalidInput;
  }
  const auto model = load(c.case_path, err);
  if (!model) return kExitInvalidInput;
  std::optional<stochastic::UncertainInput> input;
  if (c.mode == Mode::Unscented) {
    try {
      input = uncertain_input(c, model->horizon());
      stochastic::sigma_points(*input);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitInvalidInput;
    }
  }

  try {
    fs::create_directories(c.out_dir);
    const auto flag = flag_of(c.case_flag);
    if (!c.dump_lp.empty()) dump_lp(*model, flag, c.dump_lp);
    const std::string label = "case " + std::to_string(c.case_flag) + " " + mode_name(c.mode);

    if (c.mode == Mode::Deterministic) {
      const auto r = scheduler::run_deterministic(*model, flag, run_options(c));
      report_run(r, out, err, label);
      if (usable(r.status)) write_schedule_outputs(c, r, c.mode);
      return exit_code(r.status);
    }

    const auto opts = stochastic_options(c);
    const auto r = stochastic::run_stochastic(*model, flag, *input, opts);
    if (c.verbosity > 0) {
      for (std::size_t i = 0; i < r.points.size(); ++i) {
        const auto& p = r.points[i];
        err << "sigma point " << i << ": " << scheduler::to_string(p.run.status);
        if (p.feasible()) err << " cost " << number(p.run.cost.total);
        err << "\n";
      }
    }
    std::optional<stochastic::MonteCarloResult> mc;
    if (c.mc_samples > 0) {
      mc = stochastic::monte_carlo_reference(*model, flag, *input, c.mc_samples, c.seed, opts);
      out << "monte carlo: mean " << number(mc->stats.mean(0)) << " standard error "
          << number(mc->standard_error(0)) << " excluded " << mc->excluded << "\n";
    }
    out << label << ": " << scheduler::to_string(r.status);
    if (r.stats) out << " mean " << number(r.mean_cost()) << " std " << number(r.cost_std());
    out << "\n";
    if (!r.message.empty()) err << label << ": " << r.message << "\n";

    // The schedule reported for the stochastic mode is the one at the mean point.
    const auto& centre = r.points.front().run;
    if (centre.status == RunStatus::Optimal || centre.status == RunStatus::NodeLimit) {
      write_schedule_outputs(c, centre, c.mode);
    }
    if (c.write_json) {
      write_file(fs::path(c.out_dir) / "stats.json",
                 stochastic::stats_json(r, *input, mc ? &*mc : nullptr));
    }
    return exit_code(r.status);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}

int cmd_compare(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (const auto problems = check_config(c); !problems.empty()) {
    for (const auto& p : problems) err << "error: " << p << "\n";
    return kExitInvalidInput;
  }
  const auto model = load(c.case_path, err);
  if (!model) return kExitInvalidInput;
  try {
    stochastic::sigma_points(uncertain_input(c, model->horizon()));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  }

  try {
    fs::create_directories(c.out_dir);
    CompareTable table;
    int code = kExitOk;
    const auto start = std::chrono::steady_clock::now();
    for (int k : {1, 2}) {
      for (Mode mode : {Mode::Deterministic, Mode::Unscented}) {
        CellRun cell;
        try {
          cell = run_cell(*model, c, k, mode, out, err);
        } catch (const std::exception& e) {
          err << "case " << k << " " << mode_name(mode) << ": error: " << e.what() << "\n";
          cell.cell.case_flag = k;
          cell.cell.mode = mode;
          cell.cell.status = scheduler::to_string(RunStatus::Error);
          cell.code = kExitInternal;
        }
        if (severity(cell.code) > severity(code)) code = cell.code;
        table.cells.push_back(cell.cell);
      }
    }
    if (c.verbosity > 0) {
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
      err << "compare sweep took " << number(dt.count()) << " s\n";
    }
    if (c.write_csv) {
      write_file(fs::path(c.out_dir) / "compare.csv", compare_csv(table));
      write_file(fs::path(c.out_dir) / "compare_long.csv", compare_long_csv(table));
    }
    if (c.write_json) write_file(fs::path(c.out_dir) / "compare.json", compare_json(table));
    out << compare_csv(table);
    return code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}

int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
  try {
    load_case(path);
    out << "0 violations\n";
    return kExitOk;
  } catch (const CaseError& e) {
    if (e.kind() != CaseError::Kind::Validation) {
      err << "error: " << e.what() << "\n";
      return kExitInvalidInput;
    }
    for (const auto& i : e.issues()) out << i.path << ": " << i.message << "\n";
    out << e.issues().size() << (e.issues().size() == 1 ? " violation\n" : " violations\n");
    return kExitInvalidInput;
  }
}

const CompareCell* CompareTable::find(int case_flag, Mode mode) const {
  for (const auto& cell : cells) {
    if (cell.case_flag == case_flag && cell.mode == mode) return &cell;
  }
  return nullptr;
}

std::string compare_csv(const CompareTable& t) {
  std::string s =
      "case,deterministic,stochastic,stochastic_std,delta,delta_pct,"
      "deterministic_status,stochastic_status\n";
  for (int k : {1, 2}) {
    const auto* d = t.find(k, Mode::Deterministic);
    const auto* u = t.find(k, Mode::Unscented);
    if (!d && !u) continue;
    auto opt = [](const std::optional<double>& v) { return v ? number(*v) : std::string(); };
    const bool both = d && u && d->cost && u->cost;
    std::string delta, pct;
    if (both) {
      const double base = *d->cost;
      delta = number(*u->cost - base);
      if (base != 0.0) pct = number(100.0 * (*u->cost - base) / std::abs(base));
    }
    s += std::to_string(k) + "," + (d ? opt(d->cost) : "") + "," + (u ? opt(u->cost) : "") + "," +
         (u ? opt(u->cost_std) : "") + "," + delta + "," + pct + "," + (d ? d->status : "") + "," +
         (u ? u->status : "") + "\n";
  }
  return s;
}

std::string compare_long_csv(const CompareTable& t) {
  std::string s = "case,mode,status,cost,cost_std\n";
  for (const auto& c : t.cells) {
    s += std::to_string(c.case_flag) + "," + mode_name(c.mode) + "," + c.status + "," +
         (c.cost ? number(*c.cost) : "") + "," + (c.cost_std ? number(*c.cost_std) : "") + "\n";
  }
  return s;
}

std::string compare_json(const CompareTable& t) {
  nlohmann::ordered_json j;
  auto cells = nlohmann::ordered_json::array();
  for (const auto& c : t.cells) {
    nlohmann::ordered_json e;
    e["case"] = c.case_flag;
    e["mode"] = mode_name(c.mode);
    e["status"] = c.status;
    e["failed"] = !c.cost.has_value();
    e["cost"] = c.cost ? nlohmann::ordered_json(*c.cost) : nlohmann::ordered_json(nullptr);
    e["cost_std"] = c.cost_std ? nlohmann::ordered_json(*c.cost_std) : nlohmann::ordered_json(nullptr);
    cells.push_back(e);
  }
  j["cells"] = cells;
  // Stochastic minus deterministic per case, and Case 2 minus Case 1 per mode.
  auto diff = [](const CompareCell* a, const CompareCell* b) {
    return a && b && a->cost && b->cost ? nlohmann::ordered_json(*a->cost - *b->cost)
                                        : nlohmann::ordered_json(nullptr);
  };
  for (int k : {1, 2}) {
    j["stochastic_delta"]["case" + std::to_string(k)] =
        diff(t.find(k, Mode::Unscented), t.find(k, Mode::Deterministic));
  }
  for (Mode m : {Mode::Deterministic, Mode::Unscented}) {
    j["case_delta"][mode_name(m)] = diff(t.find(2, m), t.find(1, m));
  }
  return j.dump(2) + "\n";
}

CompareTable parse_compare_long_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines[0] != "case,mode,status,cost,cost_std") {
    throw std::invalid_argument("comparison table: unexpected header");
  }
  CompareTable t;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != 5) {
      throw std::invalid_argument("comparison table line " + std::to_string(i + 1) +
                                  ": expected 5 fields");
    }
    CompareCell c;
    if (f[0] != "1" && f[0] != "2") throw std::invalid_argument("comparison table: bad case '" + f[0] + "'");
    c.case_flag = f[0] == "1" ? 1 : 2;
    c.mode = parse_mode(f[1]);
    c.status = f[2];
    c.cost = parse_optional(f[3]);
    c.cost_std = parse_optional(f[4]);
    t.cells.push_back(c);
  }
  return t;
}

CompareTable parse_compare_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines[0] != "case,deterministic,stochastic,stochastic_std,delta,delta_pct,"
                                    "deterministic_status,stochastic_status") {
    throw std::invalid_argument("comparison table: unexpected header");
  }
  CompareTable t;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != 8 || (f[0] != "1" && f[0] != "2")) {
      throw std::invalid_argument("comparison table line " + std::to_string(i + 1) + " is malformed");
    }
    const int k = f[0] == "1" ? 1 : 2;
    t.cells.push_back({k, Mode::Deterministic, f[6], parse_optional(f[1]), std::nullopt});
    t.cells.push_back({k, Mode::Unscented, f[7], parse_optional(f[2]), parse_optional(f[3])});
  }
  return t;
}

CompareTable parse_compare_json(const std::string& text) {
  auto optional_number = [](const nlohmann::json& v) -> std::optional<double> {
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
  };
  try {
    const auto j = nlohmann::json::parse(text);
    CompareTable t;
    for (const auto& e : j.at("cells")) {
      t.cells.push_back({e.at("case").get<int>(), parse_mode(e.at("mode").get<std::string>()),
                         e.at("status").get<std::string>(), optional_number(e.at("cost")),
                         optional_number(e.at("cost_std"))});
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("comparison report: ") + e.what());
  }
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Day-ahead scheduling for interconnected microgrids"};
  app.require_subcommand(1);

  RunConfig config;
  std::string mode = "det";
  std::vector<std::string> formats = {"csv", "json"};

  auto add_common = [&](CLI::App* cmd, bool with_case_flag) {
    cmd->add_option("case_file", config.case_path, "Case file (JSON)")->required();
    if (with_case_flag) {
      cmd->add_option("--case", config.case_flag, "1: no network limits, 2: network enforced")
          ->check(CLI::IsMember({1, 2}));
      cmd->add_option("--mode", mode, "det or ut")
          ->check(CLI::IsMember({"det", "ut", "deterministic", "stochastic"}));
      cmd->add_option("--dump-lp", config.dump_lp, "Write the (first) optimization problem in LP format");
    }
    cmd->add_option("--w0", config.w0, "Weight of the mean sigma point");
    cmd->add_option("--sigma-load", config.sigma_load, "Load factor standard deviation (fraction)");
    cmd->add_option("--sigma-wind", config.sigma_wind, "Wind factor standard deviation (fraction)");
    cmd->add_option("--sigma-price", config.sigma_price, "Price factor standard deviation (fraction)");
    cmd->add_flag("--hourly-factors", config.hourly_factors, "One independent factor per quantity and hour");
    cmd->add_option("--out", config.out_dir, "Output directory");
    cmd->add_option("--format", formats, "Output formats: csv, json or both")
        ->delimiter(',')
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--seed", config.seed, "Monte Carlo seed");
    cmd->add_option("--mc-samples", config.mc_samples, "Monte Carlo reference samples (ut mode)");
    cmd->add_option("--node-limit", config.node_limit, "Branch-and-bound node limit");
    cmd->add_option("--threads", config.threads, "Sigma-point workers (0: all cores)");
    cmd->add_flag("-v,--verbose", config.verbosity, "More diagnostics");
  };

  auto* run = app.add_subcommand("run", "Schedule one case");
  add_common(run, true);
  auto* compare = app.add_subcommand("compare", "Both cases in both modes");
  add_common(compare, false);
  auto* validate = app.add_subcommand("validate", "Check a case file");
  std::string validate_path;
  validate->add_option("case_file", validate_path, "Case file (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInvalidInput;
  }

  config.mode = parse_mode(mode);
  config.write_csv = std::find(formats.begin(), formats.end(), "csv") != formats.end();
  config.write_json = std::find(formats.begin(), formats.end(), "json") != formats.end();
  try {
    if (*validate) return cmd_validate(validate_path, out, err);
    if (*compare) {
      config.mode = Mode::Unscented;  // both modes run; checks apply to the ut parameters
      return cmd_compare(config, out, err);
    }
    return cmd_run(config, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace mgsched::cli
