#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mgsched/scheduler/scheduler.hpp"

namespace mgsched::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitInfeasible = 2,
  kExitInvalidInput = 3,
  kExitNodeLimit = 4,
};

int exit_code(scheduler::RunStatus status);

enum class Mode { Deterministic, Unscented };

struct RunConfig {
  std::string case_path;
  int case_flag = 1;
  Mode mode = Mode::Deterministic;
  double w0 = 1.0 / 3.0;
  double sigma_load = 0.05;
  double sigma_wind = 0.05;
  double sigma_price = 0.05;
  bool hourly_factors = false;
  std::string out_dir = ".";
  bool write_csv = true;
  bool write_json = true;
  std::uint64_t seed = 1;
  long mc_samples = 0;
  long node_limit = 200000;
  int threads = 0;
  std::string dump_lp;
  int verbosity = 0;
};

/// Rejects configurations that cannot run (bad flag values, missing case
/// file). Returns the problems found; empty when the config is usable.
std::vector<std::string> check_config(const RunConfig& config);

/// Writes schedule.csv and cost.json (plus stats.json in unscented mode)
/// into the output directory. Nothing is written when the input is invalid.
int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Runs Case 1 and Case 2 in both modes (config.case_flag and mode are
/// ignored); writes compare.csv (2x2 table with
/// deltas), compare_long.csv (plot-ready) and compare.json, plus
/// case<k>_<mode>_schedule.csv / _cost.json for every cell that produced a
/// schedule (the mean-point schedule for the stochastic mode) and
/// case<k>_stochastic_stats.json.
int cmd_compare(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Prints every invariant violation of the case file.
int cmd_validate(const std::string& case_path, std::ostream& out, std::ostream& err);

/// Full command line: `mgsched {run|compare|validate} ...`.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

struct CompareCell {
  int case_flag = 1;
  Mode mode = Mode::Deterministic;
  std::string status;
  std::optional<double> cost;  // empty when the cell failed
  std::optional<double> cost_std;
};

struct CompareTable {
  std::vector<CompareCell> cells;  // case 1 det, case 1 ut, case 2 det, case 2 ut
  [[nodiscard]] const CompareCell* find(int case_flag, Mode mode) const;
};

std::string compare_csv(const CompareTable& table);
std::string compare_long_csv(const CompareTable& table);
std::string compare_json(const CompareTable& table);
/// Inverse of compare_long_csv; throws std::invalid_argument when malformed.
CompareTable parse_compare_long_csv(const std::string& text);
/// Inverse of compare_csv (both modes of each case row).
CompareTable parse_compare_csv(const std::string& text);
CompareTable parse_compare_json(const std::string& text);

}  // namespace mgsched::cli
