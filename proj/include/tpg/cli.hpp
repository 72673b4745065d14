#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "tpg/config.hpp"
#include "tpg/diagnostics.hpp"
#include "tpg/error.hpp"
#include "tpg/stepper.hpp"

namespace tpg {

// Process exit statuses of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitInvariant = 4;

int exit_code_for(ErrorCode code);

// Everything a finished run produced.
struct RunOutcome {
  RunResult result;
  HypothesisReport hypotheses;
  double ubar = std::numeric_limits<double>::quiet_NaN();
  double window = 0.0;
  std::string regime;  // a Regime name, or "unresolved" with regime_note set
  std::string regime_note;
  bool bounds_available = false;  // false when H3 fails
  MassBounds mass_bounds;
  BoundsReport bounds;
  std::vector<std::string> enforced_failures;  // bounds failures that set exit status 4
};

// Runs cfg and writes diagnostics.csv, snapshots/, heatmaps and manifest.yaml
// into dir. Solver errors propagate as Error after the manifest records them.
RunOutcome execute_run(const RunConfig& cfg, const std::string& dir);

struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

// NAME=START:STOP:COUNT or NAME=a,b,c. Throws Error{Config}, also for an
// empty range.
SweepAxis parse_axis(std::string_view spec);

int cmd_run(const std::string& config_path, const std::string& out_dir, std::ostream& out, std::ostream& err);
int cmd_stability(const std::string& config_path, const std::string& out_dir, std::ostream& out, std::ostream& err);
int cmd_sweep(const std::string& config_path, const std::vector<std::string>& axes, const std::string& out_dir,
              int threads, std::ostream& out, std::ostream& err);
int cmd_presets(std::ostream& out);

}  // namespace tpg
