#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tpg/model.hpp"
#include "tpg/stepper.hpp"

namespace YAML {
class Emitter;
class Node;
}  // namespace YAML

namespace tpg {

// A run described by a YAML document with sections model, grid, init,
// stepper, outputs and diagnostics. Numeric entries may be written as
// expressions of constants ("pi", "2*pi").
struct RunConfig {
  std::string preset;
  ParamMap params;
  RuleTexts rules;

  GridSpec grid;

  // Per-component constants. An empty optional means "steady": the u value of
  // the trivial steady state, which is only meaningful for u.
  std::array<std::optional<double>, 3> init_constant{0.0, 0.0, 0.0};
  std::vector<Perturbation> perturbations;

  StepperConfig stepper;

  double output_interval = 0.5;
  double snapshot_interval = 0.0;  // 0: final state only
  bool heatmaps = true;

  double regime_window = 0.0;  // 0: a tenth of t_end
  Box box;
  int hypothesis_samples = 4096;

  ModelSpec build_model() const;  // throws like preset()
  State initial_state(const ModelSpec& m) const;
};

// Throws Error{Config} with the offending key. A document with a top-level
// `config` key (a run manifest) is read from that key.
RunConfig parse_config(const YAML::Node& doc);
RunConfig load_config(const std::string& path);

// Emits a map that parse_config() reads back to an identical RunConfig.
void emit_config(YAML::Emitter& out, const RunConfig& cfg);

// Sets a parameter by sweep-axis name: a model parameter, or init.u / init.v /
// init.w for the initial constants. Throws Error{Config} for unknown names.
void set_axis_value(RunConfig& cfg, std::string_view name, double value);

// Applies TPG_STEPPER_<KEY> environment overrides (for example
// TPG_STEPPER_T_END=5).
void apply_env_overrides(RunConfig& cfg);

// Evaluates a constant expression such as "pi/2". Throws Error{Config}.
double parse_number(std::string_view text, std::string_view key);

}  // namespace tpg
