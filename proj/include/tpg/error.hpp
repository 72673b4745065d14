#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tpg {

enum class ErrorCode {
  InvalidGrid,
  RuleParse,
  UnknownPreset,
  MissingParam,
  InvalidModel,
  NonFiniteFlux,
  NonFiniteRhs,
  LinearSolveDiverged,
  NonFiniteState,
  PositivityBreached,
  NoRootInBracket,
  WindowTooShort,
  NonPositiveAmplitude,
  Config,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library. `detail` is a space separated list of
// key=value pairs so the CLI can forward it verbatim as a machine-parsable line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace tpg
