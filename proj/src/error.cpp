#include "tpg/error.hpp"

namespace tpg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::RuleParse: return "RuleParse";
    case ErrorCode::UnknownPreset: return "UnknownPreset";
    case ErrorCode::MissingParam: return "MissingParam";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::NonFiniteFlux: return "NonFiniteFlux";
    case ErrorCode::NonFiniteRhs: return "NonFiniteRhs";
    case ErrorCode::LinearSolveDiverged: return "LinearSolveDiverged";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::PositivityBreached: return "PositivityBreached";
    case ErrorCode::NoRootInBracket: return "NoRootInBracket";
    case ErrorCode::WindowTooShort: return "WindowTooShort";
    case ErrorCode::NonPositiveAmplitude: return "NonPositiveAmplitude";
    case ErrorCode::Config: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, std::string detail)
    : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
      code_(code),
      detail_(std::move(detail)) {}

}  // namespace tpg
