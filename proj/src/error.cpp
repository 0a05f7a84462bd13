#include "robustbench/error.hpp"

namespace robustbench {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::InvalidBounds: return "InvalidBounds";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::AlreadyAdversarial: return "AlreadyAdversarial";
    case ErrorCode::InvalidBracket: return "InvalidBracket";
    case ErrorCode::GradientZero: return "GradientZero";
    case ErrorCode::GradientUnavailable: return "GradientUnavailable";
    case ErrorCode::AttackFailed: return "AttackFailed";
    case ErrorCode::DegenerateBoundary: return "DegenerateBoundary";
    case ErrorCode::NotSpatialInput: return "NotSpatialInput";
    case ErrorCode::StartingPointNotFound: return "StartingPointNotFound";
    case ErrorCode::InputNotInTable: return "InputNotInTable";
    case ErrorCode::MagicMismatch: return "MagicMismatch";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace robustbench
