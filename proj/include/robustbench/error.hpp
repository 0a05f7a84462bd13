#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace robustbench {

enum class ErrorCode {
  ShapeMismatch,
  NonFinite,
  InvalidBounds,
  LabelOutOfRange,
  InvalidParameter,
  ParseError,
  DimensionMismatch,
  AlreadyAdversarial,
  InvalidBracket,
  GradientZero,
  GradientUnavailable,
  AttackFailed,
  DegenerateBoundary,
  NotSpatialInput,
  StartingPointNotFound,
  InputNotInTable,
  MagicMismatch,
  CountMismatch,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (the benchmark in particular) can record it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace robustbench
