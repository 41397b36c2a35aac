#pragma once

#include <stdexcept>
#include <string>

namespace gffhom {

enum class ErrorCode {
  EmptyShell,
  NonpositiveStep,
  InvalidArgument,
  GridMismatch,
  NegativeTime,
  MismatchedIncrement,
  NonfiniteField,
  GradientUnavailable,
  UnknownKind,
  InsufficientSamples,
  QuadratureFailure,
  ConfigError,
  EmptyTrajectory,
  PathFailure,
};

const char* to_string(ErrorCode code);

class SimError : public std::runtime_error {
 public:
  SimError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace gffhom
