#include "gffhom/error.hpp"

namespace gffhom {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyShell: return "EmptyShell";
    case ErrorCode::NonpositiveStep: return "NonpositiveStep";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::NegativeTime: return "NegativeTime";
    case ErrorCode::MismatchedIncrement: return "MismatchedIncrement";
    case ErrorCode::NonfiniteField: return "NonfiniteField";
    case ErrorCode::GradientUnavailable: return "GradientUnavailable";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::EmptyTrajectory: return "EmptyTrajectory";
    case ErrorCode::PathFailure: return "PathFailure";
  }
  return "Unknown";
}

}  // namespace gffhom
