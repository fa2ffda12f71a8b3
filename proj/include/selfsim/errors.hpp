#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace selfsim {

enum class ErrorKind {
  Domain,
  Range,
  Internal,
  Format,
  DimensionMismatch,
  Config,
  Io,
  Solver,
  NonSolenoidalInput,
  CapExceeded,
  IndefiniteSystem,
  LinearStagnation,
  InterpolationOutOfRange,
  UncoveredNodes,
  NonIntegrable,
  NonConvergence,
  SonicEncroachment,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "DomainError";
    case ErrorKind::Range: return "RangeError";
    case ErrorKind::Internal: return "InternalError";
    case ErrorKind::Format: return "FormatError";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Io: return "IOError";
    case ErrorKind::Solver: return "SolverError";
    case ErrorKind::NonSolenoidalInput: return "NonSolenoidalInput";
    case ErrorKind::CapExceeded: return "CapExceeded";
    case ErrorKind::IndefiniteSystem: return "IndefiniteSystem";
    case ErrorKind::LinearStagnation: return "LinearStagnation";
    case ErrorKind::InterpolationOutOfRange: return "InterpolationOutOfRange";
    case ErrorKind::UncoveredNodes: return "UncoveredNodes";
    case ErrorKind::NonIntegrable: return "NonIntegrable";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::SonicEncroachment: return "SonicEncroachment";
  }
  return "Error";
}

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace selfsim
