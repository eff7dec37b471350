#pragma once

#include <stdexcept>
#include <string>

namespace bmo {

enum class ErrorKind {
  DepthMismatch,
  DimensionMismatch,
  NegativeBound,
  DepthTooSmall,
  OutOfRange,
  NonIncreasingGauge,
  FlagMissing,
  HorizonTooSmall,
  Domain,
  Precondition,
  NormExceedsT,
  InfeasibleStart,
  NotEnoughLowPoints,
  Config,
  Cap,
  Parse,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DepthMismatch: return "depth-mismatch";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::NegativeBound: return "negative-bound";
    case ErrorKind::DepthTooSmall: return "depth-too-small";
    case ErrorKind::OutOfRange: return "out-of-range";
    case ErrorKind::NonIncreasingGauge: return "non-increasing-gauge";
    case ErrorKind::FlagMissing: return "flag-missing";
    case ErrorKind::HorizonTooSmall: return "horizon-too-small";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::NormExceedsT: return "norm-exceeds-t";
    case ErrorKind::InfeasibleStart: return "infeasible-start";
    case ErrorKind::NotEnoughLowPoints: return "not-enough-low-points";
    case ErrorKind::Config: return "config";
    case ErrorKind::Cap: return "cap";
    case ErrorKind::Parse: return "parse";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace bmo
