#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cbs {

/// Failure categories raised by the numerical modules. The CLI maps every
/// kind to exit code 3 and prints `name()` on stderr.
enum class ErrorKind {
  NonFinite,
  ConvergenceFailure,
  InvalidGeometry,
  OutOfDomain,
  EmptyBranch,
  OutOfGap,
  NoGapMode,
  RayleighSingular,
  SingularSLP,
  TruncationTooSmall,
  NoConvergence,
  Stagnation,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::InvalidGeometry: return "InvalidGeometry";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::EmptyBranch: return "EmptyBranch";
    case ErrorKind::OutOfGap: return "OutOfGap";
    case ErrorKind::NoGapMode: return "NoGapMode";
    case ErrorKind::RayleighSingular: return "RayleighSingular";
    case ErrorKind::SingularSLP: return "SingularSLP";
    case ErrorKind::TruncationTooSmall: return "TruncationTooSmall";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::Stagnation: return "Stagnation";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class NumericalError : public std::runtime_error {
 public:
  NumericalError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return to_string(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw NumericalError(kind, what);
}

}  // namespace cbs
