#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace nbody {

enum class ErrorKind {
  NonPositiveMass,
  FewerThanTwoBodies,
  NonFiniteState,
  NonPositiveG,
  OriginSingularity,
  IndexOutOfRange,
  DomainError,
  BranchPointSingularity,
  ConvergenceFailure,
  NonPositiveB,
  NonPositiveX0,
  LnDomainError,
  InitialConditionOffBranch,
  WArgOutOfDomain,
  CollisionDetected,
  MaxStepsExceeded,
  RadicandNegative,
  ToleranceNotMet,
  ParseError,
  ValidationError,
  IoError,
};

constexpr const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonPositiveMass: return "NonPositiveMass";
    case ErrorKind::FewerThanTwoBodies: return "FewerThanTwoBodies";
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::NonPositiveG: return "NonPositiveG";
    case ErrorKind::OriginSingularity: return "OriginSingularity";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::BranchPointSingularity: return "BranchPointSingularity";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::NonPositiveB: return "NonPositiveB";
    case ErrorKind::NonPositiveX0: return "NonPositiveX0";
    case ErrorKind::LnDomainError: return "LnDomainError";
    case ErrorKind::InitialConditionOffBranch: return "InitialConditionOffBranch";
    case ErrorKind::WArgOutOfDomain: return "WArgOutOfDomain";
    case ErrorKind::CollisionDetected: return "CollisionDetected";
    case ErrorKind::MaxStepsExceeded: return "MaxStepsExceeded";
    case ErrorKind::RadicandNegative: return "RadicandNegative";
    case ErrorKind::ToleranceNotMet: return "ToleranceNotMet";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

// Single exception type for the library. `kind` is the stable, machine-readable
// part; the message is for humans. Optional context is filled where known.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  std::optional<std::size_t> body_index;
  std::optional<double> time;

  Error& with_body(std::size_t k) {
    body_index = k;
    return *this;
  }
  Error& at_time(double t) {
    time = t;
    return *this;
  }

 private:
  ErrorKind kind_;
};

}  // namespace nbody
