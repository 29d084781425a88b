#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fpl {

enum class ErrorKind {
  NonHermitianInput,
  NonUnitaryInput,
  InvalidModel,
  InvalidGrid,
  OutOfRangeTime,
  GapClosed,
  BranchCutHit,
  NonEquatorialState,
  ChiralStructureViolated,
  NotConverged,
  SingularPlaquette,
  OpenCurve,
  LoopsTooClose,
  NotQuantized,
  MethodMismatch,
  NotSkewSymmetric,
  UnsupportedChern,
  GridMismatch,
  ZeroRow,
  AmbiguousSpectrum,
  VersionMismatch,
  IdMismatch,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so
/// callers (and the CLI exit-code mapping) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fpl
