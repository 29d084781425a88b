#include "fpl/error.hpp"

namespace fpl {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NonHermitianInput: return "NonHermitianInput";
    case ErrorKind::NonUnitaryInput: return "NonUnitaryInput";
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::InvalidGrid: return "InvalidGrid";
    case ErrorKind::OutOfRangeTime: return "OutOfRangeTime";
    case ErrorKind::GapClosed: return "GapClosed";
    case ErrorKind::BranchCutHit: return "BranchCutHit";
    case ErrorKind::NonEquatorialState: return "NonEquatorialState";
    case ErrorKind::ChiralStructureViolated: return "ChiralStructureViolated";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::SingularPlaquette: return "SingularPlaquette";
    case ErrorKind::OpenCurve: return "OpenCurve";
    case ErrorKind::LoopsTooClose: return "LoopsTooClose";
    case ErrorKind::NotQuantized: return "NotQuantized";
    case ErrorKind::MethodMismatch: return "MethodMismatch";
    case ErrorKind::NotSkewSymmetric: return "NotSkewSymmetric";
    case ErrorKind::UnsupportedChern: return "UnsupportedChern";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::ZeroRow: return "ZeroRow";
    case ErrorKind::AmbiguousSpectrum: return "AmbiguousSpectrum";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::IdMismatch: return "IdMismatch";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace fpl
