#include "coopsense/core.hpp"

namespace coopsense {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ZeroRange: return "ZeroRange";
    case ErrorCode::InvalidAngle: return "InvalidAngle";
    case ErrorCode::NonPositiveInput: return "NonPositiveInput";
    case ErrorCode::NonPositiveNoise: return "NonPositiveNoise";
    case ErrorCode::InsufficientPeaks: return "InsufficientPeaks";
    case ErrorCode::SingularGeometry: return "SingularGeometry";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::PlacementFailure: return "PlacementFailure";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace coopsense
