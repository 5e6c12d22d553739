#include "malab/error.hpp"

namespace malab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonConvexDomain: return "NonConvexDomain";
    case ErrorCode::NormalizationImpossible: return "NormalizationImpossible";
    case ErrorCode::InsufficientStencil: return "InsufficientStencil";
    case ErrorCode::PositiveInteriorValue: return "PositiveInteriorValue";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::DegenerateRhs: return "DegenerateRhs";
    case ErrorCode::ProfileBlowup: return "ProfileBlowup";
    case ErrorCode::PinchFailure: return "PinchFailure";
    case ErrorCode::InvalidExponent: return "InvalidExponent";
    case ErrorCode::EmptySection: return "EmptySection";
    case ErrorCode::DegenerateSection: return "DegenerateSection";
    case ErrorCode::ResamplingOutOfDomain: return "ResamplingOutOfDomain";
    case ErrorCode::NoPassingDelta: return "NoPassingDelta";
    case ErrorCode::CoverageGap: return "CoverageGap";
    case ErrorCode::NoPassingConstant: return "NoPassingConstant";
    case ErrorCode::RescaleMismatch: return "RescaleMismatch";
    case ErrorCode::SectionSearchFailure: return "SectionSearchFailure";
    case ErrorCode::InsufficientLevels: return "InsufficientLevels";
    case ErrorCode::LayerCakeMismatch: return "LayerCakeMismatch";
    case ErrorCode::PropertyViolated: return "PropertyViolated";
    case ErrorCode::ZeroMuMass: return "ZeroMuMass";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IncompatibleManifests: return "IncompatibleManifests";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Unsupported: return "Unsupported";
  }
  return "Unknown";
}

}  // namespace malab
