#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace malab {

enum class ErrorCode {
  // grid_convex
  NonConvexDomain,
  NormalizationImpossible,
  InsufficientStencil,
  PositiveInteriorValue,
  // ma_solver
  NonConvergence,
  DegenerateRhs,
  ProfileBlowup,
  PinchFailure,
  InvalidExponent,
  // sections
  EmptySection,
  DegenerateSection,
  ResamplingOutOfDomain,
  NoPassingDelta,
  CoverageGap,
  // regularity_lab
  NoPassingConstant,
  RescaleMismatch,
  SectionSearchFailure,
  InsufficientLevels,
  LayerCakeMismatch,
  // degenerate_mu
  PropertyViolated,
  ZeroMuMass,
  // cli_reports
  ConfigError,
  IncompatibleManifests,
  Io,
  Unsupported,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace malab
