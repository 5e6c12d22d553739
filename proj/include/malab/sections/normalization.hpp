#pragma once

#include <vector>

#include "malab/grid_convex/field.hpp"
#include "malab/sections/section.hpp"

namespace malab {

enum class NormalizationMethod {
  John,     // minimum-volume ellipsoid around the section boundary
  Inertia,  // second moments of the masked nodes
};

/// Unit-determinant A with B(r_in) <= A(S_h - x0) <= B(r_out).
struct Normalization {
  Mat A;
  Vec ellipsoid_center;
  double r_in = 0.0;
  double r_out = 0.0;
  double sigma = 0.0;  // min(r_in / sqrt(h), sqrt(h) / r_out)
  double alpha = 0.0;  // |A|^2
  NormalizationMethod method = NormalizationMethod::John;
};

inline constexpr double kSectionEllipsoidTol = 1e-3;

/// Throws DegenerateSection when the section does not span the plane.
Normalization john_normalize(const Section& section,
                             NormalizationMethod method = NormalizationMethod::John);

struct SizeSample {
  double height = 0.0;
  double alpha = 0.0;
  double sigma = 0.0;
  double hessian_norm = 0.0;  // |D^2u(x0)| from the discrete Hessian
  double ratio = 0.0;         // alpha / hessian_norm
};

/// Normalized size alpha(S_h(x0)) for each height; heights below resolution are skipped.
std::vector<SizeSample> normalized_size_curve(const ConvexField& u, std::size_t center,
                                              const std::vector<double>& heights,
                                              NormalizationMethod method = NormalizationMethod::John);

/// u~(x~) = h^{-1} (u(x) - u(x0) - p . (x - x0)) with x = x0 + sqrt(h) A^{-1} x~.
struct RescaledField {
  ConvexField field;  // extended; NaN where no interpolation stencil exists
  Mat A;
  Vec x0;
  Vec slope;
  double base_value = 0.0;
  double height = 0.0;
  std::vector<std::uint8_t> in_section;  // rescaled nodes with u~ < 1

  Vec to_rescaled(const Vec& x) const;
  Vec to_physical(const Vec& xt) const;
  /// Slope of the transported affine function for a physical slope p.
  Vec transport_slope(const Vec& p) const;
};

struct RescaleOptions {
  double spacing_factor = 1.0;  // rescaled spacing = factor * s / sqrt(h)
  double margin = 0.15;         // relative padding of the rescaled box
};

/// Keys cubic interpolation (bilinear next to missing data). Throws
/// ResamplingOutOfDomain when a node of the rescaled section has no stencil.
RescaledField rescale_solution(const ConvexField& u, const Section& section,
                               const Normalization& normalization,
                               const RescaleOptions& options = {});

/// Interpolated value at a physical point; false when no stencil is available.
bool interpolate_field(const ConvexField& u, const Vec& x, double& value);

}  // namespace malab
