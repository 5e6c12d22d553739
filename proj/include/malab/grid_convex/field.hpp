#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "malab/grid_convex/domain.hpp"
#include "malab/grid_convex/grid.hpp"

namespace malab {

/// Node values of a convex function over a domain.
///
/// Solved fields carry u = 0 at boundary nodes and are only meaningful inside the
/// domain; second differences that leave the domain are taken against the boundary
/// crossing. Extended fields (analytic samples) hold valid values at every grid node,
/// so stencils may reach past the domain boundary.
struct ConvexField {
  Grid grid;
  DomainSpec domain;
  std::vector<double> values;
  std::vector<std::uint8_t> interior;
  bool extended = false;

  double operator[](std::size_t i) const { return values[i]; }
  std::size_t interior_count() const;

  /// Zero-initialised Dirichlet field on `grid`.
  static ConvexField dirichlet(const Grid& grid, const DomainSpec& domain);
  /// Samples fn at every node; the result is an extended field.
  static ConvexField sample(const Grid& grid, const DomainSpec& domain,
                            const std::function<double(const Vec&)>& fn);
};

/// Nodes closer than this fraction of a cell to the boundary count as boundary nodes.
inline constexpr double kBoundaryNodeFraction = 1e-3;

/// Approximation of v^T D^2u v at a node for an integer offset v (in cells):
/// w_center * u(x) + w_plus * u(plus) + w_minus * u(minus). A missing neighbor
/// stands for a boundary crossing where u = 0.
struct DirectionalStencil {
  std::optional<std::size_t> plus;
  std::optional<std::size_t> minus;
  double w_center = 0.0;
  double w_plus = 0.0;
  double w_minus = 0.0;
  bool boundary = false;  // nonuniform or one-sided formula was used
  bool ok = true;

  double apply(const std::vector<double>& u, std::size_t node) const;
};

DirectionalStencil directional_stencil(const ConvexField& u, std::size_t node, const Index3& v);

/// Packed symmetric Hessians: (xx, xy, yy) in 2D, (xx, xy, xz, yy, yz, zz) in 3D.
struct HessianField {
  Grid grid;
  std::vector<double> entries;
  std::vector<double> norm;
  std::vector<std::uint8_t> valid;
  std::vector<std::uint8_t> flagged;

  int packed_size() const { return grid.dim() == 2 ? 3 : 6; }
  Mat matrix(std::size_t i) const;
  /// Interior node whose Hessian used only centred differences.
  bool usable(std::size_t i) const { return valid[i] && !flagged[i]; }
};

/// Largest absolute eigenvalue of a symmetric matrix.
double operator_norm(const Mat& h);

/// Axis second differences on the diagonal; u_ab = (D_{e_a+e_b} - D_{e_a-e_b}) / 4.
/// Throws InsufficientStencil when no interior node has a complete stencil.
HessianField discrete_hessian(const ConvexField& u);

struct ConvexityViolation {
  std::size_t node;
  Index3 direction;
  double difference;
};

/// Nodes where an undivided second difference along an axis or diagonal direction
/// falls below -tol. tol < 0 selects the default 1e-8 * |u|_inf.
std::vector<ConvexityViolation> check_convexity(const ConvexField& u, double tol = -1.0);

struct InteriorLevel {
  double sup_norm = 0.0;
  std::vector<std::uint8_t> mask;  // {u < -sup_norm / 2}
};

/// Throws PositiveInteriorValue when u > 0 somewhere inside.
InteriorLevel sup_norm_and_interior(const ConvexField& u);

/// Stencil directions used by the convexity check.
std::vector<Index3> convexity_directions(int dim);

void write_field(const std::string& path, const ConvexField& u);
ConvexField read_field(const std::string& path);

}  // namespace malab
