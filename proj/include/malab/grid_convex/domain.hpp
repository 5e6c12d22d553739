#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "malab/grid_convex/grid.hpp"

namespace malab {

/// normal . x <= offset
struct Halfspace {
  Vec normal;
  double offset = 0.0;
};

enum class ShapeKind { Ball, Box, Polygon, Ellipsoid, Halfspaces };

/// User-facing description of a convex domain before validation.
struct ShapeDescriptor {
  ShapeKind kind = ShapeKind::Ball;
  int dim = 2;
  double radius = 1.0;           // Ball
  Vec half_widths;               // Box, centred at 0
  std::vector<Vec> vertices;     // Polygon (2D), any order
  Vec axes;                      // Ellipsoid semi-axes
  Mat rotation;                  // Ellipsoid orientation (columns = axis directions); empty = I
  Vec centre;                    // Ellipsoid centre; empty = 0
  std::vector<Halfspace> halfspaces;

  static ShapeDescriptor ball(int dim, double radius = 1.0);
  static ShapeDescriptor box(const Vec& half_widths);
  static ShapeDescriptor square(double half_width = 1.0);
  static ShapeDescriptor polygon(std::vector<Vec> vertices);
  static ShapeDescriptor ellipsoid(const Vec& axes, const Mat& rotation = Mat());
};

/// A validated convex domain satisfying B_1 within Omega within B_n, stored either as a
/// ball or as a polytope (halfspaces plus vertices). When the raw shape needed an
/// affine pre-normalization x -> prenormalization * (x - prenormalization_shift),
/// the map is recorded and the stored geometry is the normalized one.
class DomainSpec {
 public:
  int dim = 2;
  bool is_ball = true;
  double radius = 1.0;
  std::vector<Halfspace> faces;
  std::vector<Vec> vertices;

  bool prenormalized = false;
  Mat prenormalization;
  Vec prenormalization_shift;

  bool contains_unit_ball = true;
  bool inside_n_ball = true;

  /// Negative inside; equals minus the distance to the boundary for interior points.
  double signed_distance(const Vec& x) const;
  bool contains(const Vec& x) const { return signed_distance(x) <= 0.0; }
  /// Largest t in (0, 1] with x + t d in the closure of the domain (x inside).
  double exit_fraction(const Vec& x, const Vec& d) const;
  double circumradius() const;
  double inradius() const;

  nlohmann::json to_json() const;
  static DomainSpec from_json(const nlohmann::json& j);
};

/// Validates convexity and the B_1 / B_n inclusions, pre-normalizing with a
/// unit-determinant affine map when needed. Throws NonConvexDomain or
/// NormalizationImpossible.
DomainSpec build_domain(const ShapeDescriptor& shape);

/// Axis-aligned box (a polytope) with no inclusion requirement; used for
/// analytic test fields and resampled grids.
DomainSpec box_domain(const Vec& lo, const Vec& hi);

/// Default analysis grid covering the domain's bounding box with `nodes` per axis.
Grid domain_grid(const DomainSpec& domain, int nodes);

}  // namespace malab
