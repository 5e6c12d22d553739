#pragma once

#include <vector>

#include "malab/grid_convex/grid.hpp"

namespace malab {

/// {x : (x - center)^T shape (x - center) <= 1}
struct Ellipsoid {
  Vec center;
  Mat shape;
};

/// Counter-clockwise convex hull (monotone chain); collinear points dropped.
std::vector<Vec> convex_hull_2d(std::vector<Vec> points);

/// Minimum-volume enclosing ellipsoid of a point cloud. Khachiyan's barycentric
/// iteration with Todd-Yildirim away steps; stops once every point satisfies
/// M_j <= (1 + tol)(n + 1) and every support point M_j >= (1 - tol)(n + 1).
/// Throws DegenerateSection when the points do not span n dimensions.
Ellipsoid min_volume_enclosing_ellipsoid(const std::vector<Vec>& points, double tol = 1e-6,
                                         int max_iterations = 200000);

/// The symmetric positive definite unit-determinant map A with A(E - c) a ball:
/// A = (shape / det(shape)^{1/n})^{1/2}. Among all maps R*A (R orthogonal) this is
/// the one closest to the identity.
Mat unit_det_rounding(const Mat& shape);

/// Radius of the ball A(E - c) for the rounding map above.
double rounded_radius(const Mat& shape);

/// Largest |eigenvalue| of a symmetric matrix.
double symmetric_norm(const Mat& m);

}  // namespace malab
