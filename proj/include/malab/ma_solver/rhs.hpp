#pragma once

#include <functional>
#include <string>
#include <vector>

#include "malab/grid_convex/grid.hpp"

namespace malab {

/// Right-hand side of det D^2u = f. Density inputs must satisfy 0 < lambda <= f <= Lambda;
/// measure inputs (degenerate densities) may vanish and only need f >= 0.
struct RhsSpec {
  std::function<double(const Vec&)> density;
  double lambda = 1.0;
  double Lambda = 1.0;
  bool measure = false;
  std::string label = "constant";

  double operator()(const Vec& x) const { return density(x); }

  static RhsSpec constant(double c);
  /// f = 1 + amplitude * sign(sin(pi k x) sin(pi k y)) (times sin(pi k z) in 3D).
  static RhsSpec oscillatory(double amplitude = 0.9, int cells = 4);
  static RhsSpec from_density(std::function<double(const Vec&)> f, double lambda, double Lambda,
                              std::string label);
  static RhsSpec from_measure(std::function<double(const Vec&)> f, double Lambda, std::string label);
};

}  // namespace malab
