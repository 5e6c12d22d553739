#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "malab/grid_convex/domain.hpp"
#include "malab/grid_convex/field.hpp"

namespace malab {

/// Tabulated solution of a second order ODE with quintic Hermite interpolation.
struct ProfileTable {
  std::vector<double> t, v, dv, ddv;

  /// Value and first two derivatives at t (clamped to the table range).
  void eval(double x, double& value, double& d1, double& d2) const;
  bool empty() const { return t.empty(); }
};

struct WangOptions {
  double ode_tol = 1e-10;
  /// Largest det ratio tried while shooting; kappa runs over powers of 4.
  double kappa_max = 1 << 20;
  double log10_eta_min = -2.0;
  double log10_eta_max = 16.0;
  double log10_eta_step = 0.25;
  double tol_scale = 1e-6;
  int pinch_samples = 4000;
  std::uint64_t seed = 1;
};

/// Convex u with u(t x, t^alpha y) = t^{1+alpha} u(x, y), even in x and y, built from two
/// charts glued C^1 along |y| = eta1 |x|^alpha:
///   u = |y|^{1+a} phi(|x| |y|^{-a}),   a = 1/alpha, det D^2u = 1    (|x| <= xi1 |y|^a)
///   u = |x|^{1+alpha} psi(|y| |x|^{-alpha}),     det D^2u = kappa  (otherwise)
/// with psi'(0) = 0 so the y-reflection is C^1. alpha = 1 is the quadratic x^2/4 + y^2.
/// Second derivatives are taken from the profile equations rather than the table.
struct WangSolution {
  double alpha = 1.0;
  double kappa = 1.0;
  double eta1 = 0.0;
  double xi1 = 0.0;
  double amplitude = 1.0;  // u is multiplied by this; det scales by its square
  /// The profiles are evaluated at (balance x, y / balance), a unit-determinant map
  /// chosen so that u(x, 0) = |x|^{1+alpha}.
  double balance = 1.0;
  bool degenerate = false;
  double lambda_w = 0.0;
  double Lambda_w = 0.0;
  double scaling_defect = 0.0;  // max relative |u(tx, t^a y) - t^{1+a} u(x, y)| over samples
  double glue_slope = 0.0;      // normalized psi'(0)
  ProfileTable phi, psi;

  double value(double x, double y) const;
  /// Analytic Hessian (xx, xy, yy); undefined at the origin.
  Mat hessian(double x, double y) const;
  /// (1 + alpha) / (alpha - 1), the integrability threshold of the Hessian.
  double tail_exponent() const;
  WangSolution scaled(double amplitude) const;
  nlohmann::json to_json() const;
};

/// Throws InvalidExponent (alpha < 1), ProfileBlowup, PinchFailure.
WangSolution wang_construct(double alpha, const WangOptions& options = {});

/// Samples the solution on `grid` as an extended field over `domain`.
ConvexField wang_field(const WangSolution& w, const Grid& grid, const DomainSpec& domain);

}  // namespace malab
