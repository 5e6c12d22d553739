#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "malab/grid_convex/domain.hpp"
#include "malab/grid_convex/grid.hpp"

namespace malab {

struct Monomial {
  double coefficient = 0.0;
  std::array<int, 3> powers{0, 0, 0};
};

struct Polynomial {
  std::vector<Monomial> terms;

  double operator()(const Vec& x) const;
  bool identically_zero() const;
  /// Constant polynomials have no zero set to build slabs around.
  bool constant() const;

  static Polynomial one();
  /// The coordinate x_axis.
  static Polynomial coordinate(int axis);
};

/// g |P|^exponent with lower <= g <= upper. Without an explicit g the midpoint of the
/// bounds is used and the term is flagged.
struct MeasureTerm {
  Polynomial P = Polynomial::one();
  double exponent = 0.0;
  double g_lower = 1.0;
  double g_upper = 1.0;
  std::function<double(const Vec&)> g;

  bool bounds_only() const { return !g; }
  double operator()(const Vec& x) const;
};

/// mu = scale * modifier(x) * sum_i g_i |P_i|^{alpha_i} dx, optionally pushed forward by
/// the unit-determinant map x -> map x + shift.
struct MeasureSpec {
  int dim = 2;
  std::vector<MeasureTerm> terms;
  double scale = 1.0;
  /// Extra factor for synthetic tests (for example a density that vanishes on a region).
  std::function<double(const Vec&)> modifier;
  Mat map;  // empty = identity
  Vec shift;

  /// Density at x in the (possibly pushed-forward) coordinates.
  double density(const Vec& x) const;
  /// Unpushed coordinates of x.
  Vec pull_back(const Vec& x) const;
  bool flagged() const;
  /// Throws ConfigError unless lambda > 0, alpha_i >= 0 and P_i is not zero.
  void validate() const;
  MeasureSpec pushed_forward(const Mat& T, const Vec& b) const;

  nlohmann::json to_json() const;
  /// {"dim": 2, "terms": [{"polynomial": [{"c": 1, "powers": [1, 0]}], "exponent": 1,
  ///   "g": {"lower": 1, "upper": 1, "polynomial": [...]}}], "scale": 1}
  static MeasureSpec from_json(const nlohmann::json& j);

  static MeasureSpec lebesgue(int dim);
  /// |x_axis|^alpha dx.
  static MeasureSpec coordinate_power(int dim, int axis, double alpha);
};

/// Cell masses of mu at the nodes of a grid inside a domain: each node carries the
/// integral of the density over its cell, by 3-point Gauss-Legendre per axis.
struct MeasureField {
  Grid grid;
  std::vector<double> mass;
  std::vector<std::uint8_t> inside;
  double total = 0.0;

  double of(const std::vector<std::size_t>& nodes) const;
  double of_mask(const std::vector<std::uint8_t>& mask) const;
  /// Mean density over the cell of node i.
  double cell_density(std::size_t i) const { return mass[i] / grid.cell_volume(); }
};

/// `map`/`shift` move the quadrature points before the density is evaluated; cells keep
/// their volume because the map is unimodular.
MeasureField measure_field(const MeasureSpec& spec, const Grid& grid, const DomainSpec& domain,
                           const Mat& map = Mat(), const Vec& shift = Vec());

/// Node-set mass; mask must lie inside the domain.
double mu_of_set(const MeasureSpec& spec, const Grid& grid, const DomainSpec& domain,
                 const std::vector<std::uint8_t>& mask);

/// Rescales spec so that mu(domain) = 1 on the given grid. Throws ZeroMuMass.
MeasureSpec normalize_mass(const MeasureSpec& spec, const Grid& grid, const DomainSpec& domain);

}  // namespace malab
