#pragma once

#include <array>
#include <cstddef>
#include <optional>

#include <Eigen/Dense>

namespace malab {

/// Small fixed-capacity vectors/matrices; n is 2 or 3 everywhere.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
using Index3 = std::array<int, 3>;

/// Uniform Cartesian node grid. Node (i, j, k) is stored at i + nx * (j + ny * k),
/// i.e. row-major over (k, j, i) with x fastest. In 2D the third extent is 1.
class Grid {
 public:
  Grid() = default;
  Grid(int dim, Index3 size, Vec origin, double spacing);

  /// Nodes on [-half_width, half_width]^dim with `nodes` nodes per axis (both ends included).
  static Grid cube(int dim, double half_width, int nodes);
  /// Box [lo, hi] with spacing close to `spacing`; extents are rounded so the box is covered.
  static Grid box(const Vec& lo, const Vec& hi, double spacing);

  int dim() const { return dim_; }
  const Index3& size() const { return size_; }
  const Vec& origin() const { return origin_; }
  double spacing() const { return spacing_; }
  std::size_t count() const { return count_; }
  double cell_volume() const;

  std::size_t index(const Index3& c) const {
    return static_cast<std::size_t>(c[0]) +
           static_cast<std::size_t>(size_[0]) *
               (static_cast<std::size_t>(c[1]) + static_cast<std::size_t>(size_[1]) * c[2]);
  }
  Index3 coords(std::size_t i) const;
  bool in_range(const Index3& c) const {
    for (int a = 0; a < 3; ++a)
      if (c[a] < 0 || c[a] >= size_[a]) return false;
    return true;
  }
  Vec point(std::size_t i) const { return point(coords(i)); }
  Vec point(const Index3& c) const;

  /// Neighbor of node i displaced by integer offset d, if it lies on the grid.
  std::optional<std::size_t> offset(std::size_t i, const Index3& d) const;
  /// Node closest to x, if x lies within the grid box (half a cell of slack).
  std::optional<std::size_t> nearest(const Vec& x) const;
  /// Continuous grid coordinate of x along axis a (node units).
  double grid_coordinate(const Vec& x, int a) const { return (x(a) - origin_(a)) / spacing_; }

  bool operator==(const Grid& o) const;

 private:
  int dim_ = 2;
  Index3 size_{1, 1, 1};
  Vec origin_ = Vec::Zero(2);
  double spacing_ = 1.0;
  std::size_t count_ = 1;
};

inline Vec make_vec(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}
inline Vec make_vec(double x, double y, double z) {
  Vec v(3);
  v << x, y, z;
  return v;
}

}  // namespace malab
