#include "malab/grid_convex/grid.hpp"

#include <cmath>

#include "malab/error.hpp"

namespace malab {

Grid::Grid(int dim, Index3 size, Vec origin, double spacing)
    : dim_(dim), size_(size), origin_(std::move(origin)), spacing_(spacing) {
  if (dim_ != 2 && dim_ != 3) throw Error(ErrorCode::Unsupported, "grid dimension must be 2 or 3");
  if (dim_ == 2) size_[2] = 1;
  if (origin_.size() != dim_) throw Error(ErrorCode::Unsupported, "grid origin has wrong dimension");
  if (!(spacing_ > 0.0)) throw Error(ErrorCode::Unsupported, "grid spacing must be positive");
  count_ = 1;
  for (int a = 0; a < 3; ++a) {
    if (size_[a] < 1) throw Error(ErrorCode::Unsupported, "grid extent must be positive");
    count_ *= static_cast<std::size_t>(size_[a]);
  }
}

Grid Grid::cube(int dim, double half_width, int nodes) {
  if (nodes < 3) throw Error(ErrorCode::Unsupported, "need at least 3 nodes per axis");
  Index3 size{nodes, nodes, dim == 3 ? nodes : 1};
  Vec origin = Vec::Constant(dim, -half_width);
  return Grid(dim, size, origin, 2.0 * half_width / (nodes - 1));
}

Grid Grid::box(const Vec& lo, const Vec& hi, double spacing) {
  const int dim = static_cast<int>(lo.size());
  Index3 size{1, 1, 1};
  Vec origin(dim);
  for (int a = 0; a < dim; ++a) {
    const double centre = 0.5 * (lo(a) + hi(a));
    const int half = static_cast<int>(std::ceil(0.5 * (hi(a) - lo(a)) / spacing - 1e-9));
    size[a] = 2 * half + 1;
    origin(a) = centre - half * spacing;
  }
  return Grid(dim, size, origin, spacing);
}

double Grid::cell_volume() const { return std::pow(spacing_, dim_); }

Index3 Grid::coords(std::size_t i) const {
  Index3 c{0, 0, 0};
  c[0] = static_cast<int>(i % size_[0]);
  i /= size_[0];
  c[1] = static_cast<int>(i % size_[1]);
  c[2] = static_cast<int>(i / size_[1]);
  return c;
}

Vec Grid::point(const Index3& c) const {
  Vec x(dim_);
  for (int a = 0; a < dim_; ++a) x(a) = origin_(a) + spacing_ * c[a];
  return x;
}

std::optional<std::size_t> Grid::offset(std::size_t i, const Index3& d) const {
  Index3 c = coords(i);
  for (int a = 0; a < 3; ++a) c[a] += d[a];
  if (!in_range(c)) return std::nullopt;
  return index(c);
}

std::optional<std::size_t> Grid::nearest(const Vec& x) const {
  Index3 c{0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    c[a] = static_cast<int>(std::lround(grid_coordinate(x, a)));
  }
  if (!in_range(c)) return std::nullopt;
  return index(c);
}

bool Grid::operator==(const Grid& o) const {
  return dim_ == o.dim_ && size_ == o.size_ && spacing_ == o.spacing_ && origin_ == o.origin_;
}

}  // namespace malab
