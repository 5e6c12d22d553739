#include "malab/sections/section.hpp"

#include <algorithm>
#include <cmath>

#include "malab/error.hpp"
#include "malab/geometry.hpp"

namespace malab {

namespace {

bool usable_neighbor(const ConvexField& u, std::optional<std::size_t> nb) {
  if (!nb) return false;
  if (u.extended) return std::isfinite(u.values[*nb]);
  return u.interior[*nb] != 0;
}

Section scan_section(const ConvexField& u, Section sec, const SectionOptions& options) {
  const Grid& g = u.grid;
  if (g.dim() != 2) throw Error(ErrorCode::Unsupported, "sections are implemented for n = 2");
  const double h = sec.height;
  if (!(h > 0.0)) throw Error(ErrorCode::EmptySection, "section height must be positive");
  const Index3 c0 = g.coords(sec.center);
  const int nx = g.size()[0], ny = g.size()[1];

  auto inside = [&](std::size_t i) {
    return u.interior[i] && std::isfinite(u.values[i]) && sec.excess(u, i) < h;
  };

  // Grow a box around the centre until a two-node ring on every unclamped side is above h;
  // convexity then confines the section to the box.
  int r = 4;
  int x_lo, x_hi, y_lo, y_hi;
  for (;;) {
    x_lo = std::max(0, c0[0] - r), x_hi = std::min(nx - 1, c0[0] + r);
    y_lo = std::max(0, c0[1] - r), y_hi = std::min(ny - 1, c0[1] + r);
    const bool whole = x_lo == 0 && y_lo == 0 && x_hi == nx - 1 && y_hi == ny - 1;
    bool closed = true;
    for (int j = y_lo; j <= y_hi && closed; ++j)
      for (int i = x_lo; i <= x_hi && closed; ++i) {
        const bool ring = (x_lo > 0 && i <= x_lo + 1) || (x_hi < nx - 1 && i >= x_hi - 1) ||
                          (y_lo > 0 && j <= y_lo + 1) || (y_hi < ny - 1 && j >= y_hi - 1);
        if (ring && inside(g.index({i, j, 0}))) closed = false;
      }
    if (closed || whole) break;
    r *= 2;
  }

  const double margin = 2.0 * g.spacing();
  std::vector<Vec> crossings;
  for (int j = y_lo; j <= y_hi; ++j)
    for (int i = x_lo; i <= x_hi; ++i) {
      const std::size_t k = g.index({i, j, 0});
      if (!inside(k)) continue;
      sec.nodes.push_back(k);
      const Vec p = g.point(k);
      if (u.domain.signed_distance(p) > -margin) sec.touches_boundary = true;
      const double ek = sec.excess(u, k);
      for (const Index3 d : {Index3{1, 0, 0}, Index3{-1, 0, 0}, Index3{0, 1, 0}, Index3{0, -1, 0}}) {
        const auto nb = g.offset(k, d);
        if (nb && inside(*nb)) continue;
        double t = 1.0;
        if (nb && u.interior[*nb] && std::isfinite(u.values[*nb])) {
          const double en = sec.excess(u, *nb);
          t = (h - ek) / (en - ek);
        } else {
          t = 0.0;
        }
        Vec q = p;
        q(0) += t * d[0] * g.spacing();
        q(1) += t * d[1] * g.spacing();
        crossings.push_back(q);
      }
    }
  std::sort(sec.nodes.begin(), sec.nodes.end());
  if (sec.nodes.size() <= 1 && !options.allow_unresolved)
    throw Error(ErrorCode::EmptySection, "section height below grid resolution");
  if (x_lo == 0 || y_lo == 0 || x_hi == nx - 1 || y_hi == ny - 1) {
    // The box reached the grid edge; treat any masked node there as touching the boundary.
    for (std::size_t k : sec.nodes) {
      const Index3 c = g.coords(k);
      if (c[0] <= 1 || c[1] <= 1 || c[0] >= nx - 2 || c[1] >= ny - 2) sec.touches_boundary = true;
    }
  }
  sec.boundary = convex_hull_2d(std::move(crossings));
  sec.measure = static_cast<double>(sec.nodes.size()) * g.cell_volume();
  return sec;
}

}  // namespace

bool Section::contains(std::size_t node) const {
  return std::binary_search(nodes.begin(), nodes.end(), node);
}

double Section::excess(const ConvexField& u, std::size_t node) const {
  return u.values[node] - base_value - slope.dot(u.grid.point(node) - x0);
}

Vec discrete_gradient(const ConvexField& u, std::size_t node) {
  const Grid& g = u.grid;
  const int n = g.dim();
  const double s = g.spacing();
  const Vec x = g.point(node);
  Vec p(n);
  const double u0 = u.values[node];
  for (int a = 0; a < n; ++a) {
    Index3 e{0, 0, 0};
    e[a] = 1;
    const auto up = g.offset(node, e);
    const auto dn = g.offset(node, {-e[0], -e[1], -e[2]});
    Vec dir = Vec::Zero(n);
    dir(a) = s;
    // Distances (in units of s) and values on each side; a missing neighbor stands for
    // the boundary crossing with u = 0.
    double hp = 1.0, hm = 1.0, vp = 0.0, vm = 0.0;
    if (usable_neighbor(u, up)) {
      vp = u.values[*up];
    } else if (!u.extended) {
      hp = std::max(u.domain.exit_fraction(x, dir), 1e-12);
    } else {
      hp = 0.0;
    }
    if (usable_neighbor(u, dn)) {
      vm = u.values[*dn];
    } else if (!u.extended) {
      hm = std::max(u.domain.exit_fraction(x, Vec(-dir)), 1e-12);
    } else {
      hm = 0.0;
    }
    if (hp > 0.0 && hm > 0.0) {
      p(a) = (hm * hm * (vp - u0) + hp * hp * (u0 - vm)) / (hp * hm * (hp + hm) * s);
    } else if (hp > 0.0) {
      p(a) = (vp - u0) / s;
    } else if (hm > 0.0) {
      p(a) = (u0 - vm) / s;
    } else {
      throw Error(ErrorCode::InsufficientStencil, "no neighbor for the gradient");
    }
  }
  return p;
}

Section compute_section(const ConvexField& u, std::size_t center, double h, const SectionOptions& options) {
  Section sec;
  sec.center = center;
  sec.x0 = u.grid.point(center);
  sec.slope = discrete_gradient(u, center);
  sec.base_value = u.values[center];
  sec.height = h;
  return scan_section(u, std::move(sec), options);
}

Section section_with_slope(const ConvexField& u, const Section& base, double h,
                           const SectionOptions& options) {
  Section sec;
  sec.center = base.center;
  sec.x0 = base.x0;
  sec.slope = base.slope;
  sec.base_value = base.base_value;
  sec.height = h;
  return scan_section(u, std::move(sec), options);
}

bool sections_intersect(const Section& a, const Section& b) {
  auto i = a.nodes.begin();
  auto j = b.nodes.begin();
  while (i != a.nodes.end() && j != b.nodes.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i; else ++j;
  }
  return false;
}

bool section_subset(const Section& inner, const Section& outer) {
  return std::includes(outer.nodes.begin(), outer.nodes.end(), inner.nodes.begin(), inner.nodes.end());
}

std::vector<std::size_t> section_intersection(const Section& a, const Section& b) {
  std::vector<std::size_t> out;
  std::set_intersection(a.nodes.begin(), a.nodes.end(), b.nodes.begin(), b.nodes.end(),
                        std::back_inserter(out));
  return out;
}

}  // namespace malab
