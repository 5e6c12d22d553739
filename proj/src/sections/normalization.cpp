#include "malab/sections/normalization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "malab/error.hpp"
#include "malab/geometry.hpp"

namespace malab {

namespace {

double keys(double t) {
  t = std::abs(t);
  if (t < 1.0) return (1.5 * t - 2.5) * t * t + 1.0;
  if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
  return 0.0;
}

bool available(const ConvexField& u, int i, int j) {
  const Grid& g = u.grid;
  if (i < 0 || j < 0 || i >= g.size()[0] || j >= g.size()[1]) return false;
  const std::size_t k = g.index({i, j, 0});
  if (!std::isfinite(u.values[k])) return false;
  return u.extended || u.interior[k];
}

}  // namespace

Normalization john_normalize(const Section& section, NormalizationMethod method) {
  if (section.x0.size() != 2)
    throw Error(ErrorCode::Unsupported, "normalization is implemented for n = 2");
  if (section.boundary.size() < 3)
    throw Error(ErrorCode::DegenerateSection, "section hull does not span the plane");
  Normalization out;
  out.method = method;
  Mat shape;
  if (method == NormalizationMethod::John) {
    // Near-elliptic hulls make every point a support point and Khachiyan's tail very slow;
    // 1e-3 already pins alpha to a few parts in 1e4.
    const Ellipsoid e = min_volume_enclosing_ellipsoid(section.boundary, kSectionEllipsoidTol);
    shape = e.shape;
    out.ellipsoid_center = e.center;
  } else {
    // Second moments of the hull (polygon centroid and inertia); a uniform ellipse
    // {x^T Q x <= 1} has covariance Q^{-1} / 4.
    const auto& v = section.boundary;
    double area = 0.0;
    Vec c = Vec::Zero(2);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    const Vec o = v[0];
    for (std::size_t k = 1; k + 1 < v.size(); ++k) {
      const Vec a = v[k] - o, b = v[k + 1] - o;
      const double tri = 0.5 * (a(0) * b(1) - a(1) * b(0));
      area += tri;
      c += tri * (a + b) / 3.0;
      // Second moments of the triangle (0, a, b) about the origin.
      sxx += tri / 6.0 * (a(0) * a(0) + a(0) * b(0) + b(0) * b(0));
      syy += tri / 6.0 * (a(1) * a(1) + a(1) * b(1) + b(1) * b(1));
      sxy += tri / 12.0 * (2 * a(0) * a(1) + a(0) * b(1) + b(0) * a(1) + 2 * b(0) * b(1));
    }
    if (!(area > 0.0)) throw Error(ErrorCode::DegenerateSection, "section hull has zero area");
    c /= area;
    Mat cov(2, 2);
    cov << sxx / area - c(0) * c(0), sxy / area - c(0) * c(1), sxy / area - c(0) * c(1),
        syy / area - c(1) * c(1);
    if (!(cov.determinant() > 0.0))
      throw Error(ErrorCode::DegenerateSection, "section hull has singular inertia");
    shape = cov.inverse() / 4.0;
    out.ellipsoid_center = c + o;
  }
  out.A = unit_det_rounding(shape);
  out.alpha = std::pow(symmetric_norm(out.A), 2);

  std::vector<Vec> w;
  w.reserve(section.boundary.size());
  for (const Vec& p : section.boundary) w.push_back(out.A * (p - section.x0));
  double r_out = 0.0, r_in = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < w.size(); ++k) {
    r_out = std::max(r_out, w[k].norm());
    const Vec& a = w[k];
    const Vec& b = w[(k + 1) % w.size()];
    const Vec e = b - a;
    // Counter-clockwise hull: the origin lies to the left of every edge.
    const double cross = e(0) * (-a(1)) - e(1) * (-a(0));
    r_in = std::min(r_in, cross / e.norm());
  }
  out.r_out = r_out;
  out.r_in = std::max(r_in, 0.0);
  const double sh = std::sqrt(section.height);
  out.sigma = std::min(out.r_in / sh, sh / out.r_out);
  if (!(out.sigma > 0.0))
    throw Error(ErrorCode::DegenerateSection, "section centre lies on its boundary");
  return out;
}

std::vector<SizeSample> normalized_size_curve(const ConvexField& u, std::size_t center,
                                              const std::vector<double>& heights,
                                              NormalizationMethod method) {
  const HessianField hess = discrete_hessian(u);
  const double hn = hess.valid[center] ? hess.norm[center] : std::numeric_limits<double>::quiet_NaN();
  std::vector<SizeSample> out;
  for (double h : heights) {
    try {
      const Section s = compute_section(u, center, h);
      const Normalization nz = john_normalize(s, method);
      out.push_back({h, nz.alpha, nz.sigma, hn, nz.alpha / hn});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptySection && e.code() != ErrorCode::DegenerateSection) throw;
    }
  }
  return out;
}

bool interpolate_field(const ConvexField& u, const Vec& x, double& value) {
  const Grid& g = u.grid;
  const double gx = g.grid_coordinate(x, 0), gy = g.grid_coordinate(x, 1);
  const int i0 = static_cast<int>(std::floor(gx)), j0 = static_cast<int>(std::floor(gy));
  const double tx = gx - i0, ty = gy - j0;
  auto at = [&](int i, int j) { return u.values[g.index({i, j, 0})]; };
  bool cubic = true;
  for (int j = j0 - 1; j <= j0 + 2 && cubic; ++j)
    for (int i = i0 - 1; i <= i0 + 2 && cubic; ++i) cubic = available(u, i, j);
  if (cubic) {
    double v = 0.0;
    for (int j = -1; j <= 2; ++j) {
      const double wy = keys(ty - j);
      for (int i = -1; i <= 2; ++i) v += wy * keys(tx - i) * at(i0 + i, j0 + j);
    }
    value = v;
    return true;
  }
  for (int j = j0; j <= j0 + 1; ++j)
    for (int i = i0; i <= i0 + 1; ++i)
      if (!available(u, i, j)) return false;
  value = (1 - tx) * (1 - ty) * at(i0, j0) + tx * (1 - ty) * at(i0 + 1, j0) +
          (1 - tx) * ty * at(i0, j0 + 1) + tx * ty * at(i0 + 1, j0 + 1);
  return true;
}

Vec RescaledField::to_rescaled(const Vec& x) const { return A * (x - x0) / std::sqrt(height); }

Vec RescaledField::to_physical(const Vec& xt) const {
  return x0 + std::sqrt(height) * A.inverse() * xt;
}

Vec RescaledField::transport_slope(const Vec& p) const {
  return A.inverse().transpose() * (p - slope) / std::sqrt(height);
}

RescaledField rescale_solution(const ConvexField& u, const Section& section,
                               const Normalization& normalization, const RescaleOptions& options) {
  if (section.touches_boundary && !u.extended)
    throw Error(ErrorCode::ResamplingOutOfDomain, "section reaches the domain boundary");
  RescaledField r;
  r.A = normalization.A;
  r.x0 = section.x0;
  r.slope = section.slope;
  r.base_value = section.base_value;
  r.height = section.height;
  const double sh = std::sqrt(section.height);
  const double extent = (1.0 + options.margin) * normalization.r_out / sh;
  const double spacing = options.spacing_factor * u.grid.spacing() / sh;
  const int half = static_cast<int>(std::ceil(extent / spacing)) + 2;
  r.field.grid = Grid(2, {2 * half + 1, 2 * half + 1, 1}, Vec::Constant(2, -half * spacing), spacing);
  Vec lo = Vec::Constant(2, -(half + 0.5) * spacing), hi = -lo;
  r.field.domain = box_domain(lo, hi);
  r.field.extended = true;
  const Grid& g = r.field.grid;
  r.field.values.assign(g.count(), std::numeric_limits<double>::quiet_NaN());
  r.field.interior.assign(g.count(), 0);
  r.in_section.assign(g.count(), 0);
  std::size_t missing = 0;
  for (std::size_t k = 0; k < g.count(); ++k) {
    const Vec xt = g.point(k);
    const Vec x = r.to_physical(xt);
    double v;
    if (!interpolate_field(u, x, v)) {
      // A missing node inside the physical section cannot be recovered.
      const auto near = u.grid.nearest(x);
      if (near && section.contains(*near)) ++missing;
      continue;
    }
    const double vt = (v - r.base_value - r.slope.dot(x - r.x0)) / section.height;
    r.field.values[k] = vt;
    r.field.interior[k] = 1;
    if (vt < 1.0) r.in_section[k] = 1;
  }
  if (missing > 0)
    throw Error(ErrorCode::ResamplingOutOfDomain,
                std::to_string(missing) + " rescaled section nodes have no interpolation stencil");
  return r;
}

}  // namespace malab
