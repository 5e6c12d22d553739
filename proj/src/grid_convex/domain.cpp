#include "malab/grid_convex/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "malab/error.hpp"
#include "malab/geometry.hpp"

namespace malab {

namespace {

constexpr double kInclusionTol = 1e-9;

void normalize_faces(std::vector<Halfspace>& faces) {
  for (auto& f : faces) {
    const double len = f.normal.norm();
    f.normal /= len;
    f.offset /= len;
  }
}

std::vector<Vec> polytope_vertices(int dim, const std::vector<Halfspace>& faces) {
  std::vector<Vec> out;
  const std::size_t m = faces.size();
  auto feasible = [&](const Vec& v) {
    for (const auto& f : faces)
      if (f.normal.dot(v) > f.offset + 1e-9 * (1.0 + std::abs(f.offset))) return false;
    return true;
  };
  auto add = [&](const Vec& v) {
    for (const auto& w : out)
      if ((w - v).norm() < 1e-9) return;
    out.push_back(v);
  };
  if (dim == 2) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) {
        Mat a(2, 2);
        a.row(0) = faces[i].normal.transpose();
        a.row(1) = faces[j].normal.transpose();
        if (std::abs(a.determinant()) < 1e-12) continue;
        Vec b(2);
        b << faces[i].offset, faces[j].offset;
        Vec v = a.partialPivLu().solve(b);
        if (feasible(v)) add(v);
      }
  } else {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j)
        for (std::size_t k = j + 1; k < m; ++k) {
          Mat a(3, 3);
          a.row(0) = faces[i].normal.transpose();
          a.row(1) = faces[j].normal.transpose();
          a.row(2) = faces[k].normal.transpose();
          if (std::abs(a.determinant()) < 1e-12) continue;
          Vec b(3);
          b << faces[i].offset, faces[j].offset, faces[k].offset;
          Vec v = a.partialPivLu().solve(b);
          if (feasible(v)) add(v);
        }
  }
  return out;
}

void update_inclusions(DomainSpec& d) {
  d.contains_unit_ball = d.inradius() >= 1.0 - kInclusionTol;
  d.inside_n_ball = d.circumradius() <= d.dim + kInclusionTol;
}

DomainSpec make_polytope(int dim, std::vector<Halfspace> faces) {
  DomainSpec d;
  d.dim = dim;
  d.is_ball = false;
  normalize_faces(faces);
  d.faces = std::move(faces);
  d.vertices = polytope_vertices(dim, d.faces);
  if (d.vertices.size() < static_cast<std::size_t>(dim + 1))
    throw Error(ErrorCode::NonConvexDomain, "halfspaces do not bound a full-dimensional polytope");
  update_inclusions(d);
  return d;
}

/// Applies x -> a (x - shift) to a polytope.
void transform_polytope(DomainSpec& d, const Mat& a, const Vec& shift) {
  const Mat a_inv_t = a.inverse().transpose();
  for (auto& f : d.faces) {
    const double b = f.offset - f.normal.dot(shift);
    f.normal = a_inv_t * f.normal;
    f.offset = b;
  }
  normalize_faces(d.faces);
  for (auto& v : d.vertices) v = a * (v - shift);
  d.prenormalized = true;
  d.prenormalization = a;
  d.prenormalization_shift = shift;
  update_inclusions(d);
}

}  // namespace

ShapeDescriptor ShapeDescriptor::ball(int dim, double radius) {
  ShapeDescriptor s;
  s.kind = ShapeKind::Ball;
  s.dim = dim;
  s.radius = radius;
  return s;
}

ShapeDescriptor ShapeDescriptor::box(const Vec& half_widths) {
  ShapeDescriptor s;
  s.kind = ShapeKind::Box;
  s.dim = static_cast<int>(half_widths.size());
  s.half_widths = half_widths;
  return s;
}

ShapeDescriptor ShapeDescriptor::square(double half_width) {
  return box(Vec::Constant(2, half_width));
}

ShapeDescriptor ShapeDescriptor::polygon(std::vector<Vec> vertices) {
  ShapeDescriptor s;
  s.kind = ShapeKind::Polygon;
  s.dim = 2;
  s.vertices = std::move(vertices);
  return s;
}

ShapeDescriptor ShapeDescriptor::ellipsoid(const Vec& axes, const Mat& rotation) {
  ShapeDescriptor s;
  s.kind = ShapeKind::Ellipsoid;
  s.dim = static_cast<int>(axes.size());
  s.axes = axes;
  s.rotation = rotation;
  return s;
}

double DomainSpec::signed_distance(const Vec& x) const {
  if (is_ball) return x.norm() - radius;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& f : faces) worst = std::max(worst, f.normal.dot(x) - f.offset);
  return worst;
}

double DomainSpec::exit_fraction(const Vec& x, const Vec& d) const {
  double t = 1.0;
  if (is_ball) {
    const double dd = d.squaredNorm();
    const double xd = x.dot(d);
    const double c = x.squaredNorm() - radius * radius;
    const double disc = std::max(0.0, xd * xd - dd * c);
    t = std::min(1.0, (-xd + std::sqrt(disc)) / dd);
  } else {
    for (const auto& f : faces) {
      const double rate = f.normal.dot(d);
      if (rate <= 0.0) continue;
      t = std::min(t, (f.offset - f.normal.dot(x)) / rate);
    }
  }
  return std::max(t, 0.0);
}

double DomainSpec::circumradius() const {
  if (is_ball) return radius;
  double r = 0.0;
  for (const auto& v : vertices) r = std::max(r, v.norm());
  return r;
}

double DomainSpec::inradius() const {
  if (is_ball) return radius;
  double r = std::numeric_limits<double>::infinity();
  for (const auto& f : faces) r = std::min(r, f.offset);
  return r;
}

nlohmann::json DomainSpec::to_json() const {
  nlohmann::json j;
  j["dim"] = dim;
  j["type"] = is_ball ? "ball" : "polytope";
  if (is_ball) {
    j["radius"] = radius;
  } else {
    auto& fj = j["faces"] = nlohmann::json::array();
    for (const auto& f : faces) {
      std::vector<double> row(f.normal.data(), f.normal.data() + f.normal.size());
      row.push_back(f.offset);
      fj.push_back(row);
    }
    auto& vj = j["vertices"] = nlohmann::json::array();
    for (const auto& v : vertices) vj.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  }
  j["prenormalized"] = prenormalized;
  if (prenormalized) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < prenormalization.rows(); ++r) {
      std::vector<double> row;
      for (int c = 0; c < prenormalization.cols(); ++c) row.push_back(prenormalization(r, c));
      rows.push_back(row);
    }
    j["prenormalization"] = rows;
    j["prenormalization_shift"] =
        std::vector<double>(prenormalization_shift.data(),
                            prenormalization_shift.data() + prenormalization_shift.size());
  }
  j["contains_unit_ball"] = contains_unit_ball;
  j["inside_n_ball"] = inside_n_ball;
  return j;
}

DomainSpec DomainSpec::from_json(const nlohmann::json& j) {
  DomainSpec d;
  d.dim = j.at("dim").get<int>();
  d.is_ball = j.at("type").get<std::string>() == "ball";
  if (d.is_ball) {
    d.radius = j.at("radius").get<double>();
  } else {
    for (const auto& row : j.at("faces")) {
      Halfspace f;
      f.normal = Vec(d.dim);
      for (int a = 0; a < d.dim; ++a) f.normal(a) = row.at(a).get<double>();
      f.offset = row.at(d.dim).get<double>();
      d.faces.push_back(f);
    }
    for (const auto& row : j.at("vertices")) {
      Vec v(d.dim);
      for (int a = 0; a < d.dim; ++a) v(a) = row.at(a).get<double>();
      d.vertices.push_back(v);
    }
  }
  d.prenormalized = j.value("prenormalized", false);
  if (d.prenormalized) {
    const auto& rows = j.at("prenormalization");
    d.prenormalization = Mat(d.dim, d.dim);
    for (int r = 0; r < d.dim; ++r)
      for (int c = 0; c < d.dim; ++c) d.prenormalization(r, c) = rows.at(r).at(c).get<double>();
    d.prenormalization_shift = Vec(d.dim);
    for (int a = 0; a < d.dim; ++a)
      d.prenormalization_shift(a) = j.at("prenormalization_shift").at(a).get<double>();
  }
  d.contains_unit_ball = j.value("contains_unit_ball", true);
  d.inside_n_ball = j.value("inside_n_ball", true);
  return d;
}

DomainSpec build_domain(const ShapeDescriptor& shape) {
  const int dim = shape.dim;
  if (dim != 2 && dim != 3) throw Error(ErrorCode::Unsupported, "dimension must be 2 or 3");

  DomainSpec d;
  d.dim = dim;
  switch (shape.kind) {
    case ShapeKind::Ball: {
      if (!(shape.radius > 0)) throw Error(ErrorCode::NonConvexDomain, "ball radius must be positive");
      d.is_ball = true;
      d.radius = shape.radius;
      update_inclusions(d);
      if (!d.contains_unit_ball || !d.inside_n_ball)
        throw Error(ErrorCode::NormalizationImpossible,
                    "a ball of this radius has the wrong volume for B_1 within Omega within B_n");
      return d;
    }
    case ShapeKind::Ellipsoid: {
      const Vec& axes = shape.axes;
      if ((axes.array() <= 0).any()) throw Error(ErrorCode::NonConvexDomain, "axes must be positive");
      const Mat rot = shape.rotation.size() ? shape.rotation : Mat(Mat::Identity(dim, dim));
      const Vec centre = shape.centre.size() ? shape.centre : Vec(Vec::Zero(dim));
      Vec inv_sq = axes.array().square().inverse();
      const Mat q = rot * inv_sq.asDiagonal() * rot.transpose();
      d.is_ball = true;
      d.radius = rounded_radius(q);
      d.prenormalized = true;
      d.prenormalization = unit_det_rounding(q);
      d.prenormalization_shift = centre;
      update_inclusions(d);
      if (!d.contains_unit_ball || !d.inside_n_ball)
        throw Error(ErrorCode::NormalizationImpossible,
                    "ellipsoid volume incompatible with B_1 within Omega within B_n");
      return d;
    }
    case ShapeKind::Box: {
      std::vector<Halfspace> faces;
      for (int a = 0; a < dim; ++a) {
        if (!(shape.half_widths(a) > 0))
          throw Error(ErrorCode::NonConvexDomain, "box half widths must be positive");
        for (double sign : {1.0, -1.0}) {
          Halfspace f;
          f.normal = Vec::Zero(dim);
          f.normal(a) = sign;
          f.offset = shape.half_widths(a);
          faces.push_back(f);
        }
      }
      d = make_polytope(dim, std::move(faces));
      break;
    }
    case ShapeKind::Polygon: {
      if (dim != 2) throw Error(ErrorCode::Unsupported, "polygons are 2D");
      auto hull = convex_hull_2d(shape.vertices);
      std::vector<Vec> distinct = shape.vertices;
      std::sort(distinct.begin(), distinct.end(), [](const Vec& a, const Vec& b) {
        return a(0) < b(0) || (a(0) == b(0) && a(1) < b(1));
      });
      distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
      if (hull.size() < 3 || hull.size() != distinct.size())
        throw Error(ErrorCode::NonConvexDomain, "polygon vertices are not in convex position");
      std::vector<Halfspace> faces;
      for (std::size_t i = 0; i < hull.size(); ++i) {
        const Vec& p = hull[i];
        const Vec& q = hull[(i + 1) % hull.size()];
        Halfspace f;
        f.normal = make_vec(q(1) - p(1), p(0) - q(0));
        f.offset = f.normal.dot(p);
        faces.push_back(f);
      }
      d = make_polytope(2, std::move(faces));
      break;
    }
    case ShapeKind::Halfspaces:
      d = make_polytope(dim, shape.halfspaces);
      break;
  }

  if (d.contains_unit_ball && d.inside_n_ball) return d;

  const Ellipsoid e = min_volume_enclosing_ellipsoid(d.vertices, 1e-8);
  transform_polytope(d, unit_det_rounding(e.shape), e.center);
  if (!d.contains_unit_ball || !d.inside_n_ball)
    throw Error(ErrorCode::NormalizationImpossible,
                "no unit-determinant rounding places the domain between B_1 and B_n");
  return d;
}

DomainSpec box_domain(const Vec& lo, const Vec& hi) {
  const int dim = static_cast<int>(lo.size());
  std::vector<Halfspace> faces;
  for (int a = 0; a < dim; ++a) {
    Halfspace up;
    up.normal = Vec::Zero(dim);
    up.normal(a) = 1.0;
    up.offset = hi(a);
    Halfspace down;
    down.normal = Vec::Zero(dim);
    down.normal(a) = -1.0;
    down.offset = -lo(a);
    faces.push_back(up);
    faces.push_back(down);
  }
  return make_polytope(dim, std::move(faces));
}

Grid domain_grid(const DomainSpec& domain, int nodes) {
  double half = 0.0;
  if (domain.is_ball) {
    half = domain.radius;
  } else {
    for (const auto& v : domain.vertices) half = std::max(half, v.cwiseAbs().maxCoeff());
  }
  return Grid::cube(domain.dim, half, nodes);
}

}  // namespace malab
