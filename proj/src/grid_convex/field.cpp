#include "malab/grid_convex/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "malab/error.hpp"

namespace malab {

namespace {

std::vector<std::uint8_t> interior_mask(const Grid& grid, const DomainSpec& domain) {
  std::vector<std::uint8_t> mask(grid.count(), 0);
  const double margin = kBoundaryNodeFraction * grid.spacing();
  for (std::size_t i = 0; i < grid.count(); ++i)
    mask[i] = domain.signed_distance(grid.point(i)) < -margin ? 1 : 0;
  return mask;
}

Vec step_vector(const Grid& grid, const Index3& v) {
  Vec d(grid.dim());
  for (int a = 0; a < grid.dim(); ++a) d(a) = v[a] * grid.spacing();
  return d;
}

Index3 negate(const Index3& v) { return {-v[0], -v[1], -v[2]}; }
Index3 twice(const Index3& v) { return {2 * v[0], 2 * v[1], 2 * v[2]}; }

}  // namespace

std::size_t ConvexField::interior_count() const {
  return static_cast<std::size_t>(std::count(interior.begin(), interior.end(), 1));
}

ConvexField ConvexField::dirichlet(const Grid& grid, const DomainSpec& domain) {
  ConvexField f;
  f.grid = grid;
  f.domain = domain;
  f.values.assign(grid.count(), 0.0);
  f.interior = interior_mask(grid, domain);
  return f;
}

ConvexField ConvexField::sample(const Grid& grid, const DomainSpec& domain,
                                const std::function<double(const Vec&)>& fn) {
  ConvexField f = dirichlet(grid, domain);
  for (std::size_t i = 0; i < grid.count(); ++i) f.values[i] = fn(grid.point(i));
  f.extended = true;
  return f;
}

double DirectionalStencil::apply(const std::vector<double>& u, std::size_t node) const {
  double r = w_center * u[node];
  if (plus) r += w_plus * u[*plus];
  if (minus) r += w_minus * u[*minus];
  return r;
}

DirectionalStencil directional_stencil(const ConvexField& u, std::size_t node, const Index3& v) {
  DirectionalStencil st;
  const Grid& g = u.grid;
  const double s2 = g.spacing() * g.spacing();
  auto p = g.offset(node, v);
  auto m = g.offset(node, negate(v));

  if (u.extended) {
    // Non-finite samples (resampled fields) count as missing.
    auto finite = [&](std::optional<std::size_t>& nb) {
      if (nb && !std::isfinite(u.values[*nb])) nb.reset();
    };
    finite(p);
    finite(m);
    if (p && m) {
      st.plus = p;
      st.minus = m;
      st.w_plus = st.w_minus = 1.0 / s2;
      st.w_center = -2.0 / s2;
      return st;
    }
    // One-sided: x, x -/+ v, x -/+ 2v.
    const Index3 dir = p ? v : negate(v);
    auto n1 = g.offset(node, dir);
    auto n2 = g.offset(node, twice(dir));
    finite(n1);
    finite(n2);
    st.boundary = true;
    if (!n1 || !n2) {
      st.ok = false;
      return st;
    }
    st.plus = n1;
    st.minus = n2;
    st.w_center = 1.0 / s2;
    st.w_plus = -2.0 / s2;
    st.w_minus = 1.0 / s2;
    return st;
  }

  const Vec x = g.point(node);
  const Vec step = step_vector(g, v);
  auto side = [&](const std::optional<std::size_t>& nb, const Vec& d,
                  std::optional<std::size_t>& slot) -> double {
    if (nb && u.interior[*nb]) {
      slot = nb;
      return 1.0;
    }
    const double t = u.domain.exit_fraction(x, d);
    if (!nb && t >= 1.0) {
      st.ok = false;
      return 1.0;
    }
    st.boundary = true;
    slot.reset();
    return std::max(t, 1e-12);
  };
  const double tp = side(p, step, st.plus);
  const double tm = side(m, Vec(-step), st.minus);
  st.w_plus = 2.0 / (tp * (tp + tm) * s2);
  st.w_minus = 2.0 / (tm * (tp + tm) * s2);
  st.w_center = -(st.w_plus + st.w_minus);
  return st;
}

Mat HessianField::matrix(std::size_t i) const {
  const int n = grid.dim();
  const double* e = entries.data() + packed_size() * i;
  Mat h(n, n);
  if (n == 2) {
    h << e[0], e[1], e[1], e[2];
  } else {
    h << e[0], e[1], e[2], e[1], e[3], e[4], e[2], e[4], e[5];
  }
  return h;
}

double operator_norm(const Mat& h) {
  if (h.rows() == 2) {
    const double mean = 0.5 * (h(0, 0) + h(1, 1));
    const double rad = std::hypot(0.5 * (h(0, 0) - h(1, 1)), h(0, 1));
    return std::max(std::abs(mean + rad), std::abs(mean - rad));
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

HessianField discrete_hessian(const ConvexField& u) {
  const Grid& g = u.grid;
  const int n = g.dim();
  HessianField hf;
  hf.grid = g;
  hf.entries.assign(g.count() * hf.packed_size(), 0.0);
  hf.norm.assign(g.count(), 0.0);
  hf.valid.assign(g.count(), 0);
  hf.flagged.assign(g.count(), 0);

  std::size_t usable = 0;
  for (std::size_t i = 0; i < g.count(); ++i) {
    if (!u.interior[i]) continue;
    bool ok = true;
    bool flagged = false;
    auto eval = [&](const Index3& v) {
      const DirectionalStencil st = directional_stencil(u, i, v);
      ok = ok && st.ok;
      flagged = flagged || st.boundary;
      return st.ok ? st.apply(u.values, i) : 0.0;
    };
    Mat h(n, n);
    for (int a = 0; a < n; ++a) {
      Index3 ea{0, 0, 0};
      ea[a] = 1;
      h(a, a) = eval(ea);
      for (int b = a + 1; b < n; ++b) {
        Index3 sum = ea, diff = ea;
        sum[b] = 1;
        diff[b] = -1;
        h(a, b) = h(b, a) = 0.25 * (eval(sum) - eval(diff));
      }
    }
    if (!ok) continue;
    double* e = hf.entries.data() + hf.packed_size() * i;
    if (n == 2) {
      e[0] = h(0, 0), e[1] = h(0, 1), e[2] = h(1, 1);
    } else {
      e[0] = h(0, 0), e[1] = h(0, 1), e[2] = h(0, 2), e[3] = h(1, 1), e[4] = h(1, 2),
      e[5] = h(2, 2);
    }
    hf.norm[i] = operator_norm(h);
    hf.valid[i] = 1;
    hf.flagged[i] = flagged ? 1 : 0;
    ++usable;
  }
  if (usable == 0) throw Error(ErrorCode::InsufficientStencil, "no interior node has a complete stencil");
  return hf;
}

std::vector<Index3> convexity_directions(int dim) {
  if (dim == 2) return {{1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, -1, 0}};
  return {{1, 0, 0},  {0, 1, 0},  {0, 0, 1},   {1, 1, 0},  {1, -1, 0},  {1, 0, 1},  {1, 0, -1},
          {0, 1, 1},  {0, 1, -1}, {1, 1, 1},   {1, 1, -1}, {1, -1, 1},  {-1, 1, 1}};
}

std::vector<ConvexityViolation> check_convexity(const ConvexField& u, double tol) {
  if (tol < 0.0) {
    double sup = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i)
      if (u.interior[i]) sup = std::max(sup, std::abs(u.values[i]));
    tol = 1e-8 * sup;
  }
  const double s2 = u.grid.spacing() * u.grid.spacing();
  std::vector<ConvexityViolation> out;
  const auto dirs = convexity_directions(u.grid.dim());
  for (std::size_t i = 0; i < u.grid.count(); ++i) {
    if (!u.interior[i]) continue;
    for (const auto& v : dirs) {
      const DirectionalStencil st = directional_stencil(u, i, v);
      if (!st.ok) continue;
      const double d = st.apply(u.values, i) * s2;
      if (d < -tol) out.push_back({i, v, d});
    }
  }
  return out;
}

InteriorLevel sup_norm_and_interior(const ConvexField& u) {
  InteriorLevel r;
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    if (!u.interior[i]) continue;
    r.sup_norm = std::max(r.sup_norm, std::abs(u.values[i]));
    top = std::max(top, u.values[i]);
  }
  if (top > 1e-12 * std::max(1.0, r.sup_norm))
    throw Error(ErrorCode::PositiveInteriorValue, "u is positive at an interior node");
  r.mask.assign(u.values.size(), 0);
  for (std::size_t i = 0; i < u.values.size(); ++i)
    r.mask[i] = (u.interior[i] && u.values[i] < -0.5 * r.sup_norm) ? 1 : 0;
  return r;
}

void write_field(const std::string& path, const ConvexField& u) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path);
  const Grid& g = u.grid;
  out.write("MALF", 4);
  const std::int32_t dim = g.dim();
  out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
  for (int a = 0; a < 3; ++a) {
    const std::int32_t d = g.size()[a];
    out.write(reinterpret_cast<const char*>(&d), sizeof d);
  }
  const double s = g.spacing();
  out.write(reinterpret_cast<const char*>(&s), sizeof s);
  for (int a = 0; a < 3; ++a) {
    const double o = a < dim ? g.origin()(a) : 0.0;
    out.write(reinterpret_cast<const char*>(&o), sizeof o);
  }
  out.write(reinterpret_cast<const char*>(u.values.data()),
            static_cast<std::streamsize>(u.values.size() * sizeof(double)));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);

  nlohmann::json meta;
  meta["format"] = "MALF";
  meta["domain"] = u.domain.to_json();
  meta["extended"] = u.extended;
  std::ofstream side(path + ".json");
  side << meta.dump(2) << '\n';
}

ConvexField read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "MALF", 4) != 0) throw Error(ErrorCode::Io, "bad field header in " + path);
  std::int32_t dim = 0;
  std::int32_t dims[3];
  double spacing = 0.0;
  double origin[3];
  in.read(reinterpret_cast<char*>(&dim), sizeof dim);
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  in.read(reinterpret_cast<char*>(&spacing), sizeof spacing);
  in.read(reinterpret_cast<char*>(origin), sizeof origin);
  if (!in || (dim != 2 && dim != 3)) throw Error(ErrorCode::Io, "bad field header in " + path);
  Vec o(dim);
  for (int a = 0; a < dim; ++a) o(a) = origin[a];
  Grid g(dim, {dims[0], dims[1], dims[2]}, o, spacing);

  std::ifstream side(path + ".json");
  if (!side) throw Error(ErrorCode::Io, "missing sidecar for " + path);
  const nlohmann::json meta = nlohmann::json::parse(side);
  ConvexField f = ConvexField::dirichlet(g, DomainSpec::from_json(meta.at("domain")));
  f.extended = meta.value("extended", false);
  in.read(reinterpret_cast<char*>(f.values.data()),
          static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  if (!in) throw Error(ErrorCode::Io, "truncated payload in " + path);
  return f;
}

}  // namespace malab
