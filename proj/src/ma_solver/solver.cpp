#include "malab/ma_solver/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>

#include <Eigen/Sparse>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include "malab/error.hpp"

namespace malab {

namespace {

int gcd3(const Index3& v) { return std::gcd(std::gcd(std::abs(v[0]), std::abs(v[1])), std::abs(v[2])); }

Index3 canonical(Index3 v) {
  for (int a = 0; a < 3; ++a) {
    if (v[a] == 0) continue;
    if (v[a] < 0) v = {-v[0], -v[1], -v[2]};
    break;
  }
  return v;
}

int dot(const Index3& a, const Index3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

std::vector<Index3> primitive_directions(int dim, int width) {
  std::vector<Index3> out;
  const int wz = dim == 3 ? width : 0;
  for (int i = -width; i <= width; ++i)
    for (int j = -width; j <= width; ++j)
      for (int k = -wz; k <= wz; ++k) {
        Index3 v{i, j, k};
        if (v == Index3{0, 0, 0} || gcd3(v) != 1 || canonical(v) != v) continue;
        out.push_back(v);
      }
  return out;
}

/// Interior unknowns plus precomputed directional stencils (node-major).
struct Scheme {
  std::vector<std::vector<Index3>> frames;
  std::vector<Index3> directions;
  std::vector<std::vector<int>> frame_dirs;
  std::vector<double> inv_len2;
  std::vector<std::size_t> nodes;
  std::vector<long> unknown;  // node -> unknown index or -1
  std::vector<DirectionalStencil> stencils;

  Scheme(const ConvexField& u, int width) {
    frames = stencil_frames(u.grid.dim(), width);
    for (const auto& f : frames) {
      std::vector<int> ids;
      for (const auto& v : f) {
        auto it = std::find(directions.begin(), directions.end(), v);
        if (it == directions.end()) {
          directions.push_back(v);
          it = directions.end() - 1;
        }
        ids.push_back(static_cast<int>(it - directions.begin()));
      }
      frame_dirs.push_back(ids);
    }
    for (const auto& v : directions) inv_len2.push_back(1.0 / dot(v, v));
    unknown.assign(u.grid.count(), -1);
    for (std::size_t i = 0; i < u.grid.count(); ++i)
      if (u.interior[i]) {
        unknown[i] = static_cast<long>(nodes.size());
        nodes.push_back(i);
      }
    stencils.reserve(nodes.size() * directions.size());
    for (std::size_t i : nodes)
      for (const auto& v : directions) {
        DirectionalStencil st = directional_stencil(u, i, v);
        if (!st.ok) throw Error(ErrorCode::InsufficientStencil, "stencil leaves the grid inside the domain");
        stencils.push_back(st);
      }
  }

  std::size_t dir_count() const { return directions.size(); }

  /// Operator value at unknown r; writes the active frame and its differences. The root
  /// form replaces prod d_j^+ by its n-th root, which has the same zero set against f^{1/n}
  /// but is homogeneous of degree one.
  double evaluate(const std::vector<double>& u, std::size_t r, int* active, double* d,
                  bool root = false) const {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t node = nodes[r];
    double scratch[8];
    for (std::size_t f = 0; f < frame_dirs.size(); ++f) {
      double prod = 1.0, neg = 0.0;
      const auto& ids = frame_dirs[f];
      for (std::size_t j = 0; j < ids.size(); ++j) {
        const double dj = stencils[r * dir_count() + ids[j]].apply(u, node) * inv_len2[ids[j]];
        scratch[j] = dj;
        prod *= std::max(dj, 0.0);
        neg += std::max(-dj, 0.0);
      }
      const double g = (root ? std::pow(prod, 1.0 / ids.size()) : prod) - neg;
      if (g < best) {
        best = g;
        if (active) *active = static_cast<int>(f);
        if (d) std::copy(scratch, scratch + ids.size(), d);
      }
    }
    return best;
  }
};


/// -J is an M-matrix, so ILUT-preconditioned BiCGSTAB is reliable; sparse LU is the fallback.
Eigen::VectorXd linear_solve(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& b) {
  Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> it;
  it.preconditioner().setDroptol(1e-4);
  it.preconditioner().setFillfactor(10);
  it.setTolerance(1e-13);
  it.setMaxIterations(500);
  it.compute(a);
  if (it.info() == Eigen::Success) {
    Eigen::VectorXd x = it.solve(b);
    if (it.info() == Eigen::Success) return x;
  }
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(a);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::NonConvergence, "linear solve failed");
  return lu.solve(b);
}

/// Grid with twice the spacing sharing every other node, if the extents allow it.
std::optional<Grid> coarsened(const Grid& g, int coarsest) {
  Index3 size = g.size();
  for (int a = 0; a < g.dim(); ++a) {
    if (size[a] % 2 == 0 || (size[a] + 1) / 2 < coarsest) return std::nullopt;
    size[a] = (size[a] + 1) / 2;
  }
  return Grid(g.dim(), size, g.origin(), 2.0 * g.spacing());
}

/// Tensor Keys cubic interpolation of a coarse Dirichlet field onto the interior of
/// `fine`; multilinear where the cubic support leaves the coarse interior.
void prolong(const ConvexField& coarse, ConvexField& fine) {
  const Grid& cg = coarse.grid;
  const int n = fine.grid.dim();
  // Keys weights at the half-way point for offsets -1, 0, 1, 2.
  constexpr double kCubic[4] = {-0.0625, 0.5625, 0.5625, -0.0625};
  for (std::size_t i = 0; i < fine.grid.count(); ++i) {
    if (!fine.interior[i]) continue;
    const Index3 c = fine.grid.coords(i);
    Index3 base{0, 0, 0};
    int odd_axes[3];
    int odd = 0;
    for (int a = 0; a < n; ++a) {
      base[a] = c[a] / 2;
      if (c[a] % 2) odd_axes[odd++] = a;
    }
    auto value = [&](const Index3& k, bool& inside) {
      if (!cg.in_range(k)) {
        inside = false;
        return 0.0;
      }
      const std::size_t j = cg.index(k);
      inside = inside && coarse.interior[j];
      return coarse.interior[j] ? coarse.values[j] : 0.0;
    };
    double cubic = 0.0;
    double linear = 0.0;
    bool inside = true;
    int taps = 1;
    for (int t = 0; t < odd; ++t) taps *= 4;
    for (int tap = 0; tap < taps; ++tap) {
      Index3 k = base;
      double wc = 1.0;
      double wl = 1.0;
      int code = tap;
      for (int t = 0; t < odd; ++t) {
        const int o = code % 4 - 1;
        code /= 4;
        k[odd_axes[t]] += o;
        wc *= kCubic[o + 1];
        wl *= (o == 0 || o == 1) ? 0.5 : 0.0;
      }
      const double v = value(k, inside);
      cubic += wc * v;
      linear += wl * v;
    }
    fine.values[i] = inside ? cubic : linear;
  }
}
}  // namespace

std::vector<std::vector<Index3>> stencil_frames(int dim, int width) {
  if (width < 1) throw Error(ErrorCode::InsufficientStencil, "stencil width must be at least 1");
  const auto dirs = primitive_directions(dim, width);
  std::vector<std::vector<Index3>> frames;
  const std::size_t m = dirs.size();
  if (dim == 2) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j)
        if (dot(dirs[i], dirs[j]) == 0) frames.push_back({dirs[i], dirs[j]});
  } else {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) {
        if (dot(dirs[i], dirs[j]) != 0) continue;
        for (std::size_t k = j + 1; k < m; ++k)
          if (dot(dirs[i], dirs[k]) == 0 && dot(dirs[j], dirs[k]) == 0)
            frames.push_back({dirs[i], dirs[j], dirs[k]});
      }
  }
  return frames;
}

nlohmann::json SolveReport::to_json(bool with_timing) const {
  nlohmann::json j;
  j["iterations"] = iterations;
  j["residual"] = residual;
  j["residual_l1"] = residual_l1;
  j["stencil_directions"] = stencil_directions;
  j["stencil_width"] = stencil_width;
  if (with_timing) j["wall_time"] = wall_time;
  return j;
}

std::vector<double> monge_ampere_operator(const ConvexField& u, int stencil_width) {
  const Scheme scheme(u, stencil_width);
  std::vector<double> out(u.grid.count(), 0.0);
  for (std::size_t r = 0; r < scheme.nodes.size(); ++r)
    out[scheme.nodes[r]] = scheme.evaluate(u.values, r, nullptr, nullptr);
  return out;
}

ResidualStats residual(const ConvexField& u, const RhsSpec& rhs, int stencil_width) {
  const auto ma = monge_ampere_operator(u, stencil_width);
  ResidualStats s;
  for (std::size_t i = 0; i < u.grid.count(); ++i) {
    if (!u.interior[i]) continue;
    const double r = std::abs(ma[i] - rhs(u.grid.point(i)));
    s.max = std::max(s.max, r);
    s.l1 += r;
  }
  s.l1 *= u.grid.cell_volume();
  return s;
}

std::pair<ConvexField, SolveReport> solve_dirichlet(const Grid& grid, const DomainSpec& domain,
                                                    const RhsSpec& rhs, const SolverOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  if (grid.dim() != domain.dim) throw Error(ErrorCode::Unsupported, "grid and domain dimensions differ");
  if (!rhs.measure && !(rhs.lambda > 0.0))
    throw Error(ErrorCode::DegenerateRhs, "density right-hand side needs lambda > 0");

  ConvexField u = ConvexField::dirichlet(grid, domain);
  const Scheme scheme(u, options.stencil_width);
  const std::size_t count = scheme.nodes.size();
  const int n = grid.dim();
  if (count == 0) throw Error(ErrorCode::InsufficientStencil, "no interior nodes");

  Eigen::VectorXd f(count);
  for (std::size_t r = 0; r < count; ++r) {
    f(r) = rhs(grid.point(scheme.nodes[r]));
    const bool below = rhs.measure ? f(r) < 0.0 : f(r) < rhs.lambda * (1.0 - 1e-12);
    if (below || !std::isfinite(f(r)))
      throw Error(ErrorCode::DegenerateRhs, "right-hand side leaves its pinching interval");
  }
  const double f_mean = std::max(f.mean(), 1e-12);
  const double weight_floor = 1e-3 * std::pow(f_mean, 1.0 / n);

  auto axis_dir = [&](int a) {
    Index3 e{0, 0, 0};
    e[a] = 1;
    return static_cast<int>(std::find(scheme.directions.begin(), scheme.directions.end(), e) -
                            scheme.directions.begin());
  };

  using Triplet = Eigen::Triplet<double>;
  auto add_row = [&](std::vector<Triplet>& t, std::size_t r, const DirectionalStencil& st, double w) {
    t.emplace_back(r, r, w * st.w_center);
    if (st.plus && scheme.unknown[*st.plus] >= 0) t.emplace_back(r, scheme.unknown[*st.plus], w * st.w_plus);
    if (st.minus && scheme.unknown[*st.minus] >= 0)
      t.emplace_back(r, scheme.unknown[*st.minus], w * st.w_minus);
  };

  bool initialized = false;
  if (const auto coarse = coarsened(grid, options.coarsest_nodes)) {
    try {
      const ConvexField cu = solve_dirichlet(*coarse, domain, rhs, options).first;
      prolong(cu, u);
      initialized = true;
    } catch (const Error&) {
      // Fall back to the Poisson guess below.
    }
  }
  if (!initialized) {
    // Poisson initial guess: Laplacian u = n f^{1/n}.
    std::vector<Triplet> t;
    Eigen::VectorXd b(count);
    for (std::size_t r = 0; r < count; ++r) {
      for (int a = 0; a < n; ++a) add_row(t, r, scheme.stencils[r * scheme.dir_count() + axis_dir(a)], 1.0);
      b(r) = n * std::pow(f(r), 1.0 / n);
    }
    Eigen::SparseMatrix<double> lap(count, count);
    lap.setFromTriplets(t.begin(), t.end());
    const Eigen::VectorXd x = linear_solve(lap, b);
    for (std::size_t r = 0; r < count; ++r) u.values[scheme.nodes[r]] = x(r);

  }

  Eigen::VectorXd f_root(count);
  for (std::size_t r = 0; r < count; ++r) f_root(r) = std::pow(f(r), 1.0 / n);
  std::vector<int> active(count);
  std::vector<double> diffs(count * 3);
  auto root_residual = [&](const std::vector<double>& vals, Eigen::VectorXd& res) {
    for (std::size_t r = 0; r < count; ++r)
      res(r) = scheme.evaluate(vals, r, &active[r], &diffs[3 * r], true) - f_root(r);
  };
  auto det_residual = [&](const std::vector<double>& vals) {
    double worst = 0.0, l1 = 0.0;
    for (std::size_t r = 0; r < count; ++r) {
      const double e = std::abs(scheme.evaluate(vals, r, nullptr, nullptr) - f(r));
      worst = std::max(worst, e);
      l1 += e;
    }
    return std::pair{worst, l1 * grid.cell_volume()};
  };

  Eigen::VectorXd res(count);
  root_residual(u.values, res);
  auto det_res = det_residual(u.values);
  SolveReport report;
  report.stencil_width = options.stencil_width;
  report.stencil_directions = static_cast<int>(scheme.dir_count());
  int iter = 0;
  std::vector<double> trial(u.values.size());
  Eigen::VectorXd trial_res(count);
  while (det_res.first > options.tol) {
    if (iter >= options.max_iterations)
      throw Error(ErrorCode::NonConvergence, "Newton stopped after " + std::to_string(iter) +
                                                 " iterations, residual " + std::to_string(det_res.first));
    std::vector<Triplet> t;
    t.reserve(count * 3 * 5);
    for (std::size_t r = 0; r < count; ++r) {
      const auto& ids = scheme.frame_dirs[active[r]];
      const double* d = &diffs[3 * r];
      const std::size_t k = ids.size();
      double prod = 1.0;
      for (std::size_t j = 0; j < k; ++j) prod *= std::max(d[j], 0.0);
      const double mean = std::pow(prod, 1.0 / k);
      for (std::size_t j = 0; j < k; ++j) {
        // d/dd_j of (prod d^+)^{1/k} - sum d^-.
        double w = d[j] > 0.0 ? mean / (k * d[j]) : 1.0;
        w = std::max(w, weight_floor);
        add_row(t, r, scheme.stencils[r * scheme.dir_count() + ids[j]], w * scheme.inv_len2[ids[j]]);
      }
    }
    Eigen::SparseMatrix<double> jac(count, count);
    jac.setFromTriplets(t.begin(), t.end());
    const Eigen::VectorXd step = linear_solve(jac, -res);

    const double merit = res.norm();
    double theta = 1.0;
    double best_theta = 0.0;
    double best_merit = std::numeric_limits<double>::infinity();
    for (;;) {
      trial = u.values;
      for (std::size_t r = 0; r < count; ++r) trial[scheme.nodes[r]] += theta * step(r);
      root_residual(trial, trial_res);
      const double m = trial_res.norm();
      if (m < best_merit) {
        best_merit = m;
        best_theta = theta;
      }
      if (m <= (1.0 - 1e-4 * theta) * merit || theta <= options.min_step) break;
      theta *= 0.5;
    }
    for (std::size_t r = 0; r < count; ++r) u.values[scheme.nodes[r]] += best_theta * step(r);
    root_residual(u.values, res);
    det_res = det_residual(u.values);
    ++iter;
  }

  report.iterations = iter;
  report.residual = det_res.first;
  report.residual_l1 = det_res.second;
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(u), report};
}

ConvexField radial_reference(const Grid& grid, double radius, double c) {
  DomainSpec ball;
  ball.dim = grid.dim();
  ball.is_ball = true;
  ball.radius = radius;
  ball.contains_unit_ball = radius >= 1.0;
  ball.inside_n_ball = radius <= grid.dim();
  ConvexField u = ConvexField::dirichlet(grid, ball);
  const double scale = std::pow(c, 1.0 / grid.dim());
  for (std::size_t i = 0; i < grid.count(); ++i)
    if (u.interior[i]) u.values[i] = 0.5 * scale * (grid.point(i).squaredNorm() - radius * radius);
  return u;
}

}  // namespace malab
