#include "malab/degenerate_mu/doubling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/QR>

#include "malab/error.hpp"

namespace malab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

double uniform(Rng& rng, double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

Vec random_direction(Rng& rng, int n) {
  std::normal_distribution<double> g;
  Vec v(n);
  do {
    for (int a = 0; a < n; ++a) v(a) = g(rng);
  } while (v.norm() < 1e-8);
  return v / v.norm();
}

Mat random_rotation(Rng& rng, int n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) m(r, c) = g(rng);
  return Mat(Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ());
}

Vec random_point_in(Rng& rng, const DomainSpec& domain, double margin) {
  const double R = domain.circumradius();
  Vec x(domain.dim);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    for (int a = 0; a < domain.dim; ++a) x(a) = uniform(rng, -R, R);
    if (domain.signed_distance(x) <= -margin) return x;
  }
  throw Error(ErrorCode::Unsupported, "cannot sample points inside the domain");
}

SampledSet random_ellipsoid(Rng& rng, const Vec& center, double min_axis, double max_axis) {
  const int n = static_cast<int>(center.size());
  const Mat R = random_rotation(rng, n);
  Vec inv(n);
  for (int a = 0; a < n; ++a) inv(a) = 1.0 / std::pow(uniform(rng, min_axis, max_axis), 2);
  SampledSet s;
  s.kind = SampledSet::Kind::Ellipsoid;
  s.center = center;
  s.shape = R * inv.asDiagonal() * R.transpose();
  return s;
}

struct Pair {
  int set;
  SampledSet subset;
};

struct Plan {
  std::vector<SampledSet> sets;
  std::vector<Pair> pairs;
};

std::vector<std::size_t> members(const SampledSet& s, const Grid& grid, const MeasureField& field,
                                 const MeasureSpec& spec) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < grid.count(); ++i)
    if (field.inside[i] && s.contains(grid.point(i), i, spec)) out.push_back(i);
  return out;
}

// Threshold with a fraction q of the projections below it, placed halfway between two
// projections so that no node sits on the boundary.
double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const std::size_t k = std::min(v.size() - 1, static_cast<std::size_t>(q * static_cast<double>(v.size())));
  std::size_t next = k + 1;
  while (next < v.size() && v[next] == v[k]) ++next;
  return next < v.size() ? 0.5 * (v[k] + v[next]) : v[k] + 1.0;
}

Plan make_plan(const MeasureSpec& spec, const DomainSpec& domain, const Grid& grid, const MeasureField& field,
               const DoublingOptions& o) {
  Rng rng(o.seed);
  const int n = domain.dim;
  const double R = domain.circumradius();
  Plan plan;
  for (int k = 0; k < o.sets; ++k) {
    SampledSet S;
    std::vector<std::size_t> nodes;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 1000) throw Error(ErrorCode::Unsupported, "cannot sample sets with enough nodes");
      if (k % 2 == 0) {
        S = random_ellipsoid(rng, random_point_in(rng, domain, 0.05 * R), 0.1 * R, 0.7 * R);
      } else {
        S = SampledSet{};
        S.kind = SampledSet::Kind::Simplex;
        for (int v = 0; v <= n; ++v) S.vertices.push_back(random_point_in(rng, domain, 0.0));
      }
      nodes = members(S, grid, field, spec);
      if (static_cast<int>(nodes.size()) >= o.min_set_nodes) break;
    }
    plan.sets.push_back(S);
    std::vector<Vec> pts;
    for (std::size_t i : nodes) pts.push_back(grid.point(i));

    int made = 0;
    auto add = [&](SampledSet e) {
      plan.pairs.push_back({k, std::move(e)});
      ++made;
    };
    // Slabs around each zero set, halving the width until no node is left. Widths carry
    // a factor 2^{-1/2} so they do not coincide with grid values of P.
    for (std::size_t t = 0; t < spec.terms.size(); ++t) {
      const MeasureTerm& term = spec.terms[t];
      if (term.exponent == 0.0 || term.P.constant()) continue;
      double pmax = 0.0;
      for (const Vec& x : pts) pmax = std::max(pmax, std::abs(term.P(spec.pull_back(x))));
      for (int j = 0; j < 40; ++j) {
        SampledSet e;
        e.kind = SampledSet::Kind::Slab;
        e.term = static_cast<int>(t);
        e.width = std::ldexp(pmax * std::sqrt(0.5), -j);
        bool any = false;
        for (std::size_t q = 0; q < pts.size() && !any; ++q) any = e.contains(pts[q], nodes[q], spec);
        if (!any) break;
        add(e);
      }
    }
    for (int j = 0; made < o.subsets; ++j) {
      SampledSet e;
      switch (j % 4) {
        case 0: {
          e.kind = SampledSet::Kind::Halfspace;
          e.normal = random_direction(rng, n);
          std::vector<double> proj;
          for (const Vec& x : pts) proj.push_back(e.normal.dot(x));
          e.lo = -kInf;
          e.hi = quantile(proj, uniform(rng, 0.02, 0.98));
          break;
        }
        case 1: {
          const Vec& c = pts[std::uniform_int_distribution<std::size_t>(0, pts.size() - 1)(rng)];
          e = random_ellipsoid(rng, c, 0.03 * R, 0.4 * R);
          break;
        }
        case 2: {
          e.kind = SampledSet::Kind::Strips;
          e.normal = random_direction(rng, n);
          std::vector<double> proj;
          for (const Vec& x : pts) proj.push_back(e.normal.dot(x));
          const double a = uniform(rng, 0.05, 0.95), b = uniform(rng, 0.05, 0.95);
          e.lo = quantile(proj, std::min(a, b));
          e.hi = quantile(proj, std::max(a, b));
          break;
        }
        default:
          e.kind = SampledSet::Kind::Bernoulli;
          e.probability = uniform(rng, 0.05, 0.95);
          e.key = rng();
      }
      add(e);
    }
  }
  return plan;
}

// Ratios of every planned pair under masses `field` and membership in coordinates given by
// node_point (identity or the moved node).
template <class PointFn>
std::vector<DoublingSample> evaluate(const Plan& plan, const std::vector<SampledSet>& sets,
                                     const std::vector<SampledSet>& subsets, const MeasureSpec& spec,
                                     const MeasureField& field, PointFn node_point) {
  const Grid& grid = field.grid;
  std::vector<DoublingSample> out;
  out.reserve(plan.pairs.size());
  std::size_t p = 0;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    std::vector<std::size_t> nodes;
    std::vector<Vec> pts;
    for (std::size_t i = 0; i < grid.count(); ++i) {
      if (!field.inside[i]) continue;
      Vec x = node_point(i);
      if (sets[k].contains(x, i, spec)) {
        nodes.push_back(i);
        pts.push_back(std::move(x));
      }
    }
    double mS = 0.0;
    for (std::size_t i : nodes) mS += field.mass[i];
    for (; p < plan.pairs.size() && plan.pairs[p].set == static_cast<int>(k); ++p) {
      const SampledSet& e = subsets[p];
      double mE = 0.0;
      std::size_t count = 0;
      for (std::size_t q = 0; q < nodes.size(); ++q) {
        if (!e.contains(pts[q], nodes[q], spec)) continue;
        mE += field.mass[nodes[q]];
        ++count;
      }
      if (count == 0) continue;
      DoublingSample s;
      s.set = static_cast<int>(k);
      s.set_kind = sets[k].name();
      s.subset_kind = e.name();
      s.volume_ratio = static_cast<double>(count) / static_cast<double>(nodes.size());
      s.mass_ratio = mS > 0.0 ? mE / mS : 0.0;
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace

bool SampledSet::contains(const Vec& x, std::size_t node, const MeasureSpec& spec) const {
  switch (kind) {
    case Kind::Ellipsoid: {
      const Vec d = x - center;
      return d.dot(shape * d) <= 1.0;
    }
    case Kind::Simplex: {
      const int n = static_cast<int>(x.size());
      Mat E(n, n);
      for (int a = 0; a < n; ++a) E.col(a) = vertices[a + 1] - vertices[0];
      const Vec lam = E.partialPivLu().solve(x - vertices[0]);
      return lam.minCoeff() >= 0.0 && lam.sum() <= 1.0;
    }
    case Kind::Halfspace: {
      const double t = normal.dot(x);
      return t >= lo && t <= hi;
    }
    case Kind::Strips: {
      const double t = normal.dot(x);
      return t <= lo || t >= hi;
    }
    case Kind::Slab:
      return std::abs(spec.terms[term].P(spec.pull_back(x))) <= width;
    case Kind::Bernoulli:
      return static_cast<double>(splitmix(key ^ splitmix(node)) >> 11) * 0x1.0p-53 < probability;
  }
  return false;
}

SampledSet SampledSet::mapped(const Mat& T, const Vec& b) const {
  SampledSet s = *this;
  const Mat Ti = T.inverse();
  switch (kind) {
    case Kind::Ellipsoid:
      s.center = T * center + b;
      s.shape = Ti.transpose() * shape * Ti;
      break;
    case Kind::Simplex:
      for (Vec& v : s.vertices) v = T * v + b;
      break;
    case Kind::Halfspace:
    case Kind::Strips: {
      s.normal = Ti.transpose() * normal;
      const double off = s.normal.dot(b);
      s.lo = lo + off;
      s.hi = hi + off;
      break;
    }
    case Kind::Slab:      // evaluated through the pushed-forward measure
    case Kind::Bernoulli:  // keyed by node
      break;
  }
  return s;
}

std::string SampledSet::name() const {
  switch (kind) {
    case Kind::Ellipsoid: return "ellipsoid";
    case Kind::Simplex: return "simplex";
    case Kind::Halfspace: return "halfspace";
    case Kind::Slab: return "slab";
    case Kind::Strips: return "strips";
    case Kind::Bernoulli: return "random";
  }
  return "";
}

bool MuInftyReport::certified() const {
  for (const DoublingSample& s : samples)
    if (s.mass_ratio < gamma * std::pow(s.volume_ratio, beta)) return false;
  return true;
}

nlohmann::json MuInftyReport::to_json(bool with_samples) const {
  auto sample_json = [](const DoublingSample& s) {
    return nlohmann::json{{"set", s.set},
                          {"set_kind", s.set_kind},
                          {"subset_kind", s.subset_kind},
                          {"volume_ratio", s.volume_ratio},
                          {"mass_ratio", s.mass_ratio}};
  };
  nlohmann::json j = {{"gamma", gamma},
                      {"beta", beta},
                      {"worst_ratio", worst_ratio},
                      {"worst", sample_json(worst)},
                      {"sets", sets},
                      {"pairs", samples.size()},
                      {"sampler", sampler}};
  if (with_samples) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : samples) arr.push_back(sample_json(s));
    j["samples"] = arr;
  }
  return j;
}

std::string MuInftyReport::csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "set,set_kind,subset_kind,volume_ratio,mass_ratio\n";
  for (const auto& s : samples)
    os << s.set << ',' << s.set_kind << ',' << s.subset_kind << ',' << s.volume_ratio << ',' << s.mass_ratio
       << '\n';
  return os.str();
}

MuInftyReport check_doubling(const MeasureSpec& spec, const DomainSpec& domain, const Grid& grid,
                             const DoublingOptions& o) {
  spec.validate();
  const MeasureField field = measure_field(spec, grid, domain);
  const Plan plan = make_plan(spec, domain, grid, field, o);
  std::vector<SampledSet> subsets;
  for (const Pair& p : plan.pairs) subsets.push_back(p.subset);

  MuInftyReport rep;
  rep.sets = static_cast<int>(plan.sets.size());
  rep.samples = evaluate(plan, plan.sets, subsets, spec, field, [&](std::size_t i) { return grid.point(i); });
  std::ostringstream desc;
  desc << o.sets << " sets (ellipsoids and simplices) x " << o.subsets
       << " subsets plus zero-set slabs, seed " << o.seed;
  rep.sampler = desc.str();

  // Least beta with q >= gamma_floor r^beta for every sample.
  double beta = 1.0;
  const double lg = std::log(o.gamma_floor);
  for (const DoublingSample& s : rep.samples) {
    if (s.volume_ratio >= 1.0) continue;
    if (!(s.mass_ratio > 0.0))
      throw Error(ErrorCode::PropertyViolated,
                  "a " + s.subset_kind + " subset of positive volume carries no mass");
    beta = std::max(beta, (lg - std::log(s.mass_ratio)) / (-std::log(s.volume_ratio)));
  }
  if (beta > o.beta_max)
    throw Error(ErrorCode::PropertyViolated,
                "fitted beta " + std::to_string(beta) + " exceeds the budget " + std::to_string(o.beta_max));
  rep.beta = beta;
  rep.worst_ratio = kInf;
  for (const DoublingSample& s : rep.samples) {
    const double v = s.mass_ratio / std::pow(s.volume_ratio, beta);
    if (v < rep.worst_ratio) {
      rep.worst_ratio = v;
      rep.worst = s;
    }
  }
  // Shaved so that the certificate survives recomputing the power.
  rep.gamma = rep.worst_ratio * (1.0 - 1e-12);
  return rep;
}

AffineInvariance affine_invariance_check(const MeasureSpec& spec, const DomainSpec& domain, const Grid& grid,
                                         const std::vector<std::pair<Mat, Vec>>& maps,
                                         const DoublingOptions& o) {
  spec.validate();
  const MeasureField field = measure_field(spec, grid, domain);
  const Plan plan = make_plan(spec, domain, grid, field, o);
  std::vector<SampledSet> subsets;
  for (const Pair& p : plan.pairs) subsets.push_back(p.subset);
  const auto base = evaluate(plan, plan.sets, subsets, spec, field, [&](std::size_t i) { return grid.point(i); });

  AffineInvariance out;
  out.pairs = base.size();
  for (const auto& [T, b] : maps) {
    if (std::abs(std::abs(T.determinant()) - 1.0) > 1e-9)
      throw Error(ErrorCode::Unsupported, "affine invariance is checked for unimodular maps only");
    const MeasureSpec moved = spec.pushed_forward(T, b);
    const MeasureField mf = measure_field(moved, grid, domain, T, b);
    std::vector<SampledSet> sets, subs;
    for (const auto& s : plan.sets) sets.push_back(s.mapped(T, b));
    for (const auto& s : subsets) subs.push_back(s.mapped(T, b));
    const auto m = evaluate(plan, sets, subs, moved, mf, [&](std::size_t i) -> Vec { return T * grid.point(i) + b; });
    ++out.maps;
    if (m.size() != base.size()) {
      out.volume_ratio_difference = kInf;
      out.mass_ratio_difference = kInf;
      continue;
    }
    for (std::size_t k = 0; k < m.size(); ++k) {
      out.mass_ratio_difference = std::max(out.mass_ratio_difference, std::abs(m[k].mass_ratio - base[k].mass_ratio));
      out.volume_ratio_difference =
          std::max(out.volume_ratio_difference, std::abs(m[k].volume_ratio - base[k].volume_ratio));
    }
  }
  return out;
}

}  // namespace malab
