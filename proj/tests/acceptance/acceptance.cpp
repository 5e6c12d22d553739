// Acceptance run: one PASS/FAIL line per criterion, details indented below it.
// Exit status is the number of failing criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "malab/cli_reports/runner.hpp"
#include "malab/degenerate_mu/doubling.hpp"
#include "malab/degenerate_mu/pipeline.hpp"
#include "malab/error.hpp"
#include "malab/ma_solver/solver.hpp"
#include "malab/ma_solver/wang.hpp"
#include "malab/regularity_lab/lemmas.hpp"
#include "malab/regularity_lab/levels.hpp"
#include "malab/sections/engulfing.hpp"
#include "malab/sections/normalization.hpp"
#include "malab/sections/vitali.hpp"

using namespace malab;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;
  void note(const std::string& s) { notes.push_back(s); }
  void require(bool ok, const std::string& s) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + s);
  }
};

// A field ready for analysis: values, Hessian, analysis region and the nodes sections may use.
struct Fixture {
  std::string name;
  ConvexField u;
  HessianField H;
  Region region;
  std::vector<std::uint8_t> allowed;
};

const DomainSpec& disc() {
  static const DomainSpec d = build_domain(ShapeDescriptor::ball(2));
  return d;
}

Fixture solved(const std::string& name, const RhsSpec& rhs, int nodes) {
  Fixture f;
  f.name = name + "@" + std::to_string(nodes);
  f.u = solve_dirichlet(domain_grid(disc(), nodes), disc(), rhs).first;
  f.H = discrete_hessian(f.u);
  f.region = interior_region(f.u);
  f.allowed = f.u.interior;
  return f;
}

constexpr double kWangLevel = 1.0 / 16;

const WangSolution& wang(double alpha) {
  static std::map<double, WangSolution> cache;
  auto it = cache.find(alpha);
  if (it == cache.end()) it = cache.emplace(alpha, wang_construct(alpha).scaled(kWangLevel)).first;
  return it->second;
}

// Wang field on its base section {u < 1/16}; sections may reach {u < 1/8}.
Fixture wang_fixture(double alpha, double spacing) {
  const Vec lo = make_vec(-1.05, -1.0), hi = make_vec(1.05, 1.0);
  Fixture f;
  f.name = fmt("wang(%g)@s=%g", alpha, spacing);
  f.u = wang_field(wang(alpha), Grid::box(lo, hi, spacing), box_domain(lo, hi));
  f.H = discrete_hessian(f.u);
  f.region = sublevel_region(f.u, kWangLevel);
  f.allowed = sublevel_region(f.u, 2 * kWangLevel).mask;
  return f;
}

// Fixtures are expensive; build each once.
struct Fields {
  std::map<std::string, Fixture> cache;
  const Fixture& get(const std::string& key, const std::function<Fixture()>& make) {
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, make()).first;
    return it->second;
  }
  const Fixture& radial(int n) { return get("r" + std::to_string(n), [=] { return solved("radial", RhsSpec::constant(1.0), n); }); }
  const Fixture& oscillatory(int n) {
    return get("o" + std::to_string(n), [=] { return solved("oscillatory", RhsSpec::oscillatory(0.9, 4), n); });
  }
  const Fixture& wang_at(double alpha, double s) {
    return get(fmt("w%g/%g", alpha, s), [=] { return wang_fixture(alpha, s); });
  }
};

Fields fields;

std::size_t node_near(const ConvexField& u, double x, double y) { return *u.grid.nearest(make_vec(x, y)); }

// ---------------------------------------------------------------------------

Outcome solver_correctness() {
  Outcome o;
  std::vector<double> s, err;
  for (int n : {65, 129, 257}) {
    const auto t = Clock::now();
    const auto [u, rep] = solve_dirichlet(domain_grid(disc(), n), disc(), RhsSpec::constant(1.0));
    const double secs = seconds_since(t);
    double e = 0.0;
    for (std::size_t i = 0; i < u.grid.count(); ++i)
      if (u.interior[i]) e = std::max(e, std::abs(u[i] - 0.5 * (u.grid.point(i).squaredNorm() - 1.0)));
    s.push_back(u.grid.spacing());
    err.push_back(e);
    o.require(secs < 300.0, fmt("%d nodes: max error %.3e, %d Newton steps, %.2f s", n, e, rep.iterations, secs));
  }
  // Bound with C = 1, q = 1: error <= s on every grid.
  for (std::size_t k = 0; k < s.size(); ++k)
    o.require(err[k] <= s[k], fmt("error %.3e <= 1 * s^1 = %.3e", err[k], s[k]));
  const double floor = 1e-12;
  if (err.front() > floor && err.back() > floor) {
    const double q = std::log(err.front() / err.back()) / std::log(s.front() / s.back());
    o.require(q >= 1.0, fmt("fitted order q = %.3f", q));
  } else {
    o.note("errors at round-off level, the scheme is exact on quadratics; fitted order undefined");
  }
  return o;
}

Outcome normalized_size() {
  Outcome o;
  {
    const ConvexField u = ConvexField::sample(domain_grid(disc(), 241), disc(), [](const Vec& x) {
      return 2.0 * x(0) * x(0) + x(1) * x(1) / 8.0 - 1.0;
    });
    const Normalization nz = john_normalize(compute_section(u, node_near(u, 0, 0), 0.02));
    o.require(std::abs(nz.alpha / 4.0 - 1.0) <= 0.05, fmt("diag(4,1/4): alpha = %.5f (4 within 5%%)", nz.alpha));
    o.require(std::abs(nz.A.determinant() - 1.0) <= 1e-10,
              fmt("diag(4,1/4): |det A - 1| = %.2e (<= 1e-10)", std::abs(nz.A.determinant() - 1.0)));
  }
  {
    // |x|^4/4 + |x|^2/2 at x0 = (1/2, 0): eigenvalues 3r^2 + 1 = 7/4 and r^2 + 1 = 5/4.
    const ConvexField u = ConvexField::sample(domain_grid(disc(), 401), disc(), [](const Vec& x) {
      const double r2 = x.squaredNorm();
      return 0.25 * r2 * r2 + 0.5 * r2 - 0.75;
    });
    const double norm = 1.75, det_root = std::sqrt(1.75 * 1.25);
    std::vector<double> heights;
    for (int k = 4; k <= 16; ++k) heights.push_back(std::ldexp(1.0, -k));
    const auto curve = normalized_size_curve(u, node_near(u, 0.5, 0.0), heights);
    if (curve.size() < 2) {
      o.require(false, "quartic: fewer than two resolvable heights");
      return o;
    }
    std::vector<SizeSample> sorted = curve;
    std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.height < b.height; });
    for (int k = 0; k < 2; ++k) {
      const auto& c = sorted[k];
      const double ratio = c.alpha / norm;
      o.require(std::abs(ratio - 1.0) <= 0.10,
                fmt("quartic h = 2^%d: alpha / |D^2u(x0)| = %.4f (1 within 10%%)", int(std::log2(c.height)), ratio));
      o.note(fmt("      same h: alpha * sqrt(det D^2u) / |D^2u| = %.4f; a unit-determinant A makes this the limit",
                 c.alpha * det_root / norm));
    }
  }
  return o;
}

// Largest dyadic height whose section avoids the boundary and stays in `allowed`.
std::optional<double> admissible_height(const Fixture& f, std::size_t x) {
  double range = 0.0;
  for (std::size_t i = 0; i < f.u.grid.count(); ++i)
    if (f.u.interior[i]) range = std::max(range, std::abs(f.u[i]));
  const double h0 = dyadic_floor(4.0 * range);
  auto inside = [&](int j) {
    const Section s = compute_section(f.u, x, std::ldexp(h0, -j), {.allow_unresolved = true});
    if (s.touches_boundary) return false;
    for (std::size_t i : s.nodes)
      if (!f.allowed[i]) return false;
    return true;
  };
  int lo = 0, hi = 60;
  if (!inside(hi)) return std::nullopt;
  if (inside(lo)) return h0;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    (inside(mid) ? hi : lo) = mid;
  }
  if (compute_section(f.u, x, std::ldexp(h0, -hi), {.allow_unresolved = true}).nodes.size() < 5) return std::nullopt;
  return std::ldexp(h0, -hi);
}

// D_1 for M = 2, or a sparse lattice of the region when D_1 is empty.
std::vector<std::size_t> cover_targets(const Fixture& f) {
  const LevelDecomposition d = level_decompose(f.H, f.region, 2.0);
  if (d.levels() > 1 && !d.sets[1].empty()) return d.sets[1];
  std::vector<std::size_t> t;
  const int stride = std::max(1, f.u.grid.size()[0] / 16);
  for (std::size_t i = 0; i < f.u.grid.count(); ++i) {
    const Index3 c = f.u.grid.coords(i);
    if (f.region.mask[i] && c[0] % stride == 0 && c[1] % stride == 0) t.push_back(i);
  }
  return t;
}

Outcome engulfing_and_vitali() {
  Outcome o;
  const ConvexField q = ConvexField::sample(domain_grid(disc(), 129), disc(),
                                            [](const Vec& x) { return 0.5 * x.squaredNorm() - 0.5; });
  const DeltaEstimate est = estimate_delta(q);
  o.require(est.delta >= 1.0 / 16, fmt("|x|^2/2: delta = %g over %zu pairs (>= 1/16)", est.delta, est.pairs));

  for (const Fixture* f : {&fields.radial(129), &fields.oscillatory(129), &fields.wang_at(3.0, 0.004)}) {
    const auto targets = cover_targets(*f);
    const VitaliCover cov =
        vitali_cover_search(f->u, targets, [&](std::size_t x) { return admissible_height(*f, x); }, 1.0 / 16);
    std::size_t overlaps = 0, uncovered = 0;
    for (std::size_t a = 0; a < cov.selected.size(); ++a)
      for (std::size_t b = a + 1; b < cov.selected.size(); ++b)
        overlaps += sections_intersect(cov.selected[a].shrunk, cov.selected[b].shrunk);
    for (std::size_t t : targets) {
      bool hit = false;
      for (const auto& e : cov.selected) hit = hit || e.full.contains(t);
      uncovered += !hit;
    }
    o.require(overlaps == 0 && uncovered == 0,
              fmt("%s: %zu sections over %zu targets, %zu overlapping shrunk pairs, %zu uncovered (%zu excluded)",
                  f->name.c_str(), cov.selected.size(), targets.size(), overlaps, uncovered, cov.excluded.size()));
  }
  return o;
}

Outcome basic_lemmas() {
  Outcome o;
  struct Case {
    const Fixture* coarse;
    const Fixture* fine;
    double x, y, h;
  };
  const std::vector<Case> cases{
      {&fields.radial(129), &fields.radial(257), 0.2, 0.1, 1.0 / 32},
      {&fields.oscillatory(129), &fields.oscillatory(257), 0.2, 0.1, 1.0 / 32},
      {&fields.wang_at(3.0, 0.004), &fields.wang_at(3.0, 0.002), 0.3, 0.05, 1.0 / 256},
  };
  for (const Case& c : cases) {
    std::vector<double> C0;
    for (const Fixture* f : {c.coarse, c.fine}) {
      try {
        const std::size_t x0 = node_near(f->u, c.x, c.y);
        const Section s = compute_section(f->u, x0, c.h);
        const Section outer = compute_section(f->u, x0, 2.0 * c.h);
        const ScReport r = lemma_basic_sc_check(f->u, f->H, s, outer, john_normalize(s));
        C0.push_back(r.C0);
        o.require(r.passed, fmt("%s: alpha %.3f, C0 = %g, routes differ by %.2e (integral) and %.2e (good set)",
                                f->name.c_str(), r.alpha, r.C0, r.lhs_difference, r.good_difference));
      } catch (const Error& e) {
        o.require(false, f->name + ": " + e.what());
      }
    }
    if (C0.size() == 2)
      o.require(C0[1] / C0[0] >= 0.5 && C0[1] / C0[0] <= 2.0,
                fmt("%s: C0 %g -> %g under refinement (one dyadic step allowed)", c.coarse->name.c_str(), C0[0], C0[1]));
  }
  return o;
}

Outcome geometric_decay() {
  Outcome o;
  const Fixture& f = fields.oscillatory(257);
  double top = 0.0;
  for (std::size_t i = 0; i < f.H.grid.count(); ++i)
    if (f.region.mask[i] && f.H.usable(i)) top = std::max(top, f.H.norm[i]);
  o.note(fmt("%s: max |D^2u| on the region = %.3f", f.name.c_str(), top));
  for (double M : {2.0, 4.0, 8.0, 16.0}) {
    const LevelDecomposition d = level_decompose(f.H, f.region, M);
    const DecayReport r = decay_iterate(f.u, f.H, d);
    o.require(r.tau > 0.0 && r.monotone,
              fmt("M = %g: %d levels, tau = %.4f, energies strictly decreasing over >= 3 levels: %s", M, d.levels(),
                  r.tau, r.monotone ? "yes" : "no"));
  }
  return o;
}

Outcome log_tail() {
  Outcome o;
  const std::vector<std::pair<const Fixture*, const Fixture*>> pairs{
      {&fields.radial(129), &fields.radial(257)},
      {&fields.oscillatory(129), &fields.oscillatory(257)},
      {&fields.wang_at(3.0, 0.004), &fields.wang_at(3.0, 0.002)},
  };
  for (const auto& [a, b] : pairs) {
    const TailReport ta = tail_bound_check(level_decompose(a->H, a->region, 2.0));
    const TailReport tb = tail_bound_check(level_decompose(b->H, b->region, 2.0));
    if (ta.trivial && tb.trivial) {
      o.require(true, a->name + ": no resolvable F_K with K >= 2 on either grid, any c works");
      continue;
    }
    const bool finite = std::isfinite(ta.uniform_c) && std::isfinite(tb.uniform_c) && ta.uniform_c > 0;
    const double change = finite ? std::abs(tb.uniform_c / ta.uniform_c - 1.0) : INFINITY;
    o.require(finite && change <= 0.25, fmt("%s: c = %.4g -> %.4g (change %.1f%%, <= 25%%), K up to %.3g, slope %.3f",
                                            a->name.c_str(), ta.uniform_c, tb.uniform_c, 100 * change,
                                            tb.K.empty() ? 0.0 : tb.K.back(), tb.slope));
  }
  return o;
}

std::optional<double> measure_epsilon(const Fixture& f, double M) {
  try {
    return measure_decay_check(level_decompose(f.H, f.region, M)).epsilon;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InsufficientLevels) throw;
    return std::nullopt;
  }
}

double refinement_epsilon(double alpha) {
  const Fixture& a = fields.wang_at(alpha, 0.008);
  const Fixture& b = fields.wang_at(alpha, 0.004);
  const Fixture& c = fields.wang_at(alpha, 0.002);
  return epsilon_estimate({{&a.H, &a.region}, {&b.H, &b.region}, {&c.H, &c.region}}).epsilon;
}

Outcome measure_decay_and_epsilon() {
  Outcome o;
  for (const Fixture* f : {&fields.radial(257), &fields.oscillatory(257)}) {
    const auto e = measure_epsilon(*f, 2.0);
    if (e)
      o.require(*e > 0.0, fmt("%s, M = 2: eps_fit = %.4f (> 0)", f->name.c_str(), *e));
    else
      o.require(true, f->name + ": fewer than 3 nonempty levels, |D^2u| is bounded so every eps is admissible");
  }
  // Default M = 4; s = 0.001 is the coarsest spacing resolving three levels for alpha = 3.
  const auto e3 = measure_epsilon(fields.wang_at(3.0, 0.001), 4.0);
  const double est3 = refinement_epsilon(3.0);
  auto bracket = [](double v) { return v >= 0.5 && v <= 2.0; };
  o.require(e3 && bracket(*e3), fmt("wang(3), M = 4: eps_fit = %.4f (in [1/2, 2])", e3.value_or(NAN)));
  o.require(bracket(est3), fmt("wang(3): epsilon_estimate = %g (in [1/2, 2])", est3));
  const auto e9 = measure_epsilon(fields.wang_at(9.0, 0.001), 4.0);
  const double est9 = refinement_epsilon(9.0);
  o.require(e9 && e3 && *e9 < *e3, fmt("wang(9), M = 4: eps_fit = %.4f < %.4f", e9.value_or(NAN), e3.value_or(NAN)));
  o.require(est9 < est3, fmt("wang(9): epsilon_estimate = %g < %g", est9, est3));
  return o;
}

Outcome layer_cake() {
  Outcome o;
  for (const Fixture* f : {&fields.radial(257), &fields.oscillatory(257), &fields.wang_at(3.0, 0.002),
                           &fields.wang_at(9.0, 0.002)}) {
    double worst = 0.0;
    int tested = 0;
    for (double eps : {1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0, 2.0}) {
      const W21Norm w = w21eps_norm(f->H, f->region, eps, INFINITY);
      if (!std::isfinite(w.direct) || !std::isfinite(w.layer_cake)) continue;
      worst = std::max(worst, w.relative_difference);
      ++tested;
    }
    o.require(tested > 0 && worst <= 0.01,
              fmt("%s: worst relative difference %.2e over %d exponents (<= 1%%)", f->name.c_str(), worst, tested));
  }
  return o;
}

Outcome degenerate_measures() {
  Outcome o;
  const Grid g = domain_grid(disc(), 65);
  for (double a : {1.0, 2.0, 4.0}) {
    const MuInftyReport r = check_doubling(MeasureSpec::coordinate_power(2, 0, a), disc(), g);
    o.require(r.beta <= 1.0 + a + 0.25 && r.certified(),
              fmt("|x1|^%g: beta = %.3f (<= %.2f), gamma = %.4f over %d sets", a, r.beta, a + 1.25, r.gamma, r.sets));
  }
  std::vector<std::pair<Mat, Vec>> maps;
  for (const auto& [m, b] : std::vector<std::pair<std::array<double, 4>, std::array<double, 2>>>{
           {{2.0, 0.0, 0.0, 0.5}, {0.1, -0.2}}, {{1.0, 0.7, 0.0, 1.0}, {-0.3, 0.0}}, {{1.2, -0.4, 0.5, 1.0}, {0.0, 0.25}}}) {
    Mat T(2, 2);
    T << m[0], m[1], m[2], m[3];
    T /= std::sqrt(std::abs(T.determinant()));
    maps.emplace_back(T, make_vec(b[0], b[1]));
  }
  DoublingOptions opt;
  opt.sets = 60;
  const AffineInvariance inv = affine_invariance_check(MeasureSpec::coordinate_power(2, 0, 2.0), disc(), g, maps, opt);
  o.require(inv.mass_ratio_difference <= 1e-12 && inv.volume_ratio_difference <= 1e-12,
            fmt("affine maps: %d maps, %zu pairs, mass ratio difference %.2e, volume ratio difference %.2e", inv.maps,
                inv.pairs, inv.mass_ratio_difference, inv.volume_ratio_difference));
  try {
    const Thm2Report r = thm2_pipeline(disc(), MeasureSpec::coordinate_power(2, 0, 1.0));
    o.require(std::isfinite(r.epsilon) && r.epsilon > 0.0,
              fmt("|x1| pipeline: eps_fit = %.4f, beta = %.3f, M_eff = %.3f", r.epsilon, r.doubling.beta, r.M_eff));
  } catch (const Error& e) {
    o.require(false, std::string("|x1| pipeline: ") + e.what());
  }
  return o;
}

std::map<std::string, std::string> snapshot(const fs::path& dir, const RunManifest& m) {
  std::map<std::string, std::string> files;
  for (const auto& f : m.files) {
    std::ifstream in(dir / f, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    files[f] = ss.str();
  }
  return files;
}

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "malab_acceptance_runs";
  fs::remove_all(root);
  fs::path measure = root / "x1.json";
  fs::create_directories(root);
  std::ofstream(measure) << MeasureSpec::coordinate_power(2, 0, 1.0).to_json().dump();
  const std::vector<std::string> configs{
      "problem: radial\n", "problem: oscillatory\n", "problem: wang\n", "problem: mu\nmu:\n  spec: x1.json\n"};
  double total = 0.0;
  for (const auto& text : configs) {
    ExperimentConfig c = ExperimentConfig::from_yaml(text, root.string());
    std::map<std::string, std::string> first;
    for (int rep = 0; rep < 2; ++rep) {
      c.output = (root / (to_string(c.problem) + std::to_string(rep))).string();
      const auto t = Clock::now();
      const RunManifest m = run(c);
      const double secs = seconds_since(t);
      if (rep == 0) {
        total += secs;
        first = snapshot(c.output, m);
      } else {
        const auto second = snapshot(c.output, m);
        o.require(first == second, fmt("%s: %zu files, byte identical on rerun, %.1f s", c.selector().c_str(),
                                       first.size(), secs));
      }
    }
  }
  o.require(total < 1800.0, fmt("default suite (4 problems, default grids): %.1f s (< 30 min)", total));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"solver correctness on the unit disc", solver_correctness},
      {"normalized size consistency", normalized_size},
      {"engulfing and Vitali covers", engulfing_and_vitali},
      {"basic and rescaled inequalities", basic_lemmas},
      {"geometric decay on oscillatory data", geometric_decay},
      {"L log L tail", log_tail},
      {"measure decay and epsilon", measure_decay_and_epsilon},
      {"layer-cake identity", layer_cake},
      {"degenerate measures", degenerate_measures},
      {"determinism and runtime", determinism},
  };
  int failed = 0;
  const auto start = Clock::now();
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t = Clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.require(false, std::string("unexpected error: ") + e.what());
    }
    failed += !o.pass;
    std::printf("criterion %2zu: %s  %s (%.1f s)\n", k + 1, o.pass ? "PASS" : "FAIL", criteria[k].first.c_str(),
                seconds_since(t));
    for (const auto& n : o.notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed in %.1f s\n", int(criteria.size()) - failed, criteria.size(),
              seconds_since(start));
  return failed;
}
