#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "malab/error.hpp"
#include "malab/grid_convex/domain.hpp"
#include "malab/grid_convex/field.hpp"
#include "malab/ma_solver/wang.hpp"
#include "malab/regularity_lab/lemmas.hpp"
#include "malab/regularity_lab/levels.hpp"
#include "malab/regularity_lab/report.hpp"
#include "malab/sections/normalization.hpp"

using namespace malab;

namespace {

constexpr double kPi = std::numbers::pi;

// Hessian field with prescribed norms on a 1D strip of nodes.
HessianField synthetic(const std::vector<double>& norms) {
  HessianField h;
  h.grid = Grid(2, {static_cast<int>(norms.size()), 1, 1}, make_vec(0.0, 0.0), 1.0);
  h.norm = norms;
  h.entries.assign(3 * norms.size(), 0.0);
  for (std::size_t i = 0; i < norms.size(); ++i) h.entries[3 * i] = h.entries[3 * i + 2] = norms[i];
  h.valid.assign(norms.size(), 1);
  h.flagged.assign(norms.size(), 0);
  return h;
}

Region everything(std::size_t n) { return {std::vector<std::uint8_t>(n, 1), "all"}; }

ConvexField sampled(double radius, int nodes, const std::function<double(const Vec&)>& fn) {
  const DomainSpec d = build_domain(ShapeDescriptor::ball(2, radius));
  return ConvexField::sample(domain_grid(d, nodes), d, fn);
}

}  // namespace

TEST_SUITE("regularity_lab") {
  TEST_CASE("constant Hessian norm: only D_0 is nonempty") {
    const HessianField h = synthetic(std::vector<double>(100, 1.0));
    const auto d = level_decompose(h, everything(100), 2.0);
    REQUIRE(d.levels() == 1);
    CHECK(d.measure[0] == doctest::Approx(100.0));
    CHECK(d.energy[0] == doctest::Approx(100.0));
    const auto fixed = level_decompose(h, everything(100), 2.0, 3);
    REQUIRE(fixed.levels() == 4);
    for (int k = 1; k < 4; ++k) CHECK(fixed.measure[k] == 0.0);
    try {
      measure_decay_check(d);
      FAIL("expected InsufficientLevels");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InsufficientLevels);
    }
    CHECK(tail_bound_check(d).trivial);
  }

  TEST_CASE("K = 0 gives a single set with the full energy") {
    const HessianField h = synthetic({0.5, 1.0, 2.0, 3.0, 9.0, 1.5, 4.0});
    const auto d = level_decompose(h, everything(7), 4.0, 0);
    REQUIRE(d.levels() == 1);
    CHECK(d.energy[0] == doctest::Approx(1.0 + 2.0 + 3.0 + 9.0 + 1.5 + 4.0));
  }

  TEST_CASE("nesting and energies on random norms") {
    std::mt19937_64 rng(3);
    std::lognormal_distribution<double> dist(0.0, 2.0);
    std::vector<double> norms(5000);
    for (double& v : norms) v = dist(rng);
    const HessianField h = synthetic(norms);
    for (double M : {2.0, 4.0, 8.0, 16.0}) {
      const auto d = level_decompose(h, everything(norms.size()), M);
      for (int k = 0; k + 1 < d.levels(); ++k) {
        CHECK(std::includes(d.sets[k].begin(), d.sets[k].end(), d.sets[k + 1].begin(), d.sets[k + 1].end()));
        CHECK(d.energy[k + 1] <= d.energy[k]);
      }
      std::size_t big = 0;
      for (double v : norms) big += v >= 1.0;
      CHECK(d.sets[0].size() == big);
    }
  }

  TEST_CASE("measure decay inverts a synthetic geometric profile") {
    // |D_k| = 8^{-k} |D_0| with M^{1.2} = 8.
    const double M = std::pow(8.0, 1.0 / 1.2);
    std::vector<double> norms;
    const int counts[] = {2048 - 256, 256 - 32, 32 - 4, 4};
    for (int k = 0; k < 4; ++k)
      for (int j = 0; j < counts[k]; ++j) norms.push_back(std::pow(M, k) * 1.01);
    const auto d = level_decompose(synthetic(norms), everything(norms.size()), M);
    REQUIRE(d.levels() == 4);
    const auto md = measure_decay_check(d);
    CHECK(md.epsilon == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(md.levels == 4);
  }

  TEST_CASE("two-valued norm integral and layer-cake agreement") {
    std::vector<double> norms(300, 1.0);
    for (int i = 0; i < 50; ++i) norms[i] = 8.0;
    const HessianField h = synthetic(norms);
    const auto w = w21eps_norm(h, everything(300), 1.0 / 3.0);
    CHECK(w.direct == doctest::Approx(250.0 + 16.0 * 50.0));
    CHECK(w.relative_difference < 1e-3);
  }

  TEST_CASE("layer cake matches direct quadrature and is monotone in epsilon after clamping") {
    std::mt19937_64 rng(11);
    std::lognormal_distribution<double> dist(0.0, 1.5);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> norms(2000);
      for (double& v : norms) v = dist(rng);
      const HessianField h = synthetic(norms);
      double prev = 0.0;
      for (double e : {0.0, 0.125, 0.25, 0.5, 1.0, 2.0}) {
        const auto w = w21eps_norm(h, everything(norms.size()), e);
        CHECK(w.relative_difference < 0.01);
        const auto c = w21eps_norm(h, everything(norms.size()), e, 0.01, true);
        CHECK(c.direct >= prev);
        prev = c.direct;
      }
    }
  }

  TEST_CASE("mismatched layer cake is reported") {
    // A zero tolerance cannot absorb the quadrature error of a spread-out distribution.
    std::vector<double> norms;
    for (int i = 1; i <= 500; ++i) norms.push_back(1.0 + 0.37 * i);
    try {
      w21eps_norm(synthetic(norms), everything(norms.size()), 0.5, 0.0);
      FAIL("expected LayerCakeMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::LayerCakeMismatch);
    }
  }

  TEST_CASE("tail constants for an inverse-square distribution") {
    // |F_K| proportional to K^-2: sample norms with P(|D^2u| >= K) = K^-2 on [1, inf).
    std::vector<double> norms;
    const int n = 200000;
    for (int i = 0; i < n; ++i) norms.push_back(1.0 / std::sqrt((i + 0.5) / n));
    const auto d = level_decompose(synthetic(norms), everything(norms.size()), 4.0);
    const auto t = tail_bound_check(d, 64.0);
    REQUIRE(t.K.size() >= 3);
    CHECK(t.slope == doctest::Approx(-2.0).epsilon(0.02));
    // |F_K| K log K = n log(K) / K peaks at K = e and then falls: the bound gains margin.
    CHECK(t.constant.back() < t.constant.front());
    CHECK(t.uniform_c == doctest::Approx(n / std::exp(1.0)).epsilon(0.005));
  }

  TEST_CASE("epsilon estimate on a constant field and too few grids") {
    const HessianField h = synthetic(std::vector<double>(64, 1.0));
    const Region r = everything(64);
    const auto est = epsilon_estimate({{&h, &r}, {&h, &r}, {&h, &r}});
    CHECK(est.epsilon == 2.0);
    try {
      epsilon_estimate({{&h, &r}, {&h, &r}});
      FAIL("expected InsufficientLevels");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InsufficientLevels);
    }
  }

  TEST_CASE("Wang alpha = 3 level measures decay like M^{-2k}") {
    const WangSolution w = wang_construct(3.0).scaled(1.0 / 16);
    const DomainSpec box = box_domain(make_vec(-1.05, -1.0), make_vec(1.05, 1.0));
    const ConvexField u = wang_field(w, Grid::box(make_vec(-1.05, -1.0), make_vec(1.05, 1.0), 0.002), box);
    const HessianField H = discrete_hessian(u);
    const auto d = level_decompose(H, sublevel_region(u, 1.0 / 16), 2.0);
    REQUIRE(d.levels() >= 4);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = d.levels();
    for (int k = 0; k < d.levels(); ++k) {
      const double y = std::log(d.measure[k]) / std::log(2.0);
      sx += k, sy += y, sxx += double(k) * k, sxy += k * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(-slope == doctest::Approx(2.0).epsilon(0.15));
  }

  TEST_CASE("basic inequality on |x|^2/2 with its closed-form ingredients") {
    // S_1(0) is the disc of radius sqrt 2 and S_delta(0) the disc of radius sqrt(2 delta).
    const ConvexField u = sampled(2.0, 161, [](const Vec& x) { return 0.5 * x.squaredNorm() - 2.0; });
    const HessianField H = discrete_hessian(u);
    const Section base = compute_section(u, *u.grid.nearest(Vec::Zero(2)), 1.0);
    const auto r = lemma_basic_check(u, H, base, base, 1.0 / 16);
    CHECK(r.lhs == doctest::Approx(2.0 * kPi).epsilon(0.02));
    CHECK(r.laplacian_integral == doctest::Approx(2.0 * r.lhs).epsilon(1e-9));
    CHECK(r.core_measure == doctest::Approx(2.0 * kPi / 16).epsilon(0.05));
    // The balance point is C0 = 1 / delta; node counting may push it one step up.
    CHECK((r.C0 == 16.0 || r.C0 == 32.0));
    CHECK(r.low_measure >= 0.5 * r.core_measure);
  }

  TEST_CASE("scaled inequality: exact affine images on diag(4, 1/4)") {
    const ConvexField u = sampled(1.0, 201, [](const Vec& x) { return 2.0 * x(0) * x(0) + x(1) * x(1) / 8.0 - 1.0; });
    const HessianField H = discrete_hessian(u);
    const std::size_t c = *u.grid.nearest(Vec::Zero(2));
    const Section s = compute_section(u, c, 0.05);
    const Section outer = compute_section(u, c, 0.1);
    const auto r = lemma_basic_sc_check(u, H, s, outer, john_normalize(s));
    CHECK(r.alpha == doctest::Approx(4.0).epsilon(0.01));
    CHECK(r.lhs_difference < 0.01);
    CHECK(r.good_difference < 0.01);
    CHECK(r.passed);
  }

  TEST_CASE("scaled inequality reduces to the basic one when alpha = 1") {
    const ConvexField u = sampled(2.0, 161, [](const Vec& x) { return 0.5 * x.squaredNorm() - 2.0; });
    const HessianField H = discrete_hessian(u);
    const std::size_t c = *u.grid.nearest(Vec::Zero(2));
    const Section s = compute_section(u, c, 0.5);
    const auto basic = lemma_basic_check(u, H, s, s, 1.0 / 16);
    const auto sc = lemma_basic_sc_check(u, H, s, s, john_normalize(s));
    CHECK(sc.alpha == doctest::Approx(1.0).epsilon(0.01));
    CHECK(sc.C0 == basic.C0);
    CHECK(sc.lhs == doctest::Approx(basic.lhs));
  }

  TEST_CASE("decay iteration: quadratic is trivial, Wang energies contract") {
    const ConvexField q = sampled(1.0, 81, [](const Vec& x) { return 0.5 * x.squaredNorm() - 0.5; });
    const HessianField Hq = discrete_hessian(q);
    const auto dq = level_decompose(Hq, interior_region(q), 4.0);
    const auto rq = decay_iterate(q, Hq, dq);
    CHECK(rq.steps.empty());
    CHECK(rq.C == 0.0);

    // Wang alpha = 3 on its base section, sections confined to {u < 2c}.
    const double c = 1.0 / 16;
    const WangSolution w = wang_construct(3.0).scaled(c);
    const DomainSpec box = box_domain(make_vec(-1.05, -1.0), make_vec(1.05, 1.0));
    const ConvexField u = wang_field(w, Grid::box(make_vec(-1.05, -1.0), make_vec(1.05, 1.0), 0.004), box);
    const HessianField H = discrete_hessian(u);
    const auto d = level_decompose(H, sublevel_region(u, c), 2.0);
    REQUIRE(d.levels() >= 3);
    DecayOptions opt;
    opt.allowed = sublevel_region(u, 2 * c).mask;
    const auto r = decay_iterate(u, H, d, opt);
    REQUIRE(r.steps.size() + 1 == static_cast<std::size_t>(d.levels()));
    CHECK(r.tau > 0.0);
    CHECK(r.tau < 1.0);
    CHECK(r.monotone);
    CHECK(r.valid);
    for (const auto& s : r.steps) {
      CHECK(s.selected > 0);
      CHECK(s.excluded == 0);
      CHECK(s.contraction < 1.0);
      // The sections cover D_{k+1}.
      CHECK(s.cover_lhs >= s.energy_next);
    }
  }

  TEST_CASE("report serialization") {
    const HessianField h = synthetic({1.0, 2.0, 4.0, 8.0, 16.0, 1.0, 2.0, 4.0, 8.0, 1.0, 2.0, 4.0, 1.0, 2.0, 1.0, 1.0});
    const auto d = level_decompose(h, everything(16), 2.0);
    const auto j = to_json(d);
    CHECK(j["M"].get<double>() == 2.0);
    CHECK(j["levels"].size() == static_cast<std::size_t>(d.levels()));
    const std::string csv = decay_csv(d);
    CHECK(csv.rfind("k,measure,energy,contraction\n", 0) == 0);
    const std::string svg = loglog_svg("tail", {2, 4, 8}, {1, 0.25, 0.0625});
    CHECK(svg.find("<polyline") != std::string::npos);
  }
}
