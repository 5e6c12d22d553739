#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "malab/error.hpp"
#include "malab/grid_convex/domain.hpp"
#include "malab/grid_convex/field.hpp"

using namespace malab;

namespace {

DomainSpec wide_box() { return box_domain(make_vec(-2, -2), make_vec(2, 2)); }

}  // namespace

TEST_SUITE("grid_convex") {
  TEST_CASE("unit ball and square are accepted without pre-normalization") {
    const DomainSpec ball = build_domain(ShapeDescriptor::ball(2));
    CHECK(ball.is_ball);
    CHECK(ball.contains_unit_ball);
    CHECK(ball.inside_n_ball);
    CHECK_FALSE(ball.prenormalized);

    const DomainSpec sq = build_domain(ShapeDescriptor::square());
    CHECK_FALSE(sq.is_ball);
    CHECK(sq.inradius() == doctest::Approx(1.0));
    CHECK(sq.circumradius() == doctest::Approx(std::sqrt(2.0)));
    CHECK_FALSE(sq.prenormalized);
  }

  TEST_CASE("thin ellipse is rounded by a recorded unit-determinant map") {
    const DomainSpec d = build_domain(ShapeDescriptor::ellipsoid(make_vec(4.0, 0.25)));
    REQUIRE(d.prenormalized);
    CHECK(d.radius == doctest::Approx(1.0));
    // The ellipse is {x^2/16 + 16 y^2 <= 1}; its square-root shape matrix maps it onto B_1.
    CHECK(d.prenormalization(0, 0) == doctest::Approx(0.25));
    CHECK(d.prenormalization(1, 1) == doctest::Approx(4.0));
    CHECK(std::abs(d.prenormalization(0, 1)) < 1e-12);
    CHECK(d.prenormalization.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("inclusions that no unit-determinant map can reach are rejected") {
    CHECK_THROWS_AS(build_domain(ShapeDescriptor::ball(2, 3.0)), Error);
    CHECK_THROWS_AS(build_domain(ShapeDescriptor::square(10.0)), Error);
    try {
      build_domain(ShapeDescriptor::ball(2, 0.5));
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NormalizationImpossible);
    }
  }

  TEST_CASE("a non-convex polygon is rejected") {
    std::vector<Vec> dart{make_vec(-1.5, -1.5), make_vec(1.5, -1.5), make_vec(0.0, -0.2),
                          make_vec(1.5, 1.5), make_vec(-1.5, 1.5)};
    try {
      build_domain(ShapeDescriptor::polygon(dart));
      FAIL("expected NonConvexDomain");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonConvexDomain);
    }
  }

  TEST_CASE("an off-centre rectangle is pre-normalized into the admissible band") {
    std::vector<Vec> rect{make_vec(1.0, 0.0), make_vec(5.0, 0.0), make_vec(5.0, 1.0),
                          make_vec(1.0, 1.0)};
    const DomainSpec d = build_domain(ShapeDescriptor::polygon(rect));
    CHECK(d.prenormalized);
    CHECK(d.contains_unit_ball);
    CHECK(d.inside_n_ball);
    CHECK(d.prenormalization.determinant() == doctest::Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("domain JSON round trip") {
    const DomainSpec d = build_domain(ShapeDescriptor::square());
    const DomainSpec e = DomainSpec::from_json(d.to_json());
    CHECK(e.faces.size() == d.faces.size());
    CHECK(e.vertices.size() == d.vertices.size());
    CHECK(e.signed_distance(make_vec(0.3, 0.2)) == doctest::Approx(d.signed_distance(make_vec(0.3, 0.2))));
  }

  TEST_CASE("exit fraction against the ball boundary") {
    const DomainSpec ball = build_domain(ShapeDescriptor::ball(2));
    CHECK(ball.exit_fraction(make_vec(0.5, 0.0), make_vec(1.0, 0.0)) == doctest::Approx(0.5));
    CHECK(ball.exit_fraction(make_vec(0.0, 0.0), make_vec(0.1, 0.1)) == doctest::Approx(1.0));
  }

  TEST_CASE("discrete Hessian of the identity and anisotropic quadratics") {
    const Grid g = Grid::cube(2, 2.0, 41);
    auto u = ConvexField::sample(g, wide_box(), [](const Vec& x) { return 0.5 * x.squaredNorm(); });
    auto h = discrete_hessian(u);
    auto v = ConvexField::sample(g, wide_box(),
                                 [](const Vec& x) { return 0.5 * (4 * x(0) * x(0) + x(1) * x(1) / 4); });
    auto hv = discrete_hessian(v);
    for (std::size_t i = 0; i < g.count(); ++i) {
      if (!h.usable(i)) continue;
      CHECK(h.norm[i] == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(hv.matrix(i)(0, 0) == doctest::Approx(4.0).epsilon(1e-9));
      CHECK(hv.matrix(i)(1, 1) == doctest::Approx(0.25).epsilon(1e-9));
      CHECK(hv.norm[i] == doctest::Approx(4.0).epsilon(1e-9));
    }
  }

  TEST_CASE("central difference of x^4/12 matches its Taylor expansion") {
    const Grid g = Grid::cube(2, 2.0, 41);  // spacing 0.1, node at x = 1
    const double s = g.spacing();
    auto u = ConvexField::sample(g, wide_box(), [](const Vec& x) {
      return std::pow(x(0), 4) / 12.0 + 0.5 * x(1) * x(1);
    });
    auto h = discrete_hessian(u);
    const std::size_t node = *g.nearest(make_vec(1.0, 0.0));
    const double taylor = 1.0 + s * s / 6.0;
    CHECK(h.matrix(node)(0, 0) == doctest::Approx(taylor).epsilon(1e-10));
  }

  TEST_CASE("property: Hessian symmetry and quadratic exactness on random quadratics") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      const bool three = trial % 4 == 3;
      const int n = three ? 3 : 2;
      Mat q = Mat::Random(n, n);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) q(r, c) = coef(rng);
      q = 0.5 * (q + q.transpose()).eval();
      Vec b(n);
      for (int a = 0; a < n; ++a) b(a) = coef(rng);
      const Grid g = Grid::cube(n, 1.0, three ? 9 : 17);
      const DomainSpec d = box_domain(Vec::Constant(n, -1.0), Vec::Constant(n, 1.0));
      auto u = ConvexField::sample(g, d, [&](const Vec& x) { return 0.5 * x.dot(q * x) + b.dot(x) + 0.3; });
      auto h = discrete_hessian(u);
      for (std::size_t i = 0; i < g.count(); ++i) {
        if (!h.valid[i]) continue;
        const Mat m = h.matrix(i);
        CHECK((m - m.transpose()).norm() == 0.0);
        CHECK((m - q).norm() < 1e-9);
      }
    }
  }

  TEST_CASE("nonuniform boundary differences are exact on the radial solution") {
    const DomainSpec ball = build_domain(ShapeDescriptor::ball(2));
    const Grid g = domain_grid(ball, 33);
    ConvexField u = ConvexField::dirichlet(g, ball);
    for (std::size_t i = 0; i < g.count(); ++i)
      if (u.interior[i]) u.values[i] = 0.5 * (g.point(i).squaredNorm() - 1.0);
    auto h = discrete_hessian(u);
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < g.count(); ++i) {
      if (!h.valid[i]) continue;
      flagged += h.flagged[i];
      CHECK((h.matrix(i) - Mat::Identity(2, 2)).norm() < 1e-8);
    }
    CHECK(flagged > 0);
  }

  TEST_CASE("convexity check on convex and concave quadratics") {
    const Grid g = Grid::cube(2, 1.0, 21);
    const DomainSpec d = box_domain(make_vec(-1, -1), make_vec(1, 1));
    auto up = ConvexField::sample(g, d, [](const Vec& x) { return 0.5 * x.squaredNorm(); });
    CHECK(check_convexity(up).empty());
    auto down = ConvexField::sample(g, d, [](const Vec& x) { return -0.5 * x.squaredNorm(); });
    const auto bad = check_convexity(down);
    std::vector<std::uint8_t> hit(g.count(), 0);
    for (const auto& v : bad) hit[v.node] = 1;
    for (std::size_t i = 0; i < g.count(); ++i)
      if (down.interior[i]) CHECK(hit[i] == 1);
  }

  TEST_CASE("property: convexity report is invariant under adding affine functions") {
    const Grid g = Grid::cube(2, 1.0, 21);
    const DomainSpec d = box_domain(make_vec(-1, -1), make_vec(1, 1));
    auto base = [](const Vec& x) { return std::cos(2.0 * x(0)) + 0.3 * x(1) * x(1); };
    auto u = ConvexField::sample(g, d, base);
    auto v = ConvexField::sample(g, d, [&](const Vec& x) { return base(x) + 0.7 * x(0) - 0.2 * x(1) + 1.0; });
    const double tol = 1e-6;
    const auto a = check_convexity(u, tol);
    const auto b = check_convexity(v, tol);
    REQUIRE(a.size() == b.size());
    REQUIRE_FALSE(a.empty());
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].node == b[k].node);
      CHECK(a[k].direction == b[k].direction);
    }
  }

  TEST_CASE("sup norm and the half-level interior region") {
    const DomainSpec ball = build_domain(ShapeDescriptor::ball(2));
    const Grid g = domain_grid(ball, 65);
    auto u = ConvexField::sample(g, ball, [](const Vec& x) { return 0.5 * (x.squaredNorm() - 1.0); });
    const auto lvl = sup_norm_and_interior(u);
    CHECK(lvl.sup_norm == doctest::Approx(0.5).epsilon(1e-3));
    for (std::size_t i = 0; i < g.count(); ++i) {
      const double r2 = g.point(i).squaredNorm();
      if (std::abs(r2 - 0.5) < 1e-9 || !u.interior[i]) continue;
      CHECK(lvl.mask[i] == (r2 < 0.5 ? 1 : 0));
    }

    auto zero = ConvexField::sample(g, ball, [](const Vec&) { return 0.0; });
    const auto z = sup_norm_and_interior(zero);
    CHECK(z.sup_norm == 0.0);
    CHECK(std::count(z.mask.begin(), z.mask.end(), 1) == 0);

    auto pos = ConvexField::sample(g, ball, [](const Vec& x) { return 0.5 * x.squaredNorm(); });
    CHECK_THROWS_AS(sup_norm_and_interior(pos), Error);
  }

  TEST_CASE("property: the half-level region is unchanged by positive scaling") {
    const DomainSpec ball = build_domain(ShapeDescriptor::ball(2));
    const Grid g = domain_grid(ball, 41);
    auto base = [](const Vec& x) { return (x.squaredNorm() - 1.0) * (1.0 + 0.3 * x(0) * x(0)); };
    const auto ref = sup_norm_and_interior(ConvexField::sample(g, ball, base)).mask;
    for (double c : {0.01, 0.5, 3.0, 1e4}) {
      auto u = ConvexField::sample(g, ball, [&](const Vec& x) { return c * base(x); });
      CHECK(sup_norm_and_interior(u).mask == ref);
    }
  }

  TEST_CASE("too small a grid has no usable stencil") {
    const Grid g(2, {2, 2, 1}, make_vec(-0.5, -0.5), 1.0);
    const DomainSpec d = box_domain(make_vec(-1, -1), make_vec(1, 1));
    auto u = ConvexField::sample(g, d, [](const Vec& x) { return x.squaredNorm(); });
    CHECK_THROWS_AS(discrete_hessian(u), Error);
  }

  TEST_CASE("binary field format round trip") {
    const DomainSpec ball = build_domain(ShapeDescriptor::ball(2));
    const Grid g = domain_grid(ball, 17);
    auto u = ConvexField::sample(g, ball, [](const Vec& x) { return x(0) - 2 * x(1); });
    const std::string path = "grid_convex_roundtrip.malf";
    write_field(path, u);
    const ConvexField v = read_field(path);
    CHECK(v.grid == u.grid);
    CHECK(v.values == u.values);
    CHECK(v.interior == u.interior);
    CHECK(v.extended);
    std::remove(path.c_str());
    std::remove((path + ".json").c_str());
  }
}
