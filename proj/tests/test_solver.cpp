#include <equilibria/solids.hpp>
#include <equilibria/solver.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace equilibria;

namespace {

ChargeConfiguration unit_cube() {
  std::vector<Vec3> pts;
  for (int a : {-1, 1})
    for (int b : {-1, 1})
      for (int c : {-1, 1}) pts.emplace_back(a, b, c);
  return make_configuration(pts);
}

// d/dx of V(x, 0, -x) for unit charges at (+-1, +-1, +-1), written out by hand.
double cube_diagonal_slope(double x) {
  double s = 0;
  for (int a : {-1, 1})
    for (int b : {-1, 1})
      for (int c : {-1, 1}) {
        double u = x - a, w = -x - c;
        double r2 = u * u + b * b + w * w;
        s -= (u - w) / (r2 * std::sqrt(r2));
      }
  return s;
}

SolveOptions quick() {
  SolveOptions o;
  o.random_seeds = 200;
  o.grid_density = 8;
  return o;
}

}  // namespace

TEST(Solver, CubeDiagonalSlopeAgreesWithGradient) {
  auto c = unit_cube();
  const Vec3 dir(1, 0, -1);
  for (double x : {-1.0, -0.7, -0.5, -0.2, 0.1, 0.5, 0.9, 1.0}) {
    double lib = gradient(c, {1.0}, Vec3(x, 0, -x)).dot(dir);
    EXPECT_NEAR(lib, cube_diagonal_slope(x), 1e-14);
  }
}

TEST(Solver, CubeDiagonalSlopeIsOddWithKnownEndValue) {
  for (double x : {0.1, 0.3, 0.5, 0.8, 1.0}) EXPECT_NEAR(cube_diagonal_slope(-x), -cube_diagonal_slope(x), 1e-15);
  const double end = 8.0 / 27 + 8 * std::sqrt(5.0) / 25;
  EXPECT_NEAR(std::abs(cube_diagonal_slope(1.0)), end, 1e-14);
  EXPECT_GT(cube_diagonal_slope(-1.0), 0);
  EXPECT_LT(cube_diagonal_slope(-0.5), 0);
}

TEST(Solver, CubeDiagonalRootFromSymmetryLine) {
  auto c = unit_cube();
  LineSegment line{Vec3::Zero(), Vec3(1, 0, -1), -1.35, 1.35};
  auto roots = symmetry_line_roots(c, {1.0}, line);
  ASSERT_EQ(roots.size(), 3u);
  // Independent bisection on the hand-written slope.
  double a = 0.5, b = 1.0;
  for (int k = 0; k < 200; ++k) {
    double m = 0.5 * (a + b);
    ((cube_diagonal_slope(m) > 0) == (cube_diagonal_slope(a) > 0) ? a : b) = m;
  }
  const double xstar = 0.5 * (a + b);
  EXPECT_GT(xstar, 0.5);
  EXPECT_LT(xstar, 1.0);
  EXPECT_NEAR(roots[2].x.x(), xstar, 1e-10);
  EXPECT_NEAR(roots[2].x.z(), -xstar, 1e-10);
  // The slope is cubic at the degenerate centre, so rounding noise limits the
  // root to about the cube root of machine epsilon.
  EXPECT_NEAR(roots[1].x.norm(), 0.0, 1e-5);
  EXPECT_NEAR(roots[0].x.x(), -xstar, 1e-10);
}

TEST(Solver, SymmetryLineRootsRejectAGenericLine) {
  auto c = unit_cube();
  LineSegment line{Vec3(0.1, 0.2, 0.3), Vec3(1, 0.4, 0.2), -1, 1};
  EXPECT_THROW(symmetry_line_roots(c, {1.0}, line), std::domain_error);
  EXPECT_THROW(symmetry_line_roots(c, {1.0}, {Vec3::Zero(), Vec3(1, 0, -1), -1, 1}, 1), std::invalid_argument);
}

TEST(Solver, PrismAxisCurvatureMatchesClosedForm) {
  for (int N : {3, 4, 6}) {
    for (double h : {0.5, 1.0, 1.6, 2.4}) {
      const double R = 1.0, c = h / 2;
      for (double beta : {0.0, std::numbers::pi / N}) {
        auto cfg = prism(N, R, h, beta);
        double expect = 2 * N * (2 * c * c - R * R) / std::pow(R * R + c * c, 2.5);
        Mat3 H = hessian(cfg, {1.0}, Vec3::Zero());
        EXPECT_NEAR(H(2, 2), expect, 1e-12 * std::abs(expect) + 1e-14);
        EXPECT_NEAR(H(0, 0), H(1, 1), 1e-12);
        EXPECT_NEAR(H.trace(), 0.0, 1e-12);
      }
    }
  }
}

TEST(Solver, MirrorSymmetryMakesGradientAntisymmetric) {
  auto c = named_solid("cuboctahedron");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 50; ++k) {
    Vec3 x(u(rng), u(rng), u(rng));
    Vec3 m(-x.x(), x.y(), x.z());
    Vec3 g = gradient(c, {1.0}, x), gm = gradient(c, {1.0}, m);
    EXPECT_NEAR(g.x(), -gm.x(), 1e-12);
    EXPECT_NEAR(g.y(), gm.y(), 1e-12);
    EXPECT_NEAR(g.z(), gm.z(), 1e-12);
  }
}

TEST(Solver, EquilateralTriangle) {
  const double s = std::sqrt(3.0) / 2;
  auto c = make_configuration({{1, 0, 0}, {-0.5, s, 0}, {-0.5, -s, 0}});
  auto res = find_equilibria(c, {1.0}, quick());
  EXPECT_EQ(res.count_degenerate(), 0);
  EXPECT_EQ(res.count_index(2), 3);
  EXPECT_EQ(res.count_index(1), 1);
  EXPECT_EQ(res.count_index(0) + res.count_index(3), 0);
  for (const auto& p : res.points) EXPECT_NEAR(p.x.z(), 0.0, 1e-9);
}

TEST(Solver, LineOfChargesHasOneEquilibriumPerGap) {
  for (int n : {2, 3, 5}) {
    auto c = line_configuration(n);
    auto res = find_equilibria(c, {1.0}, quick());
    EXPECT_EQ(int(res.points.size()), n - 1) << n;
    EXPECT_EQ(res.count_index(2), n - 1) << n;
    for (const auto& p : res.points) EXPECT_NEAR(p.x.tail<2>().norm(), 0.0, 1e-9);
  }
}

TEST(Solver, TwoUnequalChargesBalancePoint) {
  const double d = 2.0, z1 = 1.0, z2 = 4.0;
  auto c = make_configuration({{0, 0, 0}, {d, 0, 0}}, {z1, z2});
  auto res = find_equilibria(c, {1.0}, quick());
  ASSERT_EQ(res.points.size(), 1u);
  const double t = d * std::sqrt(z1) / (std::sqrt(z1) + std::sqrt(z2));
  EXPECT_NEAR(res.points[0].x.x(), t, 1e-10);
  EXPECT_EQ(res.points[0].negative_eigs(), 2);
}

TEST(Solver, CubeEquilibria) {
  auto c = named_solid("cube");
  auto res = find_equilibria(c, {1.0});
  EXPECT_EQ(res.count_index(2), 12);
  EXPECT_EQ(res.count_index(1), 0);
  EXPECT_EQ(res.count_degenerate(), 1);
  ASSERT_EQ(res.clusters.size(), 1u);
  EXPECT_LT(res.clusters[0].barycenter.norm(), 1e-3 * c.diameter());
  for (const auto& p : res.points) {
    if (p.degenerate) continue;
    EXPECT_LT(p.grad_norm, 1e-10 * p.grad_scale);
    auto cert = certify_nondegenerate(c, {1.0}, p);
    EXPECT_TRUE(cert.ok) << cert.reason;
  }
}

TEST(Solver, CertificateRejectsDegenerateCentre) {
  auto c = named_solid("octahedron");
  auto cp = critical_point_at(c, {1.0}, Vec3::Zero(), {});
  EXPECT_TRUE(cp.degenerate);
  auto cert = certify_nondegenerate(c, {1.0}, cp);
  EXPECT_FALSE(cert.ok);
  EXPECT_EQ(cert.reason, "Hessian nearly singular");
  auto off = critical_point_at(c, {1.0}, Vec3(0.1, 0.05, 0), {});
  EXPECT_EQ(certify_nondegenerate(c, {1.0}, off).reason, "residual above tolerance");
}

TEST(Solver, DeterministicAcrossThreadCounts) {
  auto c = perturb(named_solid("cube"), 0.05, 5);
  SolveOptions a = quick(), b = quick();
  b.threads = 3;
  auto ra = find_equilibria(c, {1.0}, a), rb = find_equilibria(c, {1.0}, b);
  ASSERT_EQ(ra.points.size(), rb.points.size());
  for (std::size_t k = 0; k < ra.points.size(); ++k) {
    EXPECT_EQ(ra.points[k].x, rb.points[k].x);
    EXPECT_EQ(ra.points[k].hess_eigs, rb.points[k].hess_eigs);
  }
}

TEST(Solver, PerturbedCubeIsNondegenerateWithinBounds) {
  auto c = perturb(named_solid("cube"), 0.05, 5);
  auto res = find_equilibria(c, {1.0});
  EXPECT_EQ(res.count_degenerate(), 0);
  const int m0 = res.count_index(0), m1 = res.count_index(1), m2 = res.count_index(2), m3 = res.count_index(3);
  EXPECT_EQ(m0 - m1 + m2 - m3, 7);
  EXPECT_GE(int(res.points.size()), 7);
  EXPECT_LE(int(res.points.size()), 2 * 2 * 2 * 2 * 2 * 2 * 2 * 2 * 22 * 22 * 22);
}

TEST(Solver, EquivariantUnderSimilarity) {
  auto c = antiprism(4, 1.0, 1.3);
  Similarity s;
  s.scale = 3.0;
  s.rotation = Eigen::AngleAxisd(1.1, Vec3(0.3, -1, 0.5).normalized()).toRotationMatrix();
  s.translation = Vec3(2, -1, 0.5);
  s.reflect = true;
  auto t = apply_similarity(c, s);
  auto ra = find_equilibria(c, {1.0}), rb = find_equilibria(t, {1.0});
  ASSERT_EQ(ra.points.size(), rb.points.size());
  for (int j = 0; j < 4; ++j) EXPECT_EQ(ra.count_index(j), rb.count_index(j));
  for (const auto& p : ra.points) {
    Vec3 img = s.apply(p.x);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : rb.points) best = std::min(best, (q.x - img).norm());
    EXPECT_LT(best, 1e-8 * t.diameter());
  }
}

TEST(Solver, SliceCountAgainstDenseSampling) {
  auto c = named_solid("cube");
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  for (int k = 0; k < 10; ++k) {
    LineSegment line{0.3 * Vec3(g(rng), g(rng), g(rng)), Vec3(g(rng), g(rng), g(rng)).normalized(), -1, 1};
    auto sc = count_slice_equilibria(c, {2.0}, line);
    // Sign changes of the directional derivative on a fine uniform grid.
    const int M = 200000;
    double lo = -3, hi = 3;
    int changes = 0;
    double prev = gradient(c, {2.0}, line.at(lo)).dot(line.direction);
    for (int i = 1; i <= M; ++i) {
      double cur = gradient(c, {2.0}, line.at(lo + (hi - lo) * i / M)).dot(line.direction);
      if ((cur < 0) != (prev < 0)) ++changes;
      prev = cur;
    }
    EXPECT_EQ(sc.count, changes);
    EXPECT_TRUE(sc.within_bound);
    EXPECT_EQ(sc.bound, 2 * 7 + 15);
  }
  EXPECT_THROW(count_slice_equilibria(c, {1.0}, {}), std::invalid_argument);
  EXPECT_THROW(count_slice_equilibria(c, {3.0}, {}), std::invalid_argument);
}

TEST(Solver, ResultIsSortedAndDeduplicated) {
  auto res = find_equilibria(named_solid("octahedron"), {1.0});
  for (std::size_t k = 1; k < res.points.size(); ++k) {
    EXPECT_FALSE(solver_detail::lex_less(res.points[k].x, res.points[k - 1].x));
    EXPECT_GT((res.points[k].x - res.points[k - 1].x).norm(), 1e-6);
  }
  EXPECT_GT(res.seeds, 0);
  EXPECT_EQ(res.converged + res.failed, res.seeds);
}
