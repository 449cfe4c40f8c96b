#include <equilibria/bounds.hpp>
#include <equilibria/potential.hpp>
#include <equilibria/solids.hpp>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include <random>

using namespace equilibria;

namespace {

using Big = boost::multiprecision::cpp_bin_float_50;

std::vector<ChargeConfiguration> sample_configs() {
  return {named_solid("tetrahedron"), named_solid("cube"), antiprism(4, 1.0, 1.3),
          make_configuration({{0, 0, 0}, {1, 0, 0}, {0.3, 0.8, 0}}, {1.0, 2.5, 0.7}),
          perturb(named_solid("octahedron"), 0.05, 7), line_configuration(4)};
}

// A point in the bounding ball that keeps a fraction of the diameter away
// from every charge.
Vec3 random_point(const ChargeConfiguration& c, std::mt19937_64& rng, double keep = 0.05) {
  std::uniform_real_distribution<double> u(-1, 1);
  const double R = c.circumradius(c.centroid()) + 0.3 * c.diameter();
  for (;;) {
    Vec3 x = c.centroid() + R * Vec3(u(rng), u(rng), u(rng));
    if (nearest_charge_distance(c, x) > keep * c.diameter()) return x;
  }
}

// V in 50-digit arithmetic straight from the definition.
Big big_V(const ChargeConfiguration& c, double p, const Vec3& x) {
  Big v = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    Big r2 = 0;
    for (int k = 0; k < 3; ++k) {
      Big d = Big(x[k]) - Big(c.points[i][k]);
      r2 += d * d;
    }
    v += pow(Big(c.charges[i]) / sqrt(r2), Big(p));
  }
  return v;
}

Vec3 fd_gradient(const ChargeConfiguration& c, const PotentialParams& pp, const Vec3& x, double h) {
  Vec3 g;
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Zero();
    e[k] = h;
    g[k] = (eval_V(c, pp, x + e) - eval_V(c, pp, x - e)) / (2 * h);
  }
  return g;
}

}  // namespace

TEST(Potential, ValueMatchesDefinition) {
  auto c = make_configuration({{0, 0, 0}, {2, 0, 0}}, {1.0, 3.0});
  EXPECT_NEAR(eval_V(c, {1.0}, {1, 1, 0}), 1 / std::sqrt(2.0) + 3 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(eval_V(c, {2.0}, {1, 1, 0}), 0.5 + 4.5, 1e-14);
}

TEST(Potential, GradientAgainstCentralDifferences) {
  std::mt19937_64 rng(11);
  for (double p : {1.0, 2.0, 4.0}) {
    for (const auto& c : sample_configs()) {
      for (int k = 0; k < 40; ++k) {
        Vec3 x = random_point(c, rng);
        auto d = derivatives(c, {p}, x);
        const double h = 1e-5 * nearest_charge_distance(c, x);
        Vec3 fd = fd_gradient(c, {p}, x, h);
        EXPECT_LE((d.grad - fd).norm(), 1e-6 * d.grad_scale) << c.label << " p=" << p;
      }
    }
  }
}

TEST(Potential, HessianAgainstDifferencedGradient) {
  std::mt19937_64 rng(12);
  for (double p : {1.0, 1.3, 2.0}) {
    for (const auto& c : sample_configs()) {
      if (p != 1.0 && p != 2.0 && !c.all_positive()) continue;
      for (int k = 0; k < 40; ++k) {
        Vec3 x = random_point(c, rng);
        auto d = derivatives(c, {p}, x);
        EXPECT_LE((d.hess - d.hess.transpose()).norm(), 1e-14 * d.hess_scale);
        const double h = 1e-5 * nearest_charge_distance(c, x);
        Mat3 fd;
        for (int j = 0; j < 3; ++j) {
          Vec3 e = Vec3::Zero();
          e[j] = h;
          fd.col(j) = (gradient(c, {p}, x + e) - gradient(c, {p}, x - e)) / (2 * h);
        }
        EXPECT_LE((d.hess - fd).cwiseAbs().maxCoeff(), 1e-6 * d.hess_scale);
      }
    }
  }
}

TEST(Potential, LaplacianIdentity) {
  std::mt19937_64 rng(13);
  for (double p : {0.5, 1.0, 1.3, 2.0, 4.0}) {
    for (const auto& c : sample_configs()) {
      for (int k = 0; k < 30; ++k) {
        Vec3 x = random_point(c, rng);
        auto d = derivatives(c, {p}, x);
        // p (p - 1) sum z^p / r^(p+2), summed independently of the library
        double expect = 0;
        for (std::size_t i = 0; i < c.size(); ++i)
          expect += std::pow(c.charges[i], p) / std::pow((x - c.points[i]).norm(), p + 2);
        expect *= p * (p - 1);
        EXPECT_NEAR(laplacian(c, {p}, x), expect, 1e-10 * d.hess_scale);
        EXPECT_NEAR(d.hess.trace(), expect, 1e-10 * d.hess_scale);
      }
    }
  }
}

TEST(Potential, NewtonianPotentialIsHarmonic) {
  std::mt19937_64 rng(14);
  for (const auto& c : sample_configs()) {
    for (int k = 0; k < 50; ++k) {
      Vec3 x = random_point(c, rng);
      auto d = derivatives(c, {1.0}, x);
      EXPECT_LE(std::abs(d.hess.trace()), 1e-12 * d.hess_scale);
      EXPECT_EQ(laplacian(c, {1.0}, x), 0.0);
    }
  }
}

TEST(Potential, IncrementAgainstExtendedPrecision) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(-1, 1);
  for (double p : {1.0, 2.0, 1.3}) {
    for (const auto& c : sample_configs()) {
      if (p == 1.3 && !c.all_positive()) continue;
      for (int k = 0; k < 20; ++k) {
        Vec3 x = random_point(c, rng);
        for (double s : {1e-3, 1e-6, 1e-9}) {
          Vec3 disp = s * nearest_charge_distance(c, x) * Vec3(u(rng), u(rng), u(rng));
          Big exact = big_V(c, p, x + disp) - big_V(c, p, x);
          // The displaced point itself is rounded in double; use the exact
          // displacement that was actually applied.
          Vec3 applied = (x + disp) - x;
          long double got = increment<long double>(c, {p}, x, applied);
          double mag = std::abs(double(exact));
          EXPECT_LE(std::abs(double(Big(got) - exact)), 1e-12 * mag + 1e-30) << "p=" << p << " s=" << s;
        }
      }
    }
  }
}

TEST(Potential, IncrementResolvesBelowDoubleCancellation) {
  auto c = named_solid("cube");
  Vec3 x(0.1, 0.2, 0.05);
  Vec3 disp(1e-13, 0, 0);
  Vec3 x2 = x + disp;
  Vec3 applied = x2 - x;
  double naive = eval_V(c, {1.0}, x2) - eval_V(c, {1.0}, x);
  double exact = double(big_V(c, 1.0, x2) - big_V(c, 1.0, x));
  double inc = double(increment<long double>(c, {1.0}, x, applied));
  EXPECT_NEAR(inc, exact, 1e-9 * std::abs(exact));
  EXPECT_GT(std::abs(naive - exact), std::abs(inc - exact));
}

TEST(Potential, SimilarityScalesByPowerOfScale) {
  std::mt19937_64 rng(16);
  Similarity s;
  s.scale = 2.5;
  s.rotation = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  s.translation = Vec3(0.3, -1, 2);
  s.reflect = true;
  for (double p : {1.0, 2.0, 4.0}) {
    for (const auto& c : sample_configs()) {
      auto t = apply_similarity(c, s);
      for (int k = 0; k < 10; ++k) {
        Vec3 x = random_point(c, rng);
        double v = eval_V(c, {p}, x), vt = eval_V(t, {p}, s.apply(x));
        EXPECT_NEAR(vt, v * std::pow(s.scale, -p), 1e-13 * std::abs(v));
      }
    }
  }
}

TEST(Potential, RejectsPointsOnCharges) {
  auto c = named_solid("cube");
  EXPECT_THROW(eval_V(c, {1.0}, c.points[3]), NearChargeError);
  EXPECT_THROW(derivatives(c, {2.0}, c.points[0]), NearChargeError);
  EXPECT_THROW(laplacian(c, {1.0}, c.points[5]), NearChargeError);
}

TEST(Potential, ParameterChecks) {
  auto mixed = make_configuration({{0, 0, 0}, {1, 0, 0}}, {1.0, -1.0});
  Vec3 x(0.5, 0.5, 0);
  EXPECT_THROW(eval_V(mixed, {1.5}, x), std::domain_error);
  EXPECT_NO_THROW(eval_V(mixed, {2.0}, x));
  EXPECT_THROW(eval_V(named_solid("cube"), {0.0}, x), std::invalid_argument);
  EXPECT_THROW(eval_V(named_solid("cube"), {-1.0}, x), std::invalid_argument);
}

TEST(Potential, WeightedDistanceIsTheLimitOfRootedPotential) {
  auto c = make_configuration({{0, 0, 0}, {1, 0, 0}, {0, 1.5, 0}}, {1.0, 2.0, 1.5});
  std::mt19937_64 rng(17);
  for (int k = 0; k < 20; ++k) {
    Vec3 x = random_point(c, rng, 0.1);
    double e = eval_E(c, x);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < c.size(); ++i) best = std::min(best, (x - c.points[i]).norm() / c.charges[i]);
    EXPECT_DOUBLE_EQ(e, best);
    // V_p^(-1/p) approaches E from below as p grows.
    double prev = 0;
    for (double p : {8.0, 32.0, 128.0}) {
      double approx = std::pow(eval_V(c, {p}, x), -1.0 / p);
      EXPECT_LE(approx, e * (1 + 1e-12));
      EXPECT_GE(approx, prev);
      prev = approx;
    }
    EXPECT_NEAR(prev, e, 0.01 * e);
  }
}

namespace {

// Direct evaluation of the cleared-denominator system, one product per term.
Eigen::VectorXd naive_poly(const ChargeConfiguration& c, const Vec3& x, const Eigen::VectorXd& u) {
  const std::size_t n = c.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(3 + n);
  for (std::size_t i = 0; i < n; ++i) {
    double prod = 1;
    for (std::size_t l = 0; l < n; ++l)
      if (l != i) prod *= u[l] * u[l] * u[l];
    for (int j = 0; j < 3; ++j) out[j] += c.charges[i] * (x[j] - c.points[i][j]) * prod;
    out[3 + i] = u[i] * u[i] - (x - c.points[i]).squaredNorm();
  }
  return out;
}

}  // namespace

TEST(Potential, PolySystemAgainstNaiveExpansion) {
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> u01(0.2, 2.0);
  for (const auto& c : {make_configuration({{0, 0, 0}, {1, 0, 0}}, {1.0, 2.0}),
                        make_configuration({{0, 0, 0}, {1, 0, 0}, {0.3, 0.8, 0}}, {1.0, 2.5, 0.7}),
                        named_solid("tetrahedron")}) {
    auto ps = build_poly_system(c);
    for (int k = 0; k < 20; ++k) {
      Vec3 x = random_point(c, rng);
      Eigen::VectorXd u(c.size());
      for (std::size_t i = 0; i < c.size(); ++i) u[i] = u01(rng);
      Eigen::VectorXd a = eval_poly_system(ps, x, u), b = naive_poly(c, x, u);
      EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12 * (1 + b.cwiseAbs().maxCoeff()));
    }
  }
}

TEST(Potential, PolySystemDegreesMultiplyToTheBezoutCount) {
  for (long n = 1; n <= 6; ++n) {
    std::vector<Vec3> pts;
    for (long i = 0; i < n; ++i) pts.push_back(Vec3(double(i), 0.1 * i * i, 0));
    auto ps = build_poly_system(make_configuration(pts));
    ASSERT_EQ(ps.degrees.size(), std::size_t(3 + n));
    BigInt prod = 1;
    for (int d : ps.degrees) prod *= d;
    EXPECT_EQ(prod, bezout_main_bound(n));
    EXPECT_EQ(ps.degrees[0], 3 * n - 2);
  }
}

TEST(Potential, LiftedEquilibriumSolvesPolySystem) {
  // midpoint of two equal charges
  auto c = make_configuration({{-1, 0, 0}, {1, 0, 0}});
  auto ps = build_poly_system(c);
  Vec3 x = Vec3::Zero();
  EXPECT_LT(poly_relative_residual(ps, x, lift(ps, x)), 1e-15);
  EXPECT_GT(poly_relative_residual(ps, Vec3(0.2, 0, 0), lift(ps, Vec3(0.2, 0, 0))), 1e-2);
  EXPECT_THROW(eval_poly_system(ps, x, Eigen::VectorXd::Ones(3)), std::invalid_argument);
}

TEST(Potential, TaylorOfSingleCharge) {
  const double a = 0.8;
  auto c = make_configuration({{0, 0, 0}, {5, 0, 0}}, {1.0, 1e-300});
  // A second, negligible charge keeps the configuration's diameter non-zero.
  Vec3 centre(0, 0, a);
  auto t = taylor_coefficients(c, centre, 4);
  for (int k = 1; k <= 4; ++k) {
    double expect = (k % 2 ? -1.0 : 1.0) / std::pow(a, k + 1);
    EXPECT_NEAR(t.coefficient(0, 0, k), expect, 1e-6 * std::abs(expect)) << "k=" << k;
  }
  EXPECT_NEAR(t.coefficient(2, 0, 0), -0.5 / std::pow(a, 3), 1e-6 / std::pow(a, 3));
  EXPECT_NEAR(t.coefficient(0, 2, 0), -0.5 / std::pow(a, 3), 1e-6 / std::pow(a, 3));
  EXPECT_NEAR(t.coefficient(1, 1, 0), 0.0, 1e-6 / std::pow(a, 3));
  EXPECT_NEAR(t.coefficient(0, 0, 0), 1 / a, 1e-15);
  EXPECT_LT(t.condition, 1e10);
  EXPECT_THROW(t.coefficient(5, 0, 0), std::out_of_range);
  EXPECT_THROW(taylor_coefficients(c, centre, 5), std::invalid_argument);
  EXPECT_THROW(taylor_coefficients(c, Vec3::Zero(), 4), NearChargeError);
}

TEST(Potential, TaylorLowOrdersVanishWhereTheyShould) {
  // Centre of a cube: equilibrium, and every odd order vanishes by symmetry.
  auto t = taylor_coefficients(named_solid("cube"), Vec3::Zero(), 4);
  EXPECT_LT(t.max_abs_of_degree(1), 1e-10);
  EXPECT_LT(t.max_abs_of_degree(2), 1e-10);  // harmonic and cubic symmetry
  EXPECT_LT(t.max_abs_of_degree(3), 1e-8);
  EXPECT_GT(t.max_abs_of_degree(4), 1e-2);
}
