#include <equilibria/bounds.hpp>

#include <gtest/gtest.h>

using namespace equilibria;

namespace {

// Plain repeated multiplication, independent of big_pow's squaring.
BigInt slow_pow(long base, long e) {
  BigInt r = 1;
  for (long i = 0; i < e; ++i) r *= base;
  return r;
}

}  // namespace

TEST(Bounds, Gns2007ForThreeCharges) { EXPECT_EQ(gns2007_bound(3), BigInt("139314069504")); }

TEST(Bounds, BezoutMainForThreeCharges) {
  EXPECT_EQ(bezout_main_bound(3), BigInt(2744));
  EXPECT_EQ(evaluate_bounds(3).bezout_main, BigInt(8 * 343));
}

TEST(Bounds, QuadraticExponentBezoutIsCubeOfN) {
  for (long n = 1; n <= 1000000; ++n) {
    const BigInt b = bezout_p_bound(n, 1);
    if (b != BigInt(n) * n * n) FAIL() << "n = " << n;
  }
}

TEST(Bounds, ClosedFormsAgainstDirectEvaluation) {
  for (long n = 1; n <= 12; ++n) {
    auto b = evaluate_bounds(n, 4);
    EXPECT_EQ(b.maxwell, BigInt((n - 1) * (n - 1)));
    EXPECT_EQ(b.morse_lower, BigInt(n - 1));
    EXPECT_EQ(b.gns2007, slow_pow(2, 2 * n * n) * slow_pow(3 * n, 2 * n));
    EXPECT_EQ(b.zolotov, 5 * slow_pow(9, 3 + n));
    EXPECT_EQ(b.bezout_main, slow_pow(2, n) * slow_pow(3 * n - 2, 3));
    EXPECT_EQ(*b.bezout_p, slow_pow(2 * (n - 1), 3));
    EXPECT_EQ(*b.zolotov_p_prior, BigInt(1 + 6 * (n - 1)) * slow_pow(1 + 12 * (n - 1), 2));
    EXPECT_EQ(*b.slice_bound, BigInt(4 * (n - 1) + 2 * n - 1));
  }
}

TEST(Bounds, SuccessiveImprovementsAreOrdered) {
  for (long n = 3; n <= 20; ++n) {
    auto b = evaluate_bounds(n);
    EXPECT_GT(b.gns2007, b.zolotov) << n;
    EXPECT_GT(b.zolotov, b.bezout_main) << n;
  }
  for (long n = 2; n <= 40; ++n) {
    auto b = evaluate_bounds(n);
    EXPECT_LE(b.morse_lower, b.maxwell);
    EXPECT_LE(b.maxwell, b.bezout_main);
  }
}

TEST(Bounds, Gns2007GrowsPastAHundredDigits) {
  EXPECT_EQ(gns2007_bound(12).str(), (slow_pow(2, 288) * slow_pow(36, 24)).str());
  EXPECT_GT(gns2007_bound(12).str().size(), 100u);
}

TEST(Bounds, RejectsOddOrNonPositiveExponent) {
  EXPECT_THROW(evaluate_bounds(4, 3), std::invalid_argument);
  EXPECT_THROW(evaluate_bounds(4, 0), std::invalid_argument);
  EXPECT_THROW(evaluate_bounds(0), std::invalid_argument);
  EXPECT_FALSE(evaluate_bounds(4).bezout_p.has_value());
}

TEST(Bounds, IterateFormula) {
  auto f2 = iterate_formulas(25, 8, 2);
  EXPECT_EQ(f2.count, BigInt(225));
  EXPECT_EQ(f2.ratio, BigRational(225, 64));
  EXPECT_EQ(f2.limit, BigRational(25, 7));
  EXPECT_EQ(iterate_formulas(25, 8, 1).ratio, BigRational(25, 8));
  EXPECT_EQ(to_string(f2.ratio), "225/64");
}

TEST(Bounds, IterateRatioIncreasesTowardsItsLimit) {
  for (long m : {13, 25, 31}) {
    BigRational prev = 0;
    for (long l = 1; l <= 30; ++l) {
      auto f = iterate_formulas(m, 8, l);
      EXPECT_GT(f.ratio, prev);
      EXPECT_LT(f.ratio, f.limit);
      prev = f.ratio;
    }
  }
}

TEST(Bounds, AntiprismRatio) {
  EXPECT_EQ(antiprism_ratio(4), BigRational(25, 8));
  EXPECT_EQ(antiprism_ratio(5), BigRational(31, 10));
  EXPECT_EQ(antiprism_ratio(6), BigRational(37, 12));
  EXPECT_LT(antiprism_ratio(6), antiprism_ratio(5));
  EXPECT_THROW(antiprism_ratio(3), std::invalid_argument);
  for (long k = 4; k < 50; ++k) EXPECT_EQ(antiprism_ratio(k), BigRational(3) + BigRational(1, 2 * k));
}

TEST(Bounds, CompareEmpiricalTriangleMeetsMaxwell) {
  auto ledger = compare_empirical({3, 1.0, 4, 0}, evaluate_bounds(3));
  ASSERT_TRUE(ledger.pass());
  EXPECT_FALSE(ledger.discovery());
  EXPECT_EQ(maxwell_bound(3), BigInt(4));
}

TEST(Bounds, CompareEmpiricalLineMeetsMorseLower) {
  auto ledger = compare_empirical({6, 1.0, 5, 0}, evaluate_bounds(6));
  EXPECT_TRUE(ledger.pass());
  auto low = compare_empirical({6, 1.0, 4, 0}, evaluate_bounds(6));
  EXPECT_FALSE(low.pass());
}

TEST(Bounds, CompareEmpiricalPerturbedCube) {
  auto ledger = compare_empirical({8, 1.0, 17, 0}, evaluate_bounds(8));
  EXPECT_TRUE(ledger.pass());
  EXPECT_FALSE(ledger.discovery());
}

TEST(Bounds, CompareEmpiricalFlagsMaxwellExcess) {
  auto ledger = compare_empirical({3, 1.0, 5, 0}, evaluate_bounds(3));
  EXPECT_TRUE(ledger.pass());
  EXPECT_TRUE(ledger.discovery());
}

TEST(Bounds, CompareEmpiricalEvenExponent) {
  auto ok = compare_empirical({3, 2.0, 27, 0}, evaluate_bounds(3));
  EXPECT_TRUE(ok.pass());
  auto bad = compare_empirical({3, 2.0, 28, 0}, evaluate_bounds(3));
  EXPECT_FALSE(bad.pass());
}
