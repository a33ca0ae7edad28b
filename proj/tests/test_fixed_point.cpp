#include <gtest/gtest.h>

#include <random>

#include "hpsolve/fixed_point.hpp"
#include "test_support.hpp"

using hpsolve::FixedPoint;
using hpsolve::testing::random_fixed;
using hpsolve::testing::to_rational;

namespace {

FixedPoint dyadic(double v, int L) { return FixedPoint::from_double(v, L); }

}  // namespace

TEST(FixedPoint, AddKeepsLargerWordCount) {
  const FixedPoint a = dyadic(3.5, 1);
  const FixedPoint b = dyadic(0.25, 2);
  const FixedPoint c = hpsolve::fp_add(a, b);
  EXPECT_EQ(c.frac_words(), 2);
  EXPECT_EQ(c, dyadic(3.75, 1));
  EXPECT_EQ(a + FixedPoint(), a);
}

TEST(FixedPoint, MulSumsWordCounts) {
  const FixedPoint c = hpsolve::fp_mul(dyadic(1.5, 1), dyadic(2.5, 1));
  EXPECT_EQ(c.frac_words(), 2);
  EXPECT_EQ(c, dyadic(3.75, 1));
  EXPECT_EQ(hpsolve::fp_mul(dyadic(1.0, 1), dyadic(1.0, 2)).frac_words(), 3);
  const FixedPoint a = dyadic(-7.125, 3);
  EXPECT_EQ(a * FixedPoint::from_int(1), a);
}

TEST(FixedPoint, RoundingNearestTiesTowardZero) {
  // 2^-64 * (1/2) with one word: exactly half an ulp at L = 1 -> ties to 0.
  const FixedPoint half_ulp = FixedPoint::pow2(-65);
  EXPECT_TRUE(half_ulp.rounded(1).is_zero());
  EXPECT_TRUE((-half_ulp).rounded(1).is_zero());
  // 3/2 ulp rounds toward zero to 1 ulp; 5/2 ulp -> 2 ulp.
  const FixedPoint three_halves = FixedPoint::pow2(-65) * FixedPoint::from_int(3);
  EXPECT_EQ(three_halves.rounded(1), FixedPoint::pow2(-64));
  EXPECT_EQ((-three_halves).rounded(1), -FixedPoint::pow2(-64));
  // Slightly above half an ulp rounds away from zero.
  const FixedPoint above = FixedPoint::pow2(-65) + FixedPoint::pow2(-130);
  EXPECT_EQ(above.rounded(1), FixedPoint::pow2(-64));
  EXPECT_EQ((-above).rounded(1), -FixedPoint::pow2(-64));
  EXPECT_TRUE(FixedPoint::pow2(-64 * 3).rounded(1).is_zero());
  const FixedPoint a = dyadic(3.75, 2);
  EXPECT_EQ(hpsolve::fp_round(a, 2), a);
  EXPECT_EQ(hpsolve::fp_round(a, 2).frac_words(), 2);
}

TEST(FixedPoint, CompareByValue) {
  EXPECT_LT(FixedPoint::from_int(1), FixedPoint::from_int(2));
  EXPECT_EQ(dyadic(0.5, 1), dyadic(0.5, 4));
  EXPECT_LT(FixedPoint::from_int(-1), FixedPoint::from_int(1));
  EXPECT_LT(dyadic(-0.5, 3), dyadic(0.25, 1));
  EXPECT_GT(dyadic(-0.25, 1), dyadic(-0.5, 3));
}

TEST(FixedPoint, ParseAndPrintRoundTrip) {
  const FixedPoint v = FixedPoint::parse("-1.25e-3", 2);
  EXPECT_NEAR(v.to_double(), -1.25e-3, 1e-18);
  EXPECT_EQ(FixedPoint::parse("7", 0), FixedPoint::from_int(7));
  EXPECT_EQ(FixedPoint::parse(".5", 1), dyadic(0.5, 1));
  EXPECT_THROW(FixedPoint::parse("1.2.3", 1), std::invalid_argument);
  EXPECT_THROW(FixedPoint::parse("", 1), std::invalid_argument);
  EXPECT_THROW(FixedPoint::parse("e5", 1), std::invalid_argument);

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const FixedPoint x = random_fixed(rng, 3, 4);
    const int L = x.frac_words();
    const FixedPoint back = FixedPoint::parse(x.to_string(hpsolve::round_trip_digits(L)), L);
    EXPECT_EQ(back, x) << x.to_string(40);
  }
}

TEST(FixedPoint, ParseErrorBelowHalfUlp) {
  // 0.1 has no finite binary expansion: the parsed value is the nearest.
  const FixedPoint v = FixedPoint::parse("0.1", 2);
  const mpq_class err = to_rational(v) - mpq_class(1, 10);
  mpq_class half_ulp(1);
  half_ulp /= mpq_class(mpz_class(1) << 129);
  EXPECT_LE(abs(err), half_ulp);
}

TEST(FixedPoint, DivisionAndSquareRoot) {
  const FixedPoint third = hpsolve::fp_div(FixedPoint::from_int(1), FixedPoint::from_int(3), 3);
  const mpq_class err = to_rational(third) - mpq_class(1, 3);
  EXPECT_LE(abs(err), mpq_class(1) / mpq_class(mpz_class(1) << 192));
  EXPECT_THROW(hpsolve::fp_div(FixedPoint::from_int(1), FixedPoint(), 1), std::domain_error);

  const FixedPoint r = hpsolve::fp_sqrt(FixedPoint::from_int(2), 4);
  const FixedPoint sq = r * r;
  EXPECT_LT(((sq - FixedPoint::from_int(2)).abs()), FixedPoint::pow2(-250));
  EXPECT_EQ(hpsolve::fp_sqrt(dyadic(0.25, 1), 1), dyadic(0.5, 1));
  EXPECT_THROW(hpsolve::fp_sqrt(FixedPoint::from_int(-1), 1), std::domain_error);
}

TEST(FixedPoint, WordsForTolerance) {
  EXPECT_EQ(hpsolve::words_for_log2(-64), 1);
  EXPECT_EQ(hpsolve::words_for_log2(-65), 2);
  EXPECT_EQ(hpsolve::words_for_log2(0.5), 0);
  EXPECT_EQ(FixedPoint::pow2(-70).frac_words(), 2);
  EXPECT_EQ(FixedPoint::pow2(-70).log2_abs(), -70.0);
}

TEST(FixedPoint, RandomizedLaws) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    const FixedPoint a = random_fixed(rng);
    const FixedPoint b = random_fixed(rng);
    const FixedPoint c = random_fixed(rng);
    const FixedPoint s = a + b;
    const FixedPoint p = a * b;
    ASSERT_EQ(to_rational(s), to_rational(a) + to_rational(b));
    ASSERT_EQ(to_rational(p), to_rational(a) * to_rational(b));
    ASSERT_EQ(s.frac_words(), std::max(a.frac_words(), b.frac_words()));
    ASSERT_EQ(p.frac_words(), a.frac_words() + b.frac_words());
    ASSERT_EQ((a + b) + c, a + (b + c));
    ASSERT_EQ((a * b) * c, a * (b * c));
    ASSERT_EQ(a * b, b * a);
    const int L = static_cast<int>(rng() % 5);
    const FixedPoint r = a.rounded(L);
    ASSERT_EQ(r.frac_words(), L);
    ASSERT_LE((r - a).abs(), FixedPoint::pow2(-64L * L - 1));
  }
}
