#include <gtest/gtest.h>
#include <mpfr.h>

#include <random>

#include "hpsolve/conv_fft.hpp"
#include "test_support.hpp"

using namespace hpsolve;
using hpsolve::testing::random_matrix;

namespace {

Blocks random_blocks(std::size_t t, std::size_t r, std::size_t c, std::mt19937_64& rng) {
  Blocks out;
  for (std::size_t i = 0; i < t; ++i) out.push_back(random_matrix(r, c, rng, 1));
  return out;
}

FixedPoint frob_diff_sq(const Blocks& a, const Blocks& b) {
  FixedPoint acc;
  for (std::size_t i = 0; i < a.size(); ++i) acc += frobenius_norm_sq(a[i] - b[i]);
  return acc;
}

FixedPoint frob_sq(const Blocks& a) {
  FixedPoint acc;
  for (const auto& x : a) acc += frobenius_norm_sq(x);
  return acc;
}

}  // namespace

TEST(RootsOfUnity, MatchHighPrecisionReference) {
  const int L = 4;
  for (std::size_t t : {8u, 16u, 64u}) {
    const auto w = roots_of_unity(t, L);
    mpfr_t angle, c, s, pi;
    mpfr_inits2(512, angle, c, s, pi, static_cast<mpfr_ptr>(nullptr));
    mpfr_const_pi(pi, MPFR_RNDN);
    for (std::size_t j = 0; j < t; ++j) {
      mpfr_mul_ui(angle, pi, 2 * j, MPFR_RNDN);
      mpfr_div_ui(angle, angle, t, MPFR_RNDN);
      mpfr_sin_cos(s, c, angle, MPFR_RNDN);
      mpfr_mul_2ui(c, c, 64 * L, MPFR_RNDN);
      mpfr_mul_2ui(s, s, 64 * L, MPFR_RNDN);
      mpfr_sub_z(c, c, w[j].re.widened(L).mantissa().get_mpz_t(), MPFR_RNDN);
      mpfr_sub_z(s, s, w[j].im.widened(L).mantissa().get_mpz_t(), MPFR_RNDN);
      // Within one unit in the last word.
      EXPECT_LE(mpfr_cmp_d(c, 1.0) <= 0 && mpfr_cmp_d(c, -1.0) >= 0, true) << "t=" << t << " j=" << j;
      EXPECT_LE(mpfr_cmp_d(s, 1.0) <= 0 && mpfr_cmp_d(s, -1.0) >= 0, true) << "t=" << t << " j=" << j;
    }
    mpfr_clears(angle, c, s, pi, static_cast<mpfr_ptr>(nullptr));
  }
}

TEST(FFT, TwoPoint) {
  const FFTPlan plan = FFTPlan::make(2, 1, FixedPoint::pow2(-64));
  const Blocks in = {DenseMatrix::from_doubles(1, 1, {3}, 0), DenseMatrix::from_doubles(1, 1, {5}, 0)};
  const Blocks out = fft_apply(plan, ComplexBlocks::from_real(in), false).real_part();
  EXPECT_EQ(out[0], DenseMatrix::from_doubles(1, 1, {8}, 0));
  EXPECT_EQ(out[1], DenseMatrix::from_doubles(1, 1, {-2}, 0));
  EXPECT_THROW(FFTPlan::make(3, 1, FixedPoint::pow2(-64)), std::invalid_argument);
  EXPECT_THROW(FFTPlan::make(4, 1, FixedPoint()), std::invalid_argument);
}

TEST(FFT, InverseUndoesForward) {
  std::mt19937_64 rng(20);
  const FixedPoint delta = FixedPoint::pow2(-128);
  const FFTPlan plan = FFTPlan::make(8, 2, delta);
  const Blocks B = random_blocks(8, 2, 3, rng);
  const ComplexBlocks f = fft_apply(plan, ComplexBlocks::from_real(B), false);
  const ComplexBlocks back = fft_apply(plan, f, true);
  const FixedPoint bound = FixedPoint::from_int(4) * delta * delta * frob_sq(B);
  EXPECT_LE(frob_diff_sq(back.real_part(), B), bound);
  EXPECT_LE(frob_sq(back.imag_part()), bound);
}

TEST(FFT, MatchesNaiveDft) {
  std::mt19937_64 rng(21);
  const std::size_t t = 4;
  const FFTPlan plan = FFTPlan::make(t, 1, FixedPoint::pow2(-128));
  const Blocks B = random_blocks(t, 1, 2, rng);
  const ComplexBlocks f = fft_apply(plan, ComplexBlocks::from_real(B), false);
  // For t = 4 the roots are exactly 1, i, -1, -i.
  const int re_w[4] = {1, 0, -1, 0};
  const int im_w[4] = {0, 1, 0, -1};
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t lane = 0; lane < 2; ++lane) {
      FixedPoint er, ei;
      for (std::size_t j = 0; j < t; ++j) {
        const std::size_t k = (i * j) % t;
        const FixedPoint b = B[j].at(0, lane);
        er += b * FixedPoint::from_int(re_w[k]);
        ei += b * FixedPoint::from_int(im_w[k]);
      }
      EXPECT_EQ(FixedPoint::from_mantissa(f.re[i * 2 + lane], f.frac_words), er);
      EXPECT_EQ(FixedPoint::from_mantissa(f.im[i * 2 + lane], f.frac_words), ei);
    }
  }
}

TEST(Convolution, TwoPointCirculant) {
  const Blocks X = {DenseMatrix::from_doubles(1, 1, {2}, 0), DenseMatrix::from_doubles(1, 1, {3}, 0)};
  const Blocks B = {DenseMatrix::from_doubles(1, 1, {5}, 0), DenseMatrix::from_doubles(1, 1, {7}, 0)};
  const FixedPoint delta = FixedPoint::pow2(-128);
  const Blocks C = block_circular_conv(X, B, delta);
  EXPECT_LE(frobenius_norm_sq(C[0] - DenseMatrix::from_doubles(1, 1, {2 * 5 + 3 * 7}, 0)), delta * delta);
  EXPECT_LE(frobenius_norm_sq(C[1] - DenseMatrix::from_doubles(1, 1, {3 * 5 + 2 * 7}, 0)), delta * delta);
}

TEST(Convolution, IdentityKernel) {
  std::mt19937_64 rng(22);
  Blocks X(4, DenseMatrix(2, 2));
  X[0] = DenseMatrix::identity(2);
  const Blocks B = random_blocks(4, 2, 3, rng);
  const FixedPoint delta = FixedPoint::pow2(-128);
  const Blocks C = block_circular_conv(X, B, delta);
  EXPECT_LE(frob_diff_sq(C, B), delta * delta * (FixedPoint::from_int(1) + frob_sq(B)));
}

TEST(Convolution, RandomMatchesNaive) {
  std::mt19937_64 rng(23);
  const FixedPoint delta = FixedPoint::pow2(-128);
  const Blocks X = random_blocks(4, 2, 2, rng);
  const Blocks B = random_blocks(4, 2, 3, rng);
  const Blocks fast = block_circular_conv(X, B, delta);
  const Blocks slow = naive_circular_conv(X, B);
  const FixedPoint bound = (FixedPoint::from_int(1) + frob_sq(B)) * delta * delta;
  EXPECT_LE(frob_diff_sq(fast, slow), bound);
}

TEST(Convolution, LinearViaCircular) {
  std::mt19937_64 rng(24);
  const FixedPoint delta = FixedPoint::pow2(-128);
  // Single nonzero kernel block at offset 1 shifts B down by one block.
  Blocks X(3, DenseMatrix(2, 2));
  X[1] = DenseMatrix::identity(2);
  const Blocks B = random_blocks(3, 2, 1, rng);
  const Blocks shifted = linear_conv_via_circular(X, B, delta);
  ASSERT_EQ(shifted.size(), 5u);
  EXPECT_LE(frobenius_norm_sq(shifted[1] - B[0]), delta * delta);
  EXPECT_LE(frobenius_norm_sq(shifted[0]), delta * delta);
  // t = 1 is a plain product.
  const Blocks one = linear_conv_via_circular({X[1]}, {B[0]}, delta);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_LE(frobenius_norm_sq(one[0] - B[0]), delta * delta);
  const Blocks Xr = random_blocks(3, 2, 2, rng);
  const Blocks fast = linear_conv_via_circular(Xr, B, delta);
  const Blocks slow = naive_linear_conv(Xr, B);
  EXPECT_LE(frob_diff_sq(fast, slow), (FixedPoint::from_int(1) + frob_sq(B)) * delta * delta);
}

TEST(Convolution, LinearAndDeterministic) {
  std::mt19937_64 rng(25);
  const FixedPoint delta = FixedPoint::pow2(-100);
  const Blocks X = random_blocks(8, 2, 2, rng);
  const Blocks B1 = random_blocks(8, 2, 2, rng);
  const Blocks B2 = random_blocks(8, 2, 2, rng);
  Blocks sum;
  for (std::size_t i = 0; i < 8; ++i) sum.push_back(B1[i] + B2[i]);
  const Blocks c1 = block_circular_conv(X, B1, delta);
  const Blocks c2 = block_circular_conv(X, B2, delta);
  const Blocks cs = block_circular_conv(X, sum, delta);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(cs[i], c1[i] + c2[i]);
    EXPECT_TRUE(block_circular_conv(X, B1, delta)[i].bitwise_equal(c1[i]));
  }
}

TEST(Convolution, WordGrowthWithinBudget) {
  std::mt19937_64 rng(26);
  for (std::size_t t : {2u, 4u, 8u, 16u}) {
    const FixedPoint delta = FixedPoint::pow2(-128);
    const Blocks X = random_blocks(t, 2, 2, rng);
    const Blocks B = random_blocks(t, 2, 1, rng);
    const Blocks C = block_circular_conv(X, B, delta);
    const double lt = std::log2(double(t));
    const double budget = 8.0 * std::max(1.0, lt) * std::log2(t * 2.0 * 2.0 / std::ldexp(1.0, -128)) / 64.0;
    EXPECT_LE(C[0].frac_words() - B[0].frac_words() - X[0].frac_words(), budget + 1) << "t=" << t;
  }
}
