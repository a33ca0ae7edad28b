#include <gtest/gtest.h>

#include <random>

#include "hpsolve/block_structured.hpp"
#include "hpsolve/spectral.hpp"
#include "test_support.hpp"

using namespace hpsolve;
using hpsolve::testing::random_matrix;

namespace {

BlockToeplitz random_toeplitz(std::size_t s, std::size_t m, std::mt19937_64& rng) {
  BlockToeplitz T{s, m, {}};
  for (std::size_t k = 0; k + 1 < 2 * m; ++k) T.gen.push_back(random_matrix(s, s, rng, 1));
  return T;
}

}  // namespace

TEST(Shift, BasicCases) {
  const DenseMatrix I = DenseMatrix::identity(3);
  EXPECT_TRUE(shift_conjugate(I, 3, ShiftDirection::down_right) == DenseMatrix(3, 3));
  EXPECT_EQ(shift_conjugate(I, 1, ShiftDirection::down_right),
            DenseMatrix::from_doubles(3, 3, {0, 0, 0, 0, 1, 0, 0, 0, 1}, 0));
  std::mt19937_64 rng(30);
  const DenseMatrix M = random_matrix(6, 6, rng);
  const DenseMatrix S = shift_conjugate(M, 2, ShiftDirection::down_right);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      EXPECT_EQ(S.at(i, j), (i >= 2 && j >= 2) ? M.at(i - 2, j - 2) : FixedPoint());
  EXPECT_THROW(shift_conjugate(I, 4, ShiftDirection::up_left), DimensionError);
}

TEST(Displace, IdentityAndRoundTrip) {
  const DenseMatrix D = displace(DenseMatrix::identity(6), 2, DisplacementSign::plus);
  DenseMatrix expected(6, 6);
  expected.raw(0, 0) = 1;
  expected.raw(1, 1) = 1;
  EXPECT_EQ(D, expected);
  std::mt19937_64 rng(31);
  for (auto sign : {DisplacementSign::plus, DisplacementSign::minus}) {
    const DenseMatrix M = random_matrix(8, 8, rng, 2);
    EXPECT_TRUE(undisplace(displace(M, 3, sign), 3, sign).bitwise_equal(M));
  }
  DenseMatrix e11(4, 4);
  e11.raw(0, 0) = 1;
  DenseMatrix diag(4, 4);
  for (std::size_t i = 0; i < 4; ++i) diag.raw(i, i) = 1;
  EXPECT_EQ(undisplace(e11, 1, DisplacementSign::plus), diag);
}

TEST(Displace, ToeplitzSupportAndUndisplace) {
  std::mt19937_64 rng(32);
  const BlockToeplitz T = random_toeplitz(2, 4, rng);
  const DenseMatrix dense = T.densify();
  const DenseMatrix D = displace(dense, 2, DisplacementSign::plus);
  for (std::size_t i = 2; i < 8; ++i)
    for (std::size_t j = 2; j < 8; ++j) EXPECT_TRUE(D.at(i, j).is_zero());
  EXPECT_EQ(undisplace(D, 2, DisplacementSign::plus), dense);
  EXPECT_LE(displacement_rank(dense, 2, DisplacementSign::plus), 4u);
}

TEST(TriangularToeplitz, Definition) {
  const DenseMatrix x = DenseMatrix::from_doubles(3, 1, {1, 2, 3}, 0);
  EXPECT_EQ(tl_build(x, 1), DenseMatrix::from_doubles(3, 3, {1, 0, 0, 2, 1, 0, 3, 2, 1}, 0));
  std::mt19937_64 rng(33);
  DenseMatrix X(6, 2);
  const DenseMatrix B = random_matrix(2, 2, rng);
  X.set_block(0, 0, B);
  DenseMatrix blockdiag(6, 6);
  for (std::size_t k = 0; k < 3; ++k) blockdiag.set_block(2 * k, 2 * k, B);
  EXPECT_EQ(tl_build(X, 2), blockdiag);
  const DenseMatrix R = random_matrix(8, 2, rng);
  const DenseMatrix TL = tl_build(R, 2);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) {
      const std::size_t bi = i / 2, bj = j / 2;
      EXPECT_EQ(TL.at(i, j), bj <= bi ? R.at((bi - bj) * 2 + i % 2, j % 2) : FixedPoint());
    }
}

TEST(RepToDense, MatchesUndisplace) {
  DenseMatrix X(6, 2), Y(6, 2);
  X.set_block(0, 0, DenseMatrix::identity(2));
  Y.set_block(0, 0, DenseMatrix::identity(2));
  EXPECT_EQ(rep_to_dense({2, 3, DisplacementSign::plus, X, Y}), DenseMatrix::identity(6));
  std::mt19937_64 rng(34);
  for (auto sign : {DisplacementSign::plus, DisplacementSign::minus}) {
    for (std::size_t r : {1u, 2u, 3u, 5u}) {
      const DisplacedRep R{2, 4, sign, random_matrix(8, r, rng), random_matrix(8, r, rng)};
      const DenseMatrix expected = undisplace(mat_mul_exact(R.X, R.Y.transposed()), 2, sign);
      EXPECT_EQ(rep_to_dense(R), expected);
      EXPECT_EQ(rep_to_dense(R.transposed()), expected.transposed());
    }
  }
  EXPECT_TRUE(rep_to_dense({2, 2, DisplacementSign::plus, DenseMatrix(4, 2), DenseMatrix(4, 2)}) ==
              DenseMatrix(4, 4));
}

TEST(ToeplitzGenerators, ReproduceMatrix) {
  std::mt19937_64 rng(35);
  for (std::size_t m : {1u, 2u, 5u}) {
    const BlockToeplitz T = random_toeplitz(3, m, rng);
    EXPECT_EQ(rep_to_dense(toeplitz_generators(T)), T.densify());
  }
}

TEST(DisplacedMatvec, ExactConvolutionMatchesDense) {
  std::mt19937_64 rng(36);
  for (auto sign : {DisplacementSign::plus, DisplacementSign::minus}) {
    for (std::size_t m : {1u, 2u, 3u, 4u}) {
      const DisplacedRep R{2, m, sign, random_matrix(2 * m, 4, rng), random_matrix(2 * m, 4, rng)};
      const DenseMatrix B = random_matrix(2 * m, 3, rng);
      const DisplacedOperator op(R, FixedPoint::pow2(-100), ConvKind::direct);
      EXPECT_EQ(op.apply(B), mat_mul_exact(rep_to_dense(R), B));
      EXPECT_EQ(op.apply_transpose(B), mat_mul_exact(rep_to_dense(R).transposed(), B));
    }
  }
}

TEST(DisplacedMatvec, FftWithinTolerance) {
  std::mt19937_64 rng(37);
  const FixedPoint delta = FixedPoint::pow2(-150);
  const BlockToeplitz T = random_toeplitz(2, 3, rng);
  const DisplacedRep R = toeplitz_generators(T);
  const DenseMatrix I = DenseMatrix::identity(6);
  const DenseMatrix Z = displaced_matvec(R, I, delta);
  EXPECT_LE(frobenius_norm_sq(Z - T.densify()), delta * delta);
  // Identity representation.
  DenseMatrix X(6, 2), Y(6, 2);
  X.set_block(0, 0, DenseMatrix::identity(2));
  Y.set_block(0, 0, DenseMatrix::identity(2));
  const DenseMatrix B = random_matrix(6, 2, rng);
  const DenseMatrix out = displaced_matvec({2, 3, DisplacementSign::plus, X, Y}, B, delta);
  EXPECT_LE(frobenius_norm_sq(out - B), delta * delta * frobenius_norm_sq(B));
  // Transpose consistency: columns of Z^T are rows of Z.
  const DisplacedOperator op(R, delta);
  const DenseMatrix Zt = op.apply_transpose(I);
  EXPECT_LE(frobenius_norm_sq(Zt - Z.transposed()), FixedPoint::from_int(4) * delta * delta);
}

TEST(Hankel, ToeplitzFromHankel) {
  std::mt19937_64 rng(38);
  for (std::size_t m : {1u, 2u, 4u}) {
    BlockHankel H{2, m, {}};
    for (std::size_t k = 0; k + 1 < 2 * m; ++k) H.gen.push_back(random_matrix(2, 2, rng));
    const DenseMatrix T = toeplitz_from_hankel(H).densify();
    // T = H J with J the block anti-identity.
    DenseMatrix J(2 * m, 2 * m);
    for (std::size_t k = 0; k < m; ++k) J.set_block(2 * k, 2 * (m - 1 - k), DenseMatrix::identity(2));
    EXPECT_EQ(T, mat_mul_exact(H.densify(), J));
  }
}

TEST(DisplacementRank, InverseRankEquality) {
  std::mt19937_64 rng(39);
  EXPECT_EQ(displacement_rank(DenseMatrix::identity(5), 1, DisplacementSign::plus), 1u);
  int checked = 0;
  for (int trial = 0; trial < 6; ++trial) {
    BlockToeplitz T = random_toeplitz(2, 4, rng);
    T.gen[3] += DenseMatrix::identity(2).scaled_pow2(2);
    const DenseMatrix M = T.densify();
    const DenseMatrix Minv = dense_inverse_oracle(M, FixedPoint::pow2(-256));
    const std::size_t rp = displacement_rank(M, 2, DisplacementSign::plus);
    const std::size_t rm = displacement_rank(Minv, 2, DisplacementSign::minus);
    EXPECT_EQ(rp, rm);
    EXPECT_LE(rp, 4u);
    ++checked;
  }
  EXPECT_EQ(checked, 6);
}

// n^-2 ||M - M'|| <= ||s+(M) - s+(M')|| <= n^2 ||M - M'||.
TEST(DisplacementRank, ErrorTransfer) {
  std::mt19937_64 rng(40);
  for (int trial = 0; trial < 10; ++trial) {
    const DenseMatrix M = random_matrix(6, 6, rng);
    const DenseMatrix M2 = M + random_matrix(6, 6, rng).scaled_pow2(-20);
    const double base = std::sqrt(frobenius_norm_sq(M - M2).to_double());
    const double disp = std::sqrt(frobenius_norm_sq(displace(M, 2, DisplacementSign::plus) -
                                                    displace(M2, 2, DisplacementSign::plus))
                                      .to_double());
    EXPECT_GE(disp, base / 36.0);
    EXPECT_LE(disp, base * 36.0);
  }
}
