#include <gtest/gtest.h>

#include <random>

#include "hpsolve/lowrank.hpp"
#include "hpsolve/spectral.hpp"
#include "test_support.hpp"

using namespace hpsolve;
using hpsolve::testing::random_matrix;
using hpsolve::testing::to_rationals;

namespace {

// Exact rational projector onto range(M): M (M^T M)^{-1} M^T.
std::vector<mpq_class> rational_projector(const DenseMatrix& M) {
  const std::size_t n = M.rows(), c = M.cols();
  const auto q = to_rationals(M);
  std::vector<mpq_class> G(c * c), Ginv(c * c);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < c; ++j)
      for (std::size_t k = 0; k < n; ++k) G[i * c + j] += q[k * c + i] * q[k * c + j];
  for (std::size_t i = 0; i < c; ++i) Ginv[i * c + i] = 1;
  for (std::size_t p = 0; p < c; ++p) {
    std::size_t piv = p;
    while (G[piv * c + p] == 0) ++piv;
    for (std::size_t j = 0; j < c; ++j) {
      std::swap(G[p * c + j], G[piv * c + j]);
      std::swap(Ginv[p * c + j], Ginv[piv * c + j]);
    }
    const mpq_class d = G[p * c + p];
    for (std::size_t j = 0; j < c; ++j) {
      G[p * c + j] /= d;
      Ginv[p * c + j] /= d;
    }
    for (std::size_t i = 0; i < c; ++i) {
      if (i == p) continue;
      const mpq_class f = G[i * c + p];
      for (std::size_t j = 0; j < c; ++j) {
        G[i * c + j] -= f * G[p * c + j];
        Ginv[i * c + j] -= f * Ginv[p * c + j];
      }
    }
  }
  std::vector<mpq_class> MG(n * c), P(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j)
      for (std::size_t k = 0; k < c; ++k) MG[i * c + j] += q[i * c + k] * Ginv[k * c + j];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < c; ++k) P[i * n + j] += MG[i * c + k] * q[j * c + k];
  return P;
}

// Matrix U diag(sigma) V^T with U, V from exact orthonormalization oracles.
DenseMatrix with_singular_values(const std::vector<double>& sigma, std::mt19937_64& rng) {
  const std::size_t n = sigma.size();
  const FixedPoint tol = FixedPoint::pow2(-200);
  const DenseMatrix U = orthonormalize(random_matrix(n, n, rng, 2), tol);
  const DenseMatrix V = orthonormalize(random_matrix(n, n, rng, 2), tol);
  DenseMatrix D(n, n, 2);
  for (std::size_t i = 0; i < n; ++i) D.set(i, i, FixedPoint::from_double(sigma[i], 2));
  return mat_mul(mat_mul(U, D, 5), V.transposed(), 5);
}

double factor_error(const DenseMatrix& M, const RankFactorization& f) {
  return std::sqrt(frobenius_norm_sq(M - mat_mul_exact(f.X, f.Y.transposed())).to_double());
}

}  // namespace

TEST(GaussianSketch, DeterministicAndBounded) {
  const DenseMatrix a = gaussian_sketch(50, 200, 7);
  EXPECT_TRUE(a.bitwise_equal(gaussian_sketch(50, 200, 7)));
  EXPECT_FALSE(a == gaussian_sketch(50, 200, 8));
  double sum = 0.0;
  for (double v : a.to_doubles()) {
    sum += v;
    EXPECT_LE(std::fabs(v), 50.0);
  }
  // 10^4 samples: the mean has standard deviation 0.01.
  EXPECT_LT(std::fabs(sum / 1e4), 0.05);
}

TEST(Orthonormalize, FixedPointsAndScaling) {
  const FixedPoint tol = FixedPoint::pow2(-120);
  const DenseMatrix Q = DenseMatrix::from_doubles(3, 2, {1, 0, 0, 1, 0, 0}, 0);
  EXPECT_LE(frobenius_norm_sq(orthonormalize(Q, tol) - Q), tol * tol);

  const DenseMatrix D = DenseMatrix::from_doubles(2, 2, {2, 0, 0, 3}, 0);
  EXPECT_LE(frobenius_norm_sq(orthonormalize(D, tol) - DenseMatrix::identity(2)), tol * tol);
  EXPECT_THROW(orthonormalize(DenseMatrix(2, 3), tol), DimensionError);
  EXPECT_THROW(orthonormalize(DenseMatrix(4, 2), tol), SingularMatrixError);
}

TEST(Orthonormalize, RandomMatchesProjector) {
  std::mt19937_64 rng(50);
  const FixedPoint tol = FixedPoint::pow2(-150);
  for (int trial = 0; trial < 3; ++trial) {
    const DenseMatrix M = random_matrix(8, 3, rng, 1);
    const DenseMatrix X = orthonormalize(M, tol);
    EXPECT_LE(frobenius_norm_sq(mat_tmul_exact(X, X) - DenseMatrix::identity(3)), tol * tol);
    const auto P = rational_projector(M);
    const auto got = to_rationals(mat_mul_exact(X, X.transposed()));
    mpq_class worst = 0;
    for (std::size_t k = 0; k < P.size(); ++k) worst = std::max<mpq_class>(worst, abs(P[k] - got[k]));
    EXPECT_LT(worst, mpq_class(1) / mpq_class(mpz_class(1) << 140));
  }
}

TEST(RankRSvd, OrthonormalPassThrough) {
  std::mt19937_64 rng(51);
  const FixedPoint tol = FixedPoint::pow2(-128);
  const DenseMatrix Xh = orthonormalize(random_matrix(6, 2, rng), tol);
  const DenseMatrix Yh = random_matrix(5, 2, rng);
  const RankFactorization f = rank_r_svd_of_product(Xh, Yh, 2, tol);
  const DenseMatrix target = mat_mul_exact(Xh, Yh.transposed());
  EXPECT_LT(hpsolve::testing::log2_diff(mat_mul_exact(f.X, f.Y.transposed()), target), -110.0);

  const RankFactorization z = rank_r_svd_of_product(DenseMatrix(6, 2, 1), Yh, 2, tol);
  EXPECT_TRUE(mat_mul_exact(z.X, z.Y.transposed()) == DenseMatrix(6, 5));
  const RankFactorization z2 = rank_r_svd_of_product(Xh, DenseMatrix(5, 2, 1), 1, tol);
  EXPECT_TRUE(mat_mul_exact(z2.X, z2.Y.transposed()) == DenseMatrix(6, 5));
}

// Eckart-Young: the truncation error equals the tail singular values.
TEST(RankRSvd, MatchesDenseTruncation) {
  std::mt19937_64 rng(52);
  const FixedPoint tol = FixedPoint::pow2(-128);
  const DenseMatrix Xh = random_matrix(10, 4, rng);
  const DenseMatrix Yh = random_matrix(10, 4, rng);
  const RankFactorization f = rank_r_svd_of_product(Xh, Yh, 2, tol);
  const DenseMatrix D = mat_mul_exact(Xh, Yh.transposed());
  const SpectralReport sv = svd_oracle(D, FixedPoint::pow2(-100));
  double tail_sq = 0.0;
  for (std::size_t k = 0; k + 2 < sv.values.size(); ++k) tail_sq += sv.values[k].to_double() * sv.values[k].to_double();
  const double err = factor_error(D, f);
  EXPECT_NEAR(err * err, tail_sq, 1e-20 + 1e-12 * tail_sq);
}

TEST(LowRankApprox, ExactRankOne) {
  std::mt19937_64 rng(53);
  const DenseMatrix u = random_matrix(12, 1, rng);
  const DenseMatrix v = random_matrix(12, 1, rng);
  const DenseMatrix M = mat_mul_exact(u, v.transposed());
  const FixedPoint eps = FixedPoint::pow2(-80);
  const RankFactorization f = low_rank_approx(dense_linop(M), 1, eps, 99);
  ASSERT_EQ(f.X.cols(), 1u);
  EXPECT_LE(factor_error(M, f), 10 * eps.to_double());
}

TEST(LowRankApprox, ZeroOperator) {
  const RankFactorization f = low_rank_approx(dense_linop(DenseMatrix(9, 9)), 2, FixedPoint::pow2(-64), 1);
  EXPECT_TRUE(mat_mul_exact(f.X, f.Y.transposed()) == DenseMatrix(9, 9));
}

TEST(LowRankApprox, SmallTailAgainstSvdTruncation) {
  std::mt19937_64 rng(54);
  const std::size_t n = 10;
  std::vector<double> sigma(n, 1e-9);
  sigma[0] = 1.0;
  const DenseMatrix M = with_singular_values(sigma, rng);
  const double tail = 1e-9 * std::sqrt(double(n - 1));
  const RankFactorization f = low_rank_approx(dense_linop(M), 1, FixedPoint::from_double(tail, 2), 5);
  const double err = factor_error(M, f);
  EXPECT_LE(err, double(n * n * n) * 1e-9);
  EXPECT_GE(err, 0.99 * tail);
}

TEST(LowRankApprox, DeterministicAndInRange) {
  std::mt19937_64 rng(55);
  const DenseMatrix A = random_matrix(14, 3, rng);
  const DenseMatrix B = random_matrix(14, 3, rng);
  const DenseMatrix M = mat_mul_exact(A, B.transposed());
  const FixedPoint eps = FixedPoint::pow2(-100);
  const RankFactorization f1 = low_rank_approx(dense_linop(M), 3, eps, 11);
  const RankFactorization f2 = low_rank_approx(dense_linop(M), 3, eps, 11);
  EXPECT_TRUE(f1.X.bitwise_equal(f2.X));
  EXPECT_TRUE(f1.Y.bitwise_equal(f2.Y));
  EXPECT_LE(factor_error(M, f1), 10 * eps.to_double());
  // Columns of X lie in range(M) = range(A).
  const auto P = rational_projector(A);
  const auto x = to_rationals(f1.X);
  for (std::size_t j = 0; j < 3; ++j) {
    mpq_class resid_sq = 0;
    for (std::size_t i = 0; i < 14; ++i) {
      mpq_class px = 0;
      for (std::size_t k = 0; k < 14; ++k) px += P[i * 14 + k] * x[k * 3 + j];
      resid_sq += (x[i * 3 + j] - px) * (x[i * 3 + j] - px);
    }
    EXPECT_LT(resid_sq.get_d(), 1e-40);
  }
}

TEST(LowRankApprox, FullRankShortcut) {
  std::mt19937_64 rng(56);
  const DenseMatrix M = random_matrix(3, 5, rng);
  const RankFactorization f = low_rank_approx(dense_linop(M), 4, FixedPoint::pow2(-64), 1);
  EXPECT_EQ(f.X.cols(), 4u);
  EXPECT_EQ(mat_mul_exact(f.X, f.Y.transposed()), M);
}

// Perturbing a rank-deficient matrix by eps Gaussians lifts its smallest
// singular value well above zero.
TEST(LowRankApprox, PerturbationLiftsSmallestSingularValue) {
  std::mt19937_64 rng(57);
  const double eps = std::ldexp(1.0, -40);
  int passes = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const DenseMatrix M = mat_mul_exact(random_matrix(16, 3, rng, 1), random_matrix(3, 8, rng, 1));
    std::mt19937_64 noise_rng(1000 + trial);
    std::normal_distribution<double> normal;
    std::vector<double> e(16 * 8);
    for (auto& v : e) v = eps * normal(noise_rng);
    const DenseMatrix Mt = M + DenseMatrix::from_doubles(16, 8, e, 2);
    const SpectralReport sv = svd_oracle(Mt, FixedPoint::pow2(-100));
    if (sv.values.front().to_double() >= eps * 1e-6) ++passes;
  }
  EXPECT_GE(passes, 19);
}
