#pragma once

#include <cstddef>
#include <cstdint>

#include "hpsolve/linop.hpp"
#include "hpsolve/matrix.hpp"

namespace hpsolve {

/// M ~ X Y^T with r columns in each factor. X has orthonormal columns when
/// produced by low_rank_approx.
struct RankFactorization {
  DenseMatrix X;
  DenseMatrix Y;
  std::size_t r = 0;
};

struct LowRankOptions {
  /// Sketch width; 0 selects 4r + 8, capped by the operator dimensions.
  std::size_t sketch_cols = 0;
  /// Word count of the returned factors; negative derives it from eps.
  int frac_words = -1;
};

/// n x c standard Gaussians truncated at |g| <= max(n, 2), one word each.
DenseMatrix gaussian_sketch(std::size_t n, std::size_t c, std::uint64_t seed);

/// Orthonormal basis of the columns of M (c <= n), X = M (M^T M)^{-1/2},
/// with ||X^T X - I||_F <= tol. Throws SingularMatrixError when M^T M has a
/// nonpositive eigenvalue at the working precision.
DenseMatrix orthonormalize(const DenseMatrix& M, const FixedPoint& tol);

/// Best rank-r factors of Xh Yh^T computed from c x c eigenproblems only.
/// Directions of Xh with Gram eigenvalue below tol are dropped.
RankFactorization rank_r_svd_of_product(const DenseMatrix& Xh, const DenseMatrix& Yh,
                                        std::size_t r, const FixedPoint& tol);

/// Randomized rank-r factorization of the matrix behind op, which is assumed
/// to lie within Frobenius distance eps of a rank-r matrix.
RankFactorization low_rank_approx(const LinOp& op, std::size_t r, const FixedPoint& eps,
                                  std::uint64_t seed, const LowRankOptions& options = {});

}  // namespace hpsolve
