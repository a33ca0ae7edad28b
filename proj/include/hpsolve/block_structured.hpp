#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "hpsolve/conv_fft.hpp"
#include "hpsolve/linop.hpp"
#include "hpsolve/matrix.hpp"

namespace hpsolve {

enum class DisplacementSign { plus, minus };
enum class ShiftDirection { down_right, up_left };

/// m x m grid of s x s blocks with T_{ij} = gen[i - j + m - 1].
struct BlockToeplitz {
  std::size_t s = 0;
  std::size_t m = 0;
  Blocks gen;  // 2m - 1 blocks, offsets -(m-1) .. m-1

  const DenseMatrix& block(long offset) const {
    return gen[static_cast<std::size_t>(offset + static_cast<long>(m) - 1)];
  }
  DenseMatrix densify() const;
};

/// m x m grid of s x s blocks with H_{ij} = gen[i + j].
struct BlockHankel {
  std::size_t s = 0;
  std::size_t m = 0;
  Blocks gen;  // 2m - 1 blocks

  DenseMatrix densify() const;
};

/// Column-block reversal: T = H J. The generator sequence is shared, only
/// its indexing changes.
BlockToeplitz toeplitz_from_hankel(const BlockHankel& H);
/// Reverses the order of the row blocks of B (ms x k).
DenseMatrix reverse_row_blocks(const DenseMatrix& B, std::size_t s);

/// Factors (X, Y) of the displaced matrix: the represented M is the unique
/// solution of M - D M D^T = X Y^T (plus) or M - D^T M D = X Y^T (minus),
/// where D shifts down by s.
struct DisplacedRep {
  std::size_t s = 0;
  std::size_t m = 0;
  DisplacementSign sign = DisplacementSign::plus;
  DenseMatrix X;
  DenseMatrix Y;

  std::size_t n() const { return s * m; }
  std::size_t rank() const { return X.cols(); }
  /// Representation of M^T (same sign, factors swapped).
  DisplacedRep transposed() const { return {s, m, sign, Y, X}; }
  int frac_words() const { return std::max(X.frac_words(), Y.frac_words()); }
};

DenseMatrix shift_conjugate(const DenseMatrix& M, std::size_t s, ShiftDirection direction);
DenseMatrix displace(const DenseMatrix& M, std::size_t s, DisplacementSign sign);
DenseMatrix undisplace(const DenseMatrix& D, std::size_t s, DisplacementSign sign);

/// Lower block-triangular Toeplitz matrix whose first block column is X
/// ((m s) x s): block (i, j) is X_{i-j} for j <= i.
DenseMatrix tl_build(const DenseMatrix& X, std::size_t s);

/// Exact densification of a displaced representation.
DenseMatrix rep_to_dense(const DisplacedRep& R);

/// Rank-2s generators of a block Toeplitz matrix under the plus displacement.
DisplacedRep toeplitz_generators(const BlockToeplitz& T);

/// Fixed linear operator approximating the matrix of a DisplacedRep through
/// triangular block-Toeplitz convolutions. Kernel transforms are computed
/// once at construction; apply() is then reentrant.
class DisplacedOperator {
 public:
  /// delta is the Frobenius tolerance of the whole operator.
  DisplacedOperator(const DisplacedRep& R, const FixedPoint& delta, ConvKind kind = ConvKind::fft);

  std::size_t n() const { return n_; }
  DenseMatrix apply(const DenseMatrix& B) const;
  DenseMatrix apply_transpose(const DenseMatrix& B) const;
  LinOp as_linop() const;

 private:
  struct Term {
    BlockConvolver left;        // T_L(X_t) (or its reversed form for minus)
    BlockConvolver right_t;     // blocks Y_{t,k}^T: realizes T_L(Y_t)^T
    BlockConvolver left_t;      // blocks X_{t,k}^T: realizes T_L(X_t)^T
    BlockConvolver right;       // T_L(Y_t)
  };
  DenseMatrix apply_impl(const DenseMatrix& B, bool transpose) const;

  std::size_t s_ = 0;
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  DisplacementSign sign_ = DisplacementSign::plus;
  std::vector<Term> terms_;
};

/// One-shot product Z B for the operator above.
DenseMatrix displaced_matvec(const DisplacedRep& R, const DenseMatrix& B, const FixedPoint& delta,
                             ConvKind kind = ConvKind::fft);

/// Numerical rank of displace(M, s, sign): singular values above
/// sigma_1 * 2^rel_log2_threshold. The default threshold is half the
/// matrix's fractional bits (at least one word).
std::size_t displacement_rank(const DenseMatrix& M, std::size_t s, DisplacementSign sign,
                              double rel_log2_threshold = 0.0);

}  // namespace hpsolve
