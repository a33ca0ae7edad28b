#pragma once

#include <cstddef>
#include <vector>

#include "hpsolve/matrix.hpp"

namespace hpsolve {

/// Eigenvalues or singular values, sorted ascending, with the smallest
/// adjacent gap and the max/min magnitude ratio.
struct SpectralReport {
  std::vector<FixedPoint> values;
  FixedPoint min_gap;
  /// max |value| / min |value| rounded to the oracle precision; zero when
  /// the smallest magnitude is exactly zero (see `singular`).
  FixedPoint condition_number;
  bool singular = false;

  double log2_min_abs() const;
  double log2_max_abs() const;
};

struct EigenDecomposition {
  SpectralReport report;
  /// Column k is the unit eigenvector of report.values[k]; the first
  /// nonzero coordinate of every column is positive.
  DenseMatrix vectors;
};

/// Largest dimension the dense oracles accept. Defaults to 512 and can be
/// overridden with the HPSOLVE_ORACLE_CAP environment variable.
std::size_t oracle_cap();

/// Symmetric eigendecomposition by cyclic Jacobi rotations in fixed point,
/// run until the off-diagonal Frobenius mass drops below tol.
/// Throws PreconditionError for non-symmetric input, OracleCapError past the cap.
EigenDecomposition eig_sym_oracle(const DenseMatrix& A, const FixedPoint& tol);

/// Singular values from the eigenvalues of A^T A (or A A^T, whichever is
/// smaller), with the Gram eigenproblem solved to tol^2.
SpectralReport svd_oracle(const DenseMatrix& A, const FixedPoint& tol);

/// Gauss-Jordan inverse with partial pivoting. Working precision is raised
/// until the exact residual satisfies ||A Z - I||_F <= tol; gives up with
/// SingularMatrixError when no attempt succeeds.
DenseMatrix dense_inverse_oracle(const DenseMatrix& A, const FixedPoint& tol);

/// Count of singular values strictly above `threshold`.
std::size_t numerical_rank(const DenseMatrix& A, const FixedPoint& threshold, const FixedPoint& tol);

/// Tolerance 2^log2_value as an exact fixed-point number.
inline FixedPoint tolerance_pow2(long log2_value) { return FixedPoint::pow2(log2_value); }

}  // namespace hpsolve
