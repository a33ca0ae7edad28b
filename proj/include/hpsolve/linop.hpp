#pragma once

#include <cstddef>
#include <functional>
#include <memory>

#include "hpsolve/matrix.hpp"

namespace hpsolve {

/// A linear map known only through products with blocks of vectors.
/// apply(B) must be a fixed linear function of B: the same input gives the
/// same bits every time.
struct LinOp {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::function<DenseMatrix(const DenseMatrix&)> apply;
  std::function<DenseMatrix(const DenseMatrix&)> apply_transpose;

  LinOp transposed() const { return {cols, rows, apply_transpose, apply}; }
};

/// Wraps an explicit matrix; products are exact.
inline LinOp dense_linop(DenseMatrix A) {
  const std::size_t r = A.rows();
  const std::size_t c = A.cols();
  auto At = std::make_shared<DenseMatrix>(A.transposed());
  auto Ap = std::make_shared<DenseMatrix>(std::move(A));
  return {r, c, [Ap](const DenseMatrix& B) { return mat_mul_exact(*Ap, B); },
          [At](const DenseMatrix& B) { return mat_mul_exact(*At, B); }};
}

/// Materializes op by applying it to the identity.
inline DenseMatrix densify(const LinOp& op) { return op.apply(DenseMatrix::identity(op.cols)); }

}  // namespace hpsolve
