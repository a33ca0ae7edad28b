#pragma once

#include <cstddef>
#include <vector>

#include "hpsolve/errors.hpp"
#include "hpsolve/fixed_point.hpp"

namespace hpsolve {

/// Dense fixed-point matrix.
///
/// All entries share one fractional word count, so entry (i, j) has value
/// raw(i, j) * 2^(-64 * frac_words()). Sharing the scale keeps the inner
/// product loops on plain big integers; values with fewer words are stored
/// exactly by shifting.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, int frac_words = 0);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix from_doubles(std::size_t rows, std::size_t cols,
                                  const std::vector<double>& row_major, int frac_words);
  static DenseMatrix from_mantissas(std::size_t rows, std::size_t cols,
                                    std::vector<mpz_class> row_major, int frac_words);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  int frac_words() const { return frac_words_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  const mpz_class& raw(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  mpz_class& raw(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const std::vector<mpz_class>& raw_data() const { return data_; }
  std::vector<mpz_class>& raw_data() { return data_; }

  FixedPoint at(std::size_t i, std::size_t j) const;
  /// Stores v, rounding it to this matrix's word count if it carries more.
  void set(std::size_t i, std::size_t j, const FixedPoint& v);
  double to_double(std::size_t i, std::size_t j) const;
  std::vector<double> to_doubles() const;

  /// Nearest matrix with exactly `frac_words` words (exact when widening).
  DenseMatrix rounded(int frac_words) const;
  DenseMatrix widened(int frac_words) const;
  /// Rounds only when the matrix carries more than `frac_words` words.
  DenseMatrix at_most(int frac_words) const;

  DenseMatrix transposed() const;
  DenseMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  /// Copies B into the window at (r0, c0); both operands are brought to the
  /// larger word count first, so nothing is lost.
  void set_block(std::size_t r0, std::size_t c0, const DenseMatrix& B);
  DenseMatrix scaled_pow2(long exponent) const;

  DenseMatrix operator-() const;
  DenseMatrix& operator+=(const DenseMatrix& other);
  DenseMatrix& operator-=(const DenseMatrix& other);
  friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
  friend DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }

  /// Value equality, independent of the stored word counts.
  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b);
  /// Same shape, same word count, same mantissas.
  bool bitwise_equal(const DenseMatrix& other) const;

 private:
  void widen_in_place(int frac_words);

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  int frac_words_ = 0;
  std::vector<mpz_class> data_;
};

DenseMatrix hstack(const std::vector<DenseMatrix>& parts);
DenseMatrix vstack(const std::vector<DenseMatrix>& parts);

/// Exact product; the result carries A.frac_words + B.frac_words words.
DenseMatrix mat_mul_exact(const DenseMatrix& A, const DenseMatrix& B);
/// Exact product rounded to `frac_words` words.
DenseMatrix mat_mul(const DenseMatrix& A, const DenseMatrix& B, int frac_words);
/// Exact A^T B.
DenseMatrix mat_tmul_exact(const DenseMatrix& A, const DenseMatrix& B);
DenseMatrix mat_tmul(const DenseMatrix& A, const DenseMatrix& B, int frac_words);
/// Exact entrywise multiplication by a scalar.
DenseMatrix scale(const DenseMatrix& A, const FixedPoint& c);

FixedPoint frobenius_norm_sq(const DenseMatrix& A);
FixedPoint max_entry_magnitude(const DenseMatrix& A);
/// log2 of the Frobenius norm, to double accuracy; -infinity for zero.
double log2_frobenius(const DenseMatrix& A);

/// A^T A rounded to `frac_words`; the lower triangle mirrors the upper
/// triangle bit for bit.
DenseMatrix gram(const DenseMatrix& A, int frac_words);
/// (A + A^T) / 2, exact.
DenseMatrix symmetrized(const DenseMatrix& A);
bool is_symmetric(const DenseMatrix& A);

struct Triplet {
  std::size_t row;
  std::size_t col;
  FixedPoint value;
};

/// Coordinate-list sparse matrix: triplets sorted by (row, col), unique
/// positions, no stored zeros. Each entry keeps its own word count.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  /// Sorts, sums duplicate positions and drops zeros. Throws DimensionError
  /// for out-of-range indices.
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets);

  static SparseMatrix from_dense(const DenseMatrix& A);
  static SparseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return triplets_.size(); }
  const std::vector<Triplet>& triplets() const { return triplets_; }
  int max_frac_words() const;

  DenseMatrix to_dense() const;
  SparseMatrix transposed() const;
  /// Entries rounded to at most `frac_words` words; entries that become zero
  /// are dropped.
  SparseMatrix at_most(int frac_words) const;
  /// Every entry multiplied by c exactly.
  SparseMatrix scaled(const FixedPoint& c) const;
  bool is_symmetric() const;

  friend bool operator==(const SparseMatrix& a, const SparseMatrix& b);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Triplet> triplets_;
};

/// Exact product A x. The result carries max entry words + x.frac_words.
DenseMatrix sparse_matvec(const SparseMatrix& A, const DenseMatrix& x);
/// Exact A^T x.
DenseMatrix sparse_tmatvec(const SparseMatrix& A, const DenseMatrix& x);
SparseMatrix operator+(const SparseMatrix& a, const SparseMatrix& b);
FixedPoint max_entry_magnitude(const SparseMatrix& A);

}  // namespace hpsolve
