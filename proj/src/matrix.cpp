#include "hpsolve/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hpsolve {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}

void shift_words(mpz_class& v, int words) {
  if (words > 0) mpz_mul_2exp(v.get_mpz_t(), v.get_mpz_t(), static_cast<unsigned long>(words) * kWordBits);
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, int frac_words)
    : rows_(rows), cols_(cols), frac_words_(frac_words), data_(rows * cols) {
  if (frac_words < 0) throw std::invalid_argument("negative fractional word count");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix I(n, n, 0);
  for (std::size_t i = 0; i < n; ++i) I.raw(i, i) = 1;
  return I;
}

DenseMatrix DenseMatrix::from_doubles(std::size_t rows, std::size_t cols,
                                      const std::vector<double>& row_major, int frac_words) {
  require(row_major.size() == rows * cols, "from_doubles: entry count does not match shape");
  DenseMatrix M(rows, cols, frac_words);
  for (std::size_t k = 0; k < row_major.size(); ++k) {
    M.data_[k] = FixedPoint::from_double(row_major[k], frac_words).widened(frac_words).mantissa();
  }
  return M;
}

DenseMatrix DenseMatrix::from_mantissas(std::size_t rows, std::size_t cols,
                                        std::vector<mpz_class> row_major, int frac_words) {
  require(row_major.size() == rows * cols, "from_mantissas: entry count does not match shape");
  DenseMatrix M;
  M.rows_ = rows;
  M.cols_ = cols;
  M.frac_words_ = frac_words;
  M.data_ = std::move(row_major);
  return M;
}

FixedPoint DenseMatrix::at(std::size_t i, std::size_t j) const {
  return FixedPoint::from_mantissa(raw(i, j), frac_words_);
}

void DenseMatrix::set(std::size_t i, std::size_t j, const FixedPoint& v) {
  raw(i, j) = v.rounded(frac_words_).mantissa();
}

double DenseMatrix::to_double(std::size_t i, std::size_t j) const { return at(i, j).to_double(); }

std::vector<double> DenseMatrix::to_doubles() const {
  std::vector<double> out(data_.size());
  for (std::size_t k = 0; k < data_.size(); ++k) {
    out[k] = FixedPoint::from_mantissa(data_[k], frac_words_).to_double();
  }
  return out;
}

void DenseMatrix::widen_in_place(int frac_words) {
  if (frac_words <= frac_words_) return;
  for (auto& v : data_) shift_words(v, frac_words - frac_words_);
  frac_words_ = frac_words;
}

DenseMatrix DenseMatrix::rounded(int frac_words) const {
  if (frac_words >= frac_words_) return widened(frac_words);
  DenseMatrix out(rows_, cols_, frac_words);
  const unsigned long bits = static_cast<unsigned long>(frac_words_ - frac_words) * kWordBits;
  for (std::size_t k = 0; k < data_.size(); ++k) out.data_[k] = round_shift(data_[k], bits);
  return out;
}

DenseMatrix DenseMatrix::widened(int frac_words) const {
  DenseMatrix out = *this;
  out.widen_in_place(frac_words);
  return out;
}

DenseMatrix DenseMatrix::at_most(int frac_words) const {
  return frac_words_ > frac_words ? rounded(frac_words) : *this;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix out(cols_, rows_, frac_words_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out.raw(j, i) = raw(i, j);
  return out;
}

DenseMatrix DenseMatrix::block(std::size_t r0, std::size_t c0, std::size_t nr,
                               std::size_t nc) const {
  require(r0 + nr <= rows_ && c0 + nc <= cols_, "block: window out of range");
  DenseMatrix out(nr, nc, frac_words_);
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j) out.raw(i, j) = raw(r0 + i, c0 + j);
  return out;
}

void DenseMatrix::set_block(std::size_t r0, std::size_t c0, const DenseMatrix& B) {
  require(r0 + B.rows_ <= rows_ && c0 + B.cols_ <= cols_, "set_block: window out of range");
  widen_in_place(B.frac_words_);
  const int lift = frac_words_ - B.frac_words_;
  for (std::size_t i = 0; i < B.rows_; ++i) {
    for (std::size_t j = 0; j < B.cols_; ++j) {
      mpz_class& dst = raw(r0 + i, c0 + j);
      dst = B.raw(i, j);
      shift_words(dst, lift);
    }
  }
}

DenseMatrix DenseMatrix::scaled_pow2(long exponent) const {
  if (exponent >= 0) {
    DenseMatrix out = *this;
    for (auto& v : out.data_) mpz_mul_2exp(v.get_mpz_t(), v.get_mpz_t(), static_cast<unsigned long>(exponent));
    return out;
  }
  const long need = -exponent;
  const int extra = static_cast<int>((need + kWordBits - 1) / kWordBits);
  const unsigned long up = static_cast<unsigned long>(static_cast<long>(extra) * kWordBits - need);
  DenseMatrix out(rows_, cols_, frac_words_ + extra);
  for (std::size_t k = 0; k < data_.size(); ++k) {
    mpz_mul_2exp(out.data_[k].get_mpz_t(), data_[k].get_mpz_t(), up);
  }
  return out;
}

DenseMatrix DenseMatrix::operator-() const {
  DenseMatrix out = *this;
  for (auto& v : out.data_) mpz_neg(v.get_mpz_t(), v.get_mpz_t());
  return out;
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
  require(rows_ == other.rows_ && cols_ == other.cols_, "matrix sum: shape mismatch");
  widen_in_place(other.frac_words_);
  const int lift = frac_words_ - other.frac_words_;
  if (lift == 0) {
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  } else {
    mpz_class tmp;
    for (std::size_t k = 0; k < data_.size(); ++k) {
      mpz_mul_2exp(tmp.get_mpz_t(), other.data_[k].get_mpz_t(), static_cast<unsigned long>(lift) * kWordBits);
      data_[k] += tmp;
    }
  }
  return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
  require(rows_ == other.rows_ && cols_ == other.cols_, "matrix difference: shape mismatch");
  widen_in_place(other.frac_words_);
  const int lift = frac_words_ - other.frac_words_;
  if (lift == 0) {
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  } else {
    mpz_class tmp;
    for (std::size_t k = 0; k < data_.size(); ++k) {
      mpz_mul_2exp(tmp.get_mpz_t(), other.data_[k].get_mpz_t(), static_cast<unsigned long>(lift) * kWordBits);
      data_[k] -= tmp;
    }
  }
  return *this;
}

bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) return false;
  if (a.frac_words_ == b.frac_words_) return a.data_ == b.data_;
  const int L = std::max(a.frac_words_, b.frac_words_);
  return a.widened(L).data_ == b.widened(L).data_;
}

bool DenseMatrix::bitwise_equal(const DenseMatrix& other) const {
  return rows_ == other.rows_ && cols_ == other.cols_ && frac_words_ == other.frac_words_ &&
         data_ == other.data_;
}

DenseMatrix hstack(const std::vector<DenseMatrix>& parts) {
  if (parts.empty()) return {};
  std::size_t cols = 0;
  int L = 0;
  for (const auto& p : parts) {
    require(p.rows() == parts.front().rows(), "hstack: row counts differ");
    cols += p.cols();
    L = std::max(L, p.frac_words());
  }
  DenseMatrix out(parts.front().rows(), cols, L);
  std::size_t c = 0;
  for (const auto& p : parts) {
    out.set_block(0, c, p);
    c += p.cols();
  }
  return out;
}

DenseMatrix vstack(const std::vector<DenseMatrix>& parts) {
  if (parts.empty()) return {};
  std::size_t rows = 0;
  int L = 0;
  for (const auto& p : parts) {
    require(p.cols() == parts.front().cols(), "vstack: column counts differ");
    rows += p.rows();
    L = std::max(L, p.frac_words());
  }
  DenseMatrix out(rows, parts.front().cols(), L);
  std::size_t r = 0;
  for (const auto& p : parts) {
    out.set_block(r, 0, p);
    r += p.rows();
  }
  return out;
}

DenseMatrix mat_mul_exact(const DenseMatrix& A, const DenseMatrix& B) {
  require(A.cols() == B.rows(), "mat_mul: inner dimensions differ");
  DenseMatrix C(A.rows(), B.cols(), A.frac_words() + B.frac_words());
  const std::size_t n = B.cols();
  for (std::size_t i = 0; i < A.rows(); ++i) {
    for (std::size_t k = 0; k < A.cols(); ++k) {
      const mpz_class& a = A.raw(i, k);
      if (sgn(a) == 0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        mpz_addmul(C.raw(i, j).get_mpz_t(), a.get_mpz_t(), B.raw(k, j).get_mpz_t());
      }
    }
  }
  return C;
}

DenseMatrix mat_mul(const DenseMatrix& A, const DenseMatrix& B, int frac_words) {
  return mat_mul_exact(A, B).rounded(frac_words);
}

DenseMatrix mat_tmul_exact(const DenseMatrix& A, const DenseMatrix& B) {
  require(A.rows() == B.rows(), "mat_tmul: inner dimensions differ");
  DenseMatrix C(A.cols(), B.cols(), A.frac_words() + B.frac_words());
  const std::size_t n = B.cols();
  for (std::size_t k = 0; k < A.rows(); ++k) {
    for (std::size_t i = 0; i < A.cols(); ++i) {
      const mpz_class& a = A.raw(k, i);
      if (sgn(a) == 0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        mpz_addmul(C.raw(i, j).get_mpz_t(), a.get_mpz_t(), B.raw(k, j).get_mpz_t());
      }
    }
  }
  return C;
}

DenseMatrix mat_tmul(const DenseMatrix& A, const DenseMatrix& B, int frac_words) {
  return mat_tmul_exact(A, B).rounded(frac_words);
}

DenseMatrix scale(const DenseMatrix& A, const FixedPoint& c) {
  std::vector<mpz_class> data(A.raw_data().size());
  for (std::size_t k = 0; k < data.size(); ++k) data[k] = A.raw_data()[k] * c.mantissa();
  return DenseMatrix::from_mantissas(A.rows(), A.cols(), std::move(data),
                                     A.frac_words() + c.frac_words());
}

FixedPoint frobenius_norm_sq(const DenseMatrix& A) {
  mpz_class acc;
  for (const auto& v : A.raw_data()) mpz_addmul(acc.get_mpz_t(), v.get_mpz_t(), v.get_mpz_t());
  return FixedPoint::from_mantissa(std::move(acc), 2 * A.frac_words());
}

FixedPoint max_entry_magnitude(const DenseMatrix& A) {
  mpz_class best;
  for (const auto& v : A.raw_data()) {
    if (mpz_cmpabs(v.get_mpz_t(), best.get_mpz_t()) > 0) best = abs(v);
  }
  return FixedPoint::from_mantissa(std::move(best), A.frac_words());
}

double log2_frobenius(const DenseMatrix& A) { return 0.5 * frobenius_norm_sq(A).log2_abs(); }

DenseMatrix gram(const DenseMatrix& A, int frac_words) {
  const std::size_t n = A.cols();
  DenseMatrix G(n, n, 2 * A.frac_words());
  for (std::size_t k = 0; k < A.rows(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const mpz_class& a = A.raw(k, i);
      if (sgn(a) == 0) continue;
      for (std::size_t j = i; j < n; ++j) {
        mpz_addmul(G.raw(i, j).get_mpz_t(), a.get_mpz_t(), A.raw(k, j).get_mpz_t());
      }
    }
  }
  DenseMatrix out = G.rounded(frac_words);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) out.raw(i, j) = out.raw(j, i);
  return out;
}

DenseMatrix symmetrized(const DenseMatrix& A) {
  require(A.rows() == A.cols(), "symmetrized: matrix is not square");
  DenseMatrix S = (A + A.transposed()).scaled_pow2(-1);
  // Both triangles hold the same sum; make them identical bit patterns.
  for (std::size_t i = 0; i < S.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j) S.raw(i, j) = S.raw(j, i);
  return S;
}

bool is_symmetric(const DenseMatrix& A) {
  if (A.rows() != A.cols()) return false;
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (A.raw(i, j) != A.raw(j, i)) return false;
  return true;
}

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets)
    : rows_(rows), cols_(cols) {
  for (const auto& t : triplets) {
    if (t.row >= rows || t.col >= cols) {
      throw DimensionError("sparse entry (" + std::to_string(t.row) + ", " +
                           std::to_string(t.col) + ") outside " + std::to_string(rows) + "x" +
                           std::to_string(cols));
    }
  }
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (auto& t : triplets) {
    if (!triplets_.empty() && triplets_.back().row == t.row && triplets_.back().col == t.col) {
      triplets_.back().value += t.value;
    } else {
      triplets_.push_back(std::move(t));
    }
  }
  std::erase_if(triplets_, [](const Triplet& t) { return t.value.is_zero(); });
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& A) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j)
      if (sgn(A.raw(i, j)) != 0) t.push_back({i, j, A.at(i, j)});
  return SparseMatrix(A.rows(), A.cols(), std::move(t));
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, FixedPoint::from_int(1)});
  return SparseMatrix(n, n, std::move(t));
}

int SparseMatrix::max_frac_words() const {
  int L = 0;
  for (const auto& t : triplets_) L = std::max(L, t.value.frac_words());
  return L;
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix M(rows_, cols_, max_frac_words());
  for (const auto& t : triplets_) M.set(t.row, t.col, t.value);
  return M;
}

SparseMatrix SparseMatrix::transposed() const {
  std::vector<Triplet> t;
  t.reserve(triplets_.size());
  for (const auto& e : triplets_) t.push_back({e.col, e.row, e.value});
  return SparseMatrix(cols_, rows_, std::move(t));
}

SparseMatrix SparseMatrix::at_most(int frac_words) const {
  std::vector<Triplet> t;
  t.reserve(triplets_.size());
  for (const auto& e : triplets_) t.push_back({e.row, e.col, e.value.at_most(frac_words)});
  return SparseMatrix(rows_, cols_, std::move(t));
}

SparseMatrix SparseMatrix::scaled(const FixedPoint& c) const {
  std::vector<Triplet> t;
  t.reserve(triplets_.size());
  for (const auto& e : triplets_) t.push_back({e.row, e.col, e.value * c});
  return SparseMatrix(rows_, cols_, std::move(t));
}

bool SparseMatrix::is_symmetric() const {
  if (rows_ != cols_) return false;
  return *this == transposed();
}

bool operator==(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_ || a.triplets_.size() != b.triplets_.size())
    return false;
  for (std::size_t k = 0; k < a.triplets_.size(); ++k) {
    const auto& x = a.triplets_[k];
    const auto& y = b.triplets_[k];
    if (x.row != y.row || x.col != y.col || !(x.value == y.value)) return false;
  }
  return true;
}

namespace {

// Shared kernel for A x and A^T x: each product is lifted to the common
// output scale before accumulation, so the sum is exact.
DenseMatrix sparse_apply(const SparseMatrix& A, const DenseMatrix& x, bool transpose) {
  const std::size_t out_rows = transpose ? A.cols() : A.rows();
  const std::size_t in_rows = transpose ? A.rows() : A.cols();
  require(x.rows() == in_rows, "sparse_matvec: dimension mismatch");
  const int La = A.max_frac_words();
  DenseMatrix y(out_rows, x.cols(), La + x.frac_words());
  mpz_class coef;
  for (const auto& t : A.triplets()) {
    const std::size_t r = transpose ? t.col : t.row;
    const std::size_t c = transpose ? t.row : t.col;
    coef = t.value.mantissa();
    shift_words(coef, La - t.value.frac_words());
    for (std::size_t j = 0; j < x.cols(); ++j) {
      mpz_addmul(y.raw(r, j).get_mpz_t(), coef.get_mpz_t(), x.raw(c, j).get_mpz_t());
    }
  }
  return y;
}

}  // namespace

DenseMatrix sparse_matvec(const SparseMatrix& A, const DenseMatrix& x) {
  return sparse_apply(A, x, false);
}

DenseMatrix sparse_tmatvec(const SparseMatrix& A, const DenseMatrix& x) {
  return sparse_apply(A, x, true);
}

SparseMatrix operator+(const SparseMatrix& a, const SparseMatrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sparse sum: shape mismatch");
  std::vector<Triplet> t = a.triplets();
  t.insert(t.end(), b.triplets().begin(), b.triplets().end());
  return SparseMatrix(a.rows(), a.cols(), std::move(t));
}

FixedPoint max_entry_magnitude(const SparseMatrix& A) {
  FixedPoint best;
  for (const auto& t : A.triplets()) {
    FixedPoint v = t.value.abs();
    if (v > best) best = v;
  }
  return best;
}

}  // namespace hpsolve
