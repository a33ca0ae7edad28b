#include "hpsolve/block_structured.hpp"

#include <algorithm>
#include <cmath>

#include "hpsolve/spectral.hpp"

namespace hpsolve {

namespace {

void require_square(const DenseMatrix& M, const char* who) {
  if (M.rows() != M.cols()) throw DimensionError(std::string(who) + ": matrix is not square");
}

Blocks split_rows(const DenseMatrix& B, std::size_t s) {
  Blocks out;
  for (std::size_t r = 0; r < B.rows(); r += s) out.push_back(B.block(r, 0, s, B.cols()));
  return out;
}

Blocks reversed(Blocks b) {
  std::reverse(b.begin(), b.end());
  return b;
}

Blocks transposed_blocks(const Blocks& b) {
  Blocks out;
  out.reserve(b.size());
  for (const auto& x : b) out.push_back(x.transposed());
  return out;
}

DenseMatrix reverse_rows(const DenseMatrix& B) {
  DenseMatrix out(B.rows(), B.cols(), B.frac_words());
  for (std::size_t i = 0; i < B.rows(); ++i)
    for (std::size_t j = 0; j < B.cols(); ++j) out.raw(B.rows() - 1 - i, j) = B.raw(i, j);
  return out;
}

// Zero-pads the column count of F up to a multiple of s.
DenseMatrix pad_columns(const DenseMatrix& F, std::size_t s) {
  const std::size_t r = F.cols();
  const std::size_t padded = ((r + s - 1) / s) * s;
  if (padded == r) return F;
  DenseMatrix out(F.rows(), padded, F.frac_words());
  out.set_block(0, 0, F);
  return out;
}

void check_rep(const DisplacedRep& R) {
  if (R.s == 0 || R.m == 0) throw DimensionError("DisplacedRep: empty geometry");
  if (R.X.rows() != R.n() || R.Y.rows() != R.n() || R.X.cols() != R.Y.cols()) {
    throw DimensionError("DisplacedRep: factor shapes do not match (m s) x r");
  }
}

}  // namespace

DenseMatrix BlockToeplitz::densify() const {
  DenseMatrix out(s * m, s * m, 0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      out.set_block(i * s, j * s, block(static_cast<long>(i) - static_cast<long>(j)));
  return out;
}

DenseMatrix BlockHankel::densify() const {
  DenseMatrix out(s * m, s * m, 0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) out.set_block(i * s, j * s, gen[i + j]);
  return out;
}

BlockToeplitz toeplitz_from_hankel(const BlockHankel& H) { return {H.s, H.m, H.gen}; }

DenseMatrix reverse_row_blocks(const DenseMatrix& B, std::size_t s) {
  return vstack(reversed(split_rows(B, s)));
}

DenseMatrix shift_conjugate(const DenseMatrix& M, std::size_t s, ShiftDirection direction) {
  require_square(M, "shift_conjugate");
  const std::size_t n = M.rows();
  if (s > n) throw DimensionError("shift_conjugate: shift exceeds dimension");
  DenseMatrix out(n, n, M.frac_words());
  for (std::size_t i = 0; i + s < n; ++i) {
    for (std::size_t j = 0; j + s < n; ++j) {
      if (direction == ShiftDirection::down_right) {
        out.raw(i + s, j + s) = M.raw(i, j);
      } else {
        out.raw(i, j) = M.raw(i + s, j + s);
      }
    }
  }
  return out;
}

DenseMatrix displace(const DenseMatrix& M, std::size_t s, DisplacementSign sign) {
  return M - shift_conjugate(M, s, sign == DisplacementSign::plus ? ShiftDirection::down_right
                                                                  : ShiftDirection::up_left);
}

DenseMatrix undisplace(const DenseMatrix& D, std::size_t s, DisplacementSign sign) {
  require_square(D, "undisplace");
  const std::size_t n = D.rows();
  DenseMatrix M = D;
  if (s == 0 || s >= n) return M;
  if (sign == DisplacementSign::plus) {
    for (std::size_t i = s; i < n; ++i)
      for (std::size_t j = s; j < n; ++j) M.raw(i, j) += M.raw(i - s, j - s);
  } else {
    for (std::size_t i = n - s; i-- > 0;)
      for (std::size_t j = n - s; j-- > 0;) M.raw(i, j) += M.raw(i + s, j + s);
  }
  return M;
}

DenseMatrix tl_build(const DenseMatrix& X, std::size_t s) {
  if (s == 0 || X.cols() != s || X.rows() % s != 0) {
    throw DimensionError("tl_build: factor must be (m s) x s");
  }
  const std::size_t m = X.rows() / s;
  DenseMatrix out(m * s, m * s, X.frac_words());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j <= i; ++j) out.set_block(i * s, j * s, X.block((i - j) * s, 0, s, s));
  return out;
}

DenseMatrix rep_to_dense(const DisplacedRep& R) {
  check_rep(R);
  const bool minus = R.sign == DisplacementSign::minus;
  const DenseMatrix X = pad_columns(minus ? reverse_rows(R.X) : R.X, R.s);
  const DenseMatrix Y = pad_columns(minus ? reverse_rows(R.Y) : R.Y, R.s);
  DenseMatrix out(R.n(), R.n(), X.frac_words() + Y.frac_words());
  for (std::size_t c = 0; c < X.cols(); c += R.s) {
    const DenseMatrix Lx = tl_build(X.block(0, c, R.n(), R.s), R.s);
    const DenseMatrix Ly = tl_build(Y.block(0, c, R.n(), R.s), R.s);
    out += mat_mul_exact(Lx, Ly.transposed());
  }
  if (minus) out = reverse_rows(reverse_rows(out).transposed()).transposed();
  return out;
}

DisplacedRep toeplitz_generators(const BlockToeplitz& T) {
  const std::size_t s = T.s;
  const std::size_t m = T.m;
  int L = 0;
  for (const auto& g : T.gen) L = std::max(L, g.frac_words());
  DenseMatrix X(m * s, 2 * s, L);
  DenseMatrix Y(m * s, 2 * s, L);
  const DenseMatrix I = DenseMatrix::identity(s);
  X.set_block(0, 0, I);
  Y.set_block(0, s, I);
  for (std::size_t k = 0; k < m; ++k) {
    if (k >= 1) X.set_block(k * s, s, T.block(static_cast<long>(k)));
    Y.set_block(k * s, 0, T.block(-static_cast<long>(k)).transposed());
  }
  return {s, m, DisplacementSign::plus, std::move(X), std::move(Y)};
}

DisplacedOperator::DisplacedOperator(const DisplacedRep& R, const FixedPoint& delta,
                                     ConvKind kind)
    : s_(R.s), m_(R.m), n_(R.n()), sign_(R.sign) {
  check_rep(R);
  if (delta.sign() <= 0) throw std::invalid_argument("displaced_matvec: tolerance must be positive");
  const bool minus = sign_ == DisplacementSign::minus;
  const DenseMatrix X = pad_columns(minus ? reverse_rows(R.X) : R.X, s_);
  const DenseMatrix Y = pad_columns(minus ? reverse_rows(R.Y) : R.Y, s_);
  // Per-convolution tolerance: delta / (m s (1 + |X|)(1 + |Y|)).
  const double lx = std::log2(1.0 + std::exp2(std::min(max_entry_magnitude(X).log2_abs(), 1000.0)));
  const double ly = std::log2(1.0 + std::exp2(std::min(max_entry_magnitude(Y).log2_abs(), 1000.0)));
  const double lg = delta.log2_abs() - std::log2(static_cast<double>(n_)) - lx - ly;
  const FixedPoint conv_delta = FixedPoint::pow2(static_cast<long>(std::floor(lg)));
  for (std::size_t c = 0; c < X.cols(); c += s_) {
    const Blocks xb = split_rows(X.block(0, c, n_, s_), s_);
    const Blocks yb = split_rows(Y.block(0, c, n_, s_), s_);
    terms_.push_back(Term{BlockConvolver(xb, conv_delta, kind),
                          BlockConvolver(transposed_blocks(yb), conv_delta, kind),
                          BlockConvolver(transposed_blocks(xb), conv_delta, kind),
                          BlockConvolver(yb, conv_delta, kind)});
  }
}

DenseMatrix DisplacedOperator::apply_impl(const DenseMatrix& B, bool transpose) const {
  if (B.rows() != n_) throw DimensionError("displaced_matvec: input has wrong row count");
  const bool minus = sign_ == DisplacementSign::minus;
  const Blocks in = split_rows(minus ? reverse_rows(B) : B, s_);
  const Blocks in_rev = reversed(in);
  DenseMatrix out(n_, B.cols(), 0);
  for (const auto& term : terms_) {
    // plus: sum_t T_L(X_t) (T_L(Y_t)^T B); the transpose swaps the roles.
    const BlockConvolver& outer = transpose ? term.right : term.left;
    const BlockConvolver& inner_t = transpose ? term.left_t : term.right_t;
    const Blocks mid = reversed(inner_t.apply_prefix(in_rev));
    out += vstack(outer.apply_prefix(mid));
  }
  return minus ? reverse_rows(out) : out;
}

DenseMatrix DisplacedOperator::apply(const DenseMatrix& B) const { return apply_impl(B, false); }

DenseMatrix DisplacedOperator::apply_transpose(const DenseMatrix& B) const {
  return apply_impl(B, true);
}

LinOp DisplacedOperator::as_linop() const {
  auto self = std::make_shared<DisplacedOperator>(*this);
  return {n_, n_, [self](const DenseMatrix& B) { return self->apply(B); },
          [self](const DenseMatrix& B) { return self->apply_transpose(B); }};
}

DenseMatrix displaced_matvec(const DisplacedRep& R, const DenseMatrix& B, const FixedPoint& delta,
                             ConvKind kind) {
  return DisplacedOperator(R, delta, kind).apply(B);
}

std::size_t displacement_rank(const DenseMatrix& M, std::size_t s, DisplacementSign sign,
                              double rel_log2_threshold) {
  const DenseMatrix D = displace(M, s, sign);
  if (rel_log2_threshold == 0.0) {
    rel_log2_threshold = -0.5 * kWordBits * std::max(1, M.frac_words());
  }
  const FixedPoint mass = frobenius_norm_sq(D);
  if (mass.is_zero()) return 0;
  const double log_top = 0.5 * mass.log2_abs();
  // Oracle precision well below the threshold so the count is stable.
  const long tol_exp = static_cast<long>(std::floor(log_top + rel_log2_threshold - 32));
  const SpectralReport rep = svd_oracle(D, FixedPoint::pow2(tol_exp));
  if (rep.values.empty()) return 0;
  const FixedPoint sigma1 = rep.values.back();
  const double cut = sigma1.log2_abs() + rel_log2_threshold;
  std::size_t rank = 0;
  for (const auto& v : rep.values)
    if (!v.is_zero() && v.log2_abs() > cut) ++rank;
  return rank;
}

}  // namespace hpsolve
