#include "hpsolve/lowrank.hpp"

#include <algorithm>
#include <cmath>

#include "hpsolve/random.hpp"
#include "hpsolve/spectral.hpp"

namespace hpsolve {

namespace {

int words_for(const FixedPoint& tol) { return std::max(1, words_for_log2(tol.log2_abs())); }

long floor_log2(const FixedPoint& v) { return static_cast<long>(std::floor(v.log2_abs())); }
long ceil_log2(const FixedPoint& v) { return static_cast<long>(std::ceil(v.log2_abs())); }

// V diag(f(lambda)) V^T, each entry rounded to `words`.
DenseMatrix spectral_function(const DenseMatrix& V, const std::vector<FixedPoint>& f, int words) {
  const std::size_t c = V.rows();
  DenseMatrix VF(c, c, words);
  for (std::size_t j = 0; j < c; ++j) {
    if (f[j].is_zero()) continue;
    for (std::size_t i = 0; i < c; ++i) VF.set(i, j, V.at(i, j) * f[j]);
  }
  return mat_mul(VF, V.transposed(), words);
}

DenseMatrix pad_columns(const DenseMatrix& A, std::size_t cols) {
  if (A.cols() >= cols) return A;
  DenseMatrix out(A.rows(), cols, A.frac_words());
  out.set_block(0, 0, A);
  return out;
}

}  // namespace

DenseMatrix gaussian_sketch(std::size_t n, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return gaussian_matrix(n, c, rng, std::max(2.0, static_cast<double>(n)), 1);
}

DenseMatrix orthonormalize(const DenseMatrix& M, const FixedPoint& tol) {
  const std::size_t n = M.rows();
  const std::size_t c = M.cols();
  if (c > n) throw DimensionError("orthonormalize: more columns than rows");
  if (c == 0) return M;
  const int W = words_for(tol) + 1;
  const DenseMatrix G = mat_tmul_exact(M, M);
  const FixedPoint gmax = max_entry_magnitude(G);
  if (gmax.is_zero()) throw SingularMatrixError("orthonormalize: zero matrix");

  // Rough inverse square root: only needs X^T X within 2^-32 of I, the
  // Newton-Schulz sweeps below do the rest. Tighten the eigen tolerance
  // until the smallest eigenvalue sits well above it.
  const long top = ceil_log2(gmax);
  long tau_log2 = top - 96;
  const long floor_log2_tau = top - 2L * kWordBits * W - 64;
  EigenDecomposition eig;
  for (;;) {
    eig = eig_sym_oracle(G, FixedPoint::pow2(tau_log2));
    const FixedPoint& lmin = eig.report.values.front();
    if (lmin.sign() > 0 && lmin.log2_abs() >= static_cast<double>(tau_log2 + 32)) break;
    if (tau_log2 <= floor_log2_tau) throw SingularMatrixError("orthonormalize: Gram matrix is numerically singular");
    tau_log2 = lmin.sign() > 0 ? std::max(floor_log2_tau, floor_log2(lmin) - 96) : tau_log2 - 2 * kWordBits;
  }
  // Words for R: enough to resolve the largest entry of lambda^-1/2 to 2^-64.
  const long rmax_log2 = std::max(0L, -floor_log2(eig.report.values.front()) / 2 + 1);
  const int Wr = W + static_cast<int>((rmax_log2 + kWordBits - 1) / kWordBits);
  std::vector<FixedPoint> inv_sqrt;
  for (const auto& lam : eig.report.values) inv_sqrt.push_back(fp_div(FixedPoint::from_int(1), fp_sqrt(lam, Wr + 1), Wr));
  const DenseMatrix R = spectral_function(eig.vectors, inv_sqrt, Wr);
  DenseMatrix X = mat_mul(M, R, W);

  const DenseMatrix I = DenseMatrix::identity(c);
  const FixedPoint tol_sq = tol * tol;
  for (int iter = 0; iter < 64; ++iter) {
    const DenseMatrix E = I - mat_tmul_exact(X, X);
    if (frobenius_norm_sq(E) <= tol_sq) return X;
    X = (X + mat_mul(X, E.rounded(W + 1), W + 1).scaled_pow2(-1)).rounded(W);
  }
  throw SingularMatrixError("orthonormalize: Newton-Schulz iteration stalled");
}

RankFactorization rank_r_svd_of_product(const DenseMatrix& Xh, const DenseMatrix& Yh, std::size_t r,
                                        const FixedPoint& tol) {
  if (Xh.cols() != Yh.cols()) throw DimensionError("rank_r_svd_of_product: factor widths differ");
  const std::size_t c = Xh.cols();
  const int W = words_for(tol) + 1;
  RankFactorization out{DenseMatrix(Xh.rows(), r, W), DenseMatrix(Yh.rows(), r, W), r};
  if (c == 0) return out;

  const FixedPoint eig_tol = tol.scaled_pow2(-8);
  const EigenDecomposition gx = eig_sym_oracle(mat_tmul_exact(Xh, Xh), eig_tol);
  std::vector<FixedPoint> root(c), inv_root(c);
  bool any = false;
  for (std::size_t k = 0; k < c; ++k) {
    const FixedPoint& lam = gx.report.values[k];
    if (lam <= tol) continue;
    any = true;
    root[k] = fp_sqrt(lam, W);
    inv_root[k] = fp_div(FixedPoint::from_int(1), root[k], W);
  }
  if (!any) return out;
  const DenseMatrix P = spectral_function(gx.vectors, root, W);
  const DenseMatrix Pinv = spectral_function(gx.vectors, inv_root, W);

  const DenseMatrix B = mat_mul(Yh, P, W);
  const DenseMatrix inner = gram(B, W);
  const FixedPoint scale_hint = FixedPoint::from_int(1) + max_entry_magnitude(inner);
  const EigenDecomposition gi = eig_sym_oracle(inner, eig_tol * scale_hint.rounded(0));
  const std::size_t keep = std::min(r, c);
  DenseMatrix Wr(c, keep, W);
  for (std::size_t k = 0; k < keep; ++k) {
    const std::size_t src = c - 1 - k;  // descending singular values
    for (std::size_t i = 0; i < c; ++i) Wr.set(i, k, gi.vectors.at(i, src));
  }
  out.X.set_block(0, 0, mat_mul(Xh, mat_mul(Pinv, Wr, W), W));
  out.Y.set_block(0, 0, mat_mul(B, Wr, W));
  out.X = out.X.rounded(W);
  out.Y = out.Y.rounded(W);
  return out;
}

RankFactorization low_rank_approx(const LinOp& op, std::size_t r, const FixedPoint& eps,
                                  std::uint64_t seed, const LowRankOptions& options) {
  if (eps.sign() <= 0) throw std::invalid_argument("low_rank_approx: eps must be positive");
  const std::size_t rows = op.rows;
  const std::size_t cols = op.cols;
  const long size_log2 = static_cast<long>(std::ceil(std::log2(static_cast<double>(rows + cols + 1))));
  const int Wout = options.frac_words >= 0 ? options.frac_words
                                           : std::max(1, words_for_log2(static_cast<double>(floor_log2(eps) - 10 - size_log2)));

  if (r >= std::min(rows, cols)) {
    // Nothing to compress: return the matrix itself against an identity.
    RankFactorization out;
    out.r = r;
    if (cols <= rows) {
      out.X = pad_columns(densify(op), r).at_most(Wout);
      out.Y = pad_columns(DenseMatrix::identity(cols), r);
    } else {
      out.X = pad_columns(DenseMatrix::identity(rows), r);
      out.Y = pad_columns(op.apply_transpose(DenseMatrix::identity(rows)), r).at_most(Wout);
    }
    return out;
  }

  const std::size_t c = std::min({options.sketch_cols ? options.sketch_cols : 4 * r + 8, rows, cols});
  const DenseMatrix S = gaussian_sketch(cols, c, seed);
  const DenseMatrix Mh = op.apply(S);
  std::mt19937_64 noise_rng(splitmix64(seed ^ 0x6E6F697365ULL));
  const DenseMatrix noise = gaussian_matrix(rows, c, noise_rng, std::max(2.0, static_cast<double>(rows)), 1);
  const DenseMatrix Mt = Mh + scale(noise, eps);

  const long mag_log2 = std::max(0L, ceil_log2(FixedPoint::from_int(1) + frobenius_norm_sq(Mh)) / 2 + 1);
  const FixedPoint tol_orth = FixedPoint::pow2(floor_log2(eps) - 10 - mag_log2);
  const DenseMatrix Xh = orthonormalize(Mt, tol_orth);
  const DenseMatrix Yh = op.apply_transpose(Xh).at_most(words_for(tol_orth) + 1);

  RankFactorization f = rank_r_svd_of_product(Xh, Yh, r, tol_orth);
  f.X = f.X.rounded(Wout);
  f.Y = f.Y.rounded(Wout);
  return f;
}

}  // namespace hpsolve
