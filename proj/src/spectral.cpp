#include "hpsolve/spectral.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <string>

namespace hpsolve {

namespace {

int words_for_tol(const FixedPoint& tol) {
  if (tol.sign() <= 0) throw std::invalid_argument("oracle tolerance must be positive");
  return std::max(1, words_for_log2(tol.log2_abs()));
}

void check_cap(std::size_t n, const char* who) {
  const std::size_t cap = oracle_cap();
  if (n > cap) {
    throw OracleCapError(std::string(who) + ": dimension " + std::to_string(n) +
                         " exceeds oracle cap " + std::to_string(cap));
  }
}

mpz_class pow2_mpz(unsigned long bits) {
  mpz_class v;
  mpz_ui_pow_ui(v.get_mpz_t(), 2, bits);
  return v;
}

SpectralReport make_report(std::vector<FixedPoint> values, int frac_words) {
  std::sort(values.begin(), values.end());
  SpectralReport rep;
  rep.values = std::move(values);
  if (rep.values.size() >= 2) {
    rep.min_gap = rep.values[1] - rep.values[0];
    for (std::size_t k = 2; k < rep.values.size(); ++k) {
      FixedPoint g = rep.values[k] - rep.values[k - 1];
      if (g < rep.min_gap) rep.min_gap = g;
    }
  }
  if (!rep.values.empty()) {
    FixedPoint lo = rep.values.front().abs();
    FixedPoint hi = lo;
    for (const auto& v : rep.values) {
      FixedPoint a = v.abs();
      if (a < lo) lo = a;
      if (a > hi) hi = a;
    }
    if (lo.is_zero()) {
      rep.singular = true;
    } else {
      rep.condition_number = fp_div(hi, lo, frac_words);
    }
  }
  return rep;
}

}  // namespace

double SpectralReport::log2_min_abs() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& v : values) best = std::min(best, v.log2_abs());
  return best;
}

double SpectralReport::log2_max_abs() const {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : values) best = std::max(best, v.log2_abs());
  return best;
}

std::size_t oracle_cap() {
  if (const char* env = std::getenv("HPSOLVE_ORACLE_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return 512;
}

EigenDecomposition eig_sym_oracle(const DenseMatrix& A, const FixedPoint& tol) {
  if (A.rows() != A.cols()) throw PreconditionError("eig_sym_oracle: matrix is not square");
  if (!is_symmetric(A)) throw PreconditionError("eig_sym_oracle: matrix is not symmetric");
  const std::size_t n = A.rows();
  check_cap(n, "eig_sym_oracle");
  const int W = words_for_tol(tol) + 1;
  const unsigned long bits = static_cast<unsigned long>(W) * kWordBits;

  DenseMatrix a = A.rounded(W);
  DenseMatrix v(n, n, W);
  const mpz_class one = pow2_mpz(bits);
  for (std::size_t i = 0; i < n; ++i) v.raw(i, i) = one;

  const FixedPoint tol_w = tol.rounded(W);
  const mpz_class tol_sq = tol_w.mantissa() * tol_w.mantissa();
  // Entries this small cannot matter for convergence: n^2 of them still sit
  // well below tol^2 in off-diagonal mass.
  const mpz_class skip = tol_w.mantissa() / static_cast<unsigned long>(16 * std::max<std::size_t>(n, 1));

  mpz_class off, N, D, hyp, den, t, c, s, tmp, tmp2, arp, arq;
  constexpr int kMaxSweeps = 100;
  bool converged = false;
  for (int sweep = 0; sweep <= kMaxSweeps; ++sweep) {
    off = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        mpz_addmul(off.get_mpz_t(), a.raw(i, j).get_mpz_t(), a.raw(i, j).get_mpz_t());
    off *= 2;
    if (off < tol_sq) {
      converged = true;
      break;
    }
    if (sweep == kMaxSweeps) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const mpz_class& apq = a.raw(p, q);
        if (mpz_cmpabs(apq.get_mpz_t(), skip.get_mpz_t()) <= 0) continue;
        N = a.raw(q, q) - a.raw(p, p);
        D = apq * 2;
        // t = sgn(N D) |D| / (|N| + sqrt(N^2 + D^2)), evaluated one word finer.
        tmp = N * N;
        mpz_addmul(tmp.get_mpz_t(), D.get_mpz_t(), D.get_mpz_t());
        mpz_mul_2exp(tmp.get_mpz_t(), tmp.get_mpz_t(), 2 * kWordBits);
        mpz_sqrt(hyp.get_mpz_t(), tmp.get_mpz_t());
        mpz_abs(den.get_mpz_t(), N.get_mpz_t());
        mpz_mul_2exp(den.get_mpz_t(), den.get_mpz_t(), kWordBits);
        den += hyp;
        mpz_abs(tmp.get_mpz_t(), D.get_mpz_t());
        mpz_mul_2exp(tmp.get_mpz_t(), tmp.get_mpz_t(), bits + kWordBits);
        t = round_div(tmp, den);
        if (sgn(N) * sgn(D) < 0) t = -t;
        // c = 1 / sqrt(1 + t^2), s = t c.
        tmp = one * one;
        mpz_addmul(tmp.get_mpz_t(), t.get_mpz_t(), t.get_mpz_t());
        mpz_mul_2exp(tmp.get_mpz_t(), tmp.get_mpz_t(), 2 * kWordBits);
        mpz_sqrt(hyp.get_mpz_t(), tmp.get_mpz_t());
        tmp = one;
        mpz_mul_2exp(tmp.get_mpz_t(), tmp.get_mpz_t(), bits + kWordBits);
        c = round_div(tmp, hyp);
        tmp = t * c;
        round_shift_into(s, tmp, bits);

        tmp = t * apq;
        round_shift_into(tmp, tmp, bits);
        a.raw(p, p) -= tmp;
        a.raw(q, q) += tmp;
        a.raw(p, q) = 0;
        a.raw(q, p) = 0;
        for (std::size_t r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          arp = a.raw(r, p);
          arq = a.raw(r, q);
          tmp = c * arp;
          mpz_submul(tmp.get_mpz_t(), s.get_mpz_t(), arq.get_mpz_t());
          round_shift_into(tmp, tmp, bits);
          tmp2 = s * arp;
          mpz_addmul(tmp2.get_mpz_t(), c.get_mpz_t(), arq.get_mpz_t());
          round_shift_into(tmp2, tmp2, bits);
          a.raw(r, p) = tmp;
          a.raw(p, r) = tmp;
          a.raw(r, q) = tmp2;
          a.raw(q, r) = tmp2;
        }
        for (std::size_t r = 0; r < n; ++r) {
          arp = v.raw(r, p);
          arq = v.raw(r, q);
          tmp = c * arp;
          mpz_submul(tmp.get_mpz_t(), s.get_mpz_t(), arq.get_mpz_t());
          round_shift_into(v.raw(r, p), tmp, bits);
          tmp2 = s * arp;
          mpz_addmul(tmp2.get_mpz_t(), c.get_mpz_t(), arq.get_mpz_t());
          round_shift_into(v.raw(r, q), tmp2, bits);
        }
      }
    }
  }
  if (!converged) throw SingularMatrixError("eig_sym_oracle: Jacobi sweeps did not converge");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return a.raw(x, x) < a.raw(y, y);
  });
  std::vector<FixedPoint> values;
  values.reserve(n);
  EigenDecomposition out;
  out.vectors = DenseMatrix(n, n, W);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    values.push_back(FixedPoint::from_mantissa(a.raw(src, src), W));
    int sign = 0;
    for (std::size_t r = 0; r < n && sign == 0; ++r) sign = sgn(v.raw(r, src));
    for (std::size_t r = 0; r < n; ++r) {
      out.vectors.raw(r, k) = sign < 0 ? mpz_class(-v.raw(r, src)) : v.raw(r, src);
    }
  }
  out.report = make_report(std::move(values), W);
  return out;
}

SpectralReport svd_oracle(const DenseMatrix& A, const FixedPoint& tol) {
  check_cap(std::min(A.rows(), A.cols()), "svd_oracle");
  const int W = words_for_tol(tol) + 1;
  DenseMatrix G = A.rows() >= A.cols() ? mat_tmul_exact(A, A) : mat_mul_exact(A, A.transposed());
  // The Gram product is exact, hence exactly symmetric.
  const FixedPoint tol_sq = tol * tol;
  EigenDecomposition e = eig_sym_oracle(G, tol_sq);
  std::vector<FixedPoint> sigma;
  sigma.reserve(e.report.values.size());
  for (const auto& lam : e.report.values) {
    sigma.push_back(lam.sign() > 0 ? fp_sqrt(lam, W) : FixedPoint::from_mantissa(0, W));
  }
  return make_report(std::move(sigma), W);
}

DenseMatrix dense_inverse_oracle(const DenseMatrix& A, const FixedPoint& tol) {
  if (A.rows() != A.cols()) throw DimensionError("dense_inverse_oracle: matrix is not square");
  const std::size_t n = A.rows();
  check_cap(n, "dense_inverse_oracle");
  const int base = words_for_tol(tol);
  const FixedPoint tol_sq = tol * tol;
  const DenseMatrix I = DenseMatrix::identity(n);

  mpz_class tmp, f;
  for (int extra : {1, 3, 7, 15, 31, 63, 127}) {
    const int W = base + extra;
    const unsigned long bits = static_cast<unsigned long>(W) * kWordBits;
    DenseMatrix M = A.rounded(W);
    DenseMatrix R = I.widened(W);
    bool singular = false;
    for (std::size_t k = 0; k < n && !singular; ++k) {
      std::size_t piv = k;
      for (std::size_t i = k + 1; i < n; ++i) {
        if (mpz_cmpabs(M.raw(i, k).get_mpz_t(), M.raw(piv, k).get_mpz_t()) > 0) piv = i;
      }
      if (sgn(M.raw(piv, k)) == 0) {
        singular = true;
        break;
      }
      if (piv != k) {
        for (std::size_t j = 0; j < n; ++j) {
          std::swap(M.raw(k, j), M.raw(piv, j));
          std::swap(R.raw(k, j), R.raw(piv, j));
        }
      }
      const mpz_class pivot = M.raw(k, k);
      for (std::size_t j = k + 1; j < n; ++j) {
        mpz_mul_2exp(tmp.get_mpz_t(), M.raw(k, j).get_mpz_t(), bits);
        M.raw(k, j) = round_div(tmp, pivot);
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (sgn(R.raw(k, j)) == 0) continue;
        mpz_mul_2exp(tmp.get_mpz_t(), R.raw(k, j).get_mpz_t(), bits);
        R.raw(k, j) = round_div(tmp, pivot);
      }
      mpz_ui_pow_ui(M.raw(k, k).get_mpz_t(), 2, bits);
      for (std::size_t i = 0; i < n; ++i) {
        if (i == k) continue;
        f = M.raw(i, k);
        if (sgn(f) == 0) continue;
        for (std::size_t j = k + 1; j < n; ++j) {
          tmp = f * M.raw(k, j);
          round_shift_into(tmp, tmp, bits);
          M.raw(i, j) -= tmp;
        }
        M.raw(i, k) = 0;
        for (std::size_t j = 0; j < n; ++j) {
          if (sgn(R.raw(k, j)) == 0) continue;
          tmp = f * R.raw(k, j);
          round_shift_into(tmp, tmp, bits);
          R.raw(i, j) -= tmp;
        }
      }
    }
    if (singular) continue;
    DenseMatrix E = mat_mul_exact(A, R) - I;
    if (frobenius_norm_sq(E) <= tol_sq) return R;
  }
  throw SingularMatrixError("dense_inverse_oracle: residual tolerance not reached; matrix is singular or too ill-conditioned");
}

std::size_t numerical_rank(const DenseMatrix& A, const FixedPoint& threshold, const FixedPoint& tol) {
  const SpectralReport rep = svd_oracle(A, tol);
  std::size_t rank = 0;
  for (const auto& s : rep.values)
    if (s > threshold) ++rank;
  return rank;
}

}  // namespace hpsolve
