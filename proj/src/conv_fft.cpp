#include "hpsolve/conv_fft.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace hpsolve {

namespace {

void require_pow2(std::size_t t) {
  if (t == 0 || !std::has_single_bit(t)) {
    throw std::invalid_argument("transform length must be a power of two");
  }
}

void require_positive(const FixedPoint& delta) {
  if (delta.sign() <= 0) throw std::invalid_argument("convolution tolerance must be positive");
}

unsigned log2_exact(std::size_t t) { return static_cast<unsigned>(std::countr_zero(t)); }

// delta / ((1 + ||X||_inf) t^2 s^2), as a log2 value.
double conv_fft_log2_tol(const Blocks& X, std::size_t t, std::size_t s, const FixedPoint& delta) {
  FixedPoint xmax;
  for (const auto& b : X) {
    FixedPoint m = max_entry_magnitude(b);
    if (m > xmax) xmax = m;
  }
  const double log_norm = std::log2(1.0 + std::exp2(std::min(xmax.log2_abs(), 1000.0)));
  return delta.log2_abs() - log_norm - 2.0 * std::log2(static_cast<double>(t)) -
         2.0 * std::log2(static_cast<double>(std::max<std::size_t>(s, 1)));
}

void check_blocks(const Blocks& X, const Blocks& B) {
  if (X.size() != B.size() || X.empty()) throw DimensionError("convolution: block counts differ");
  const std::size_t s = X.front().rows();
  for (const auto& x : X)
    if (x.rows() != s || x.cols() != s) throw DimensionError("convolution: kernel blocks must be s x s");
  const std::size_t k = B.front().cols();
  for (const auto& b : B)
    if (b.rows() != s || b.cols() != k) throw DimensionError("convolution: data blocks must be s x k");
}

Blocks zero_padded(const Blocks& X, std::size_t t) {
  Blocks out = X;
  const DenseMatrix zero(X.front().rows(), X.front().cols(), 0);
  out.resize(t, zero);
  return out;
}

// Pointwise block products C_f = X_f B_f in the transform domain (exact).
ComplexBlocks pointwise_product(const ComplexBlocks& X, const ComplexBlocks& B) {
  ComplexBlocks C;
  C.count = X.count;
  C.rows = X.rows;
  C.cols = B.cols;
  C.frac_words = X.frac_words + B.frac_words;
  C.re.resize(C.count * C.lanes());
  C.im.resize(C.count * C.lanes());
  const std::size_t s = X.cols;
  for (std::size_t f = 0; f < C.count; ++f) {
    const std::size_t xo = f * X.lanes();
    const std::size_t bo = f * B.lanes();
    const std::size_t co = f * C.lanes();
    for (std::size_t i = 0; i < C.rows; ++i) {
      for (std::size_t l = 0; l < s; ++l) {
        const mpz_class& xr = X.re[xo + i * s + l];
        const mpz_class& xi = X.im[xo + i * s + l];
        for (std::size_t j = 0; j < C.cols; ++j) {
          const mpz_class& br = B.re[bo + l * B.cols + j];
          const mpz_class& bi = B.im[bo + l * B.cols + j];
          mpz_class& cr = C.re[co + i * C.cols + j];
          mpz_class& ci = C.im[co + i * C.cols + j];
          mpz_addmul(cr.get_mpz_t(), xr.get_mpz_t(), br.get_mpz_t());
          mpz_submul(cr.get_mpz_t(), xi.get_mpz_t(), bi.get_mpz_t());
          mpz_addmul(ci.get_mpz_t(), xr.get_mpz_t(), bi.get_mpz_t());
          mpz_addmul(ci.get_mpz_t(), xi.get_mpz_t(), br.get_mpz_t());
        }
      }
    }
  }
  return C;
}

}  // namespace

std::size_t next_pow2(std::size_t n) { return std::bit_ceil(std::max<std::size_t>(n, 1)); }

ComplexBlocks ComplexBlocks::from_real(const Blocks& blocks) {
  ComplexBlocks out;
  out.count = blocks.size();
  if (blocks.empty()) return out;
  out.rows = blocks.front().rows();
  out.cols = blocks.front().cols();
  for (const auto& b : blocks) out.frac_words = std::max(out.frac_words, b.frac_words());
  out.re.reserve(out.count * out.lanes());
  for (const auto& b : blocks) {
    if (b.rows() != out.rows || b.cols() != out.cols) throw DimensionError("blocks differ in shape");
    const DenseMatrix w = b.widened(out.frac_words);
    out.re.insert(out.re.end(), w.raw_data().begin(), w.raw_data().end());
  }
  out.im.assign(out.re.size(), mpz_class(0));
  return out;
}

Blocks ComplexBlocks::real_part() const {
  Blocks out;
  for (std::size_t b = 0; b < count; ++b) {
    std::vector<mpz_class> data(re.begin() + static_cast<std::ptrdiff_t>(b * lanes()),
                                re.begin() + static_cast<std::ptrdiff_t>((b + 1) * lanes()));
    out.push_back(DenseMatrix::from_mantissas(rows, cols, std::move(data), frac_words));
  }
  return out;
}

Blocks ComplexBlocks::imag_part() const {
  Blocks out;
  for (std::size_t b = 0; b < count; ++b) {
    std::vector<mpz_class> data(im.begin() + static_cast<std::ptrdiff_t>(b * lanes()),
                                im.begin() + static_cast<std::ptrdiff_t>((b + 1) * lanes()));
    out.push_back(DenseMatrix::from_mantissas(rows, cols, std::move(data), frac_words));
  }
  return out;
}

int fft_coeff_words(std::size_t t, const FixedPoint& delta) {
  require_positive(delta);
  const double lg = delta.log2_abs() - 3.0 * std::log2(static_cast<double>(t));
  return std::max(1, words_for_log2(lg));
}

std::vector<FPComplex> roots_of_unity(std::size_t t, int frac_words) {
  require_pow2(t);
  const unsigned k_max = log2_exact(t);
  const int G = frac_words + 2;
  // base[k] = exp(2 pi i / 2^k).
  std::vector<FPComplex> base(k_max + 1);
  base[0] = {FixedPoint::from_int(1), FixedPoint::from_int(0)};
  if (k_max >= 1) base[1] = {FixedPoint::from_int(-1), FixedPoint::from_int(0)};
  if (k_max >= 2) base[2] = {FixedPoint::from_int(0), FixedPoint::from_int(1)};
  for (unsigned k = 3; k <= k_max; ++k) {
    const FixedPoint half_sum = (FixedPoint::from_int(1) + base[k - 1].re).scaled_pow2(-1);
    const FixedPoint c = fp_sqrt(half_sum, G);
    const FixedPoint s = fp_div(base[k - 1].im, c.scaled_pow2(1), G);
    base[k] = {c, s};
  }
  std::vector<FPComplex> out(t);
  for (std::size_t j = 0; j < t; ++j) {
    FPComplex w{FixedPoint::from_int(1), FixedPoint::from_int(0)};
    for (unsigned b = 0; b < k_max; ++b) {
      if ((j >> b) & 1U) w = (w * base[k_max - b]).rounded(G + 1);
    }
    out[j] = w.rounded(frac_words);
  }
  return out;
}

FFTPlan FFTPlan::make(std::size_t t, std::size_t s, const FixedPoint& delta) {
  require_pow2(t);
  require_positive(delta);
  FFTPlan plan;
  plan.t = t;
  plan.s = s;
  plan.delta = delta;
  plan.coeff_words = fft_coeff_words(t, delta);
  plan.twiddles = roots_of_unity(t, plan.coeff_words);
  return plan;
}

ComplexBlocks fft_apply(const FFTPlan& plan, const ComplexBlocks& B, bool inverse) {
  if (B.count != plan.t) throw DimensionError("fft_apply: block count does not match plan length");
  const std::size_t t = plan.t;
  const std::size_t lanes = B.lanes();
  const int Lc = plan.coeff_words;
  const unsigned long shift = static_cast<unsigned long>(Lc) * kWordBits;
  const unsigned lg = log2_exact(t);

  ComplexBlocks out;
  out.count = t;
  out.rows = B.rows;
  out.cols = B.cols;
  out.frac_words = B.frac_words;
  out.re.resize(B.re.size());
  out.im.resize(B.im.size());
  for (std::size_t j = 0; j < t; ++j) {
    std::size_t r = 0;
    for (unsigned b = 0; b < lg; ++b) r |= ((j >> b) & 1U) << (lg - 1 - b);
    for (std::size_t l = 0; l < lanes; ++l) {
      out.re[r * lanes + l] = B.re[j * lanes + l];
      out.im[r * lanes + l] = B.im[j * lanes + l];
    }
  }

  mpz_class ur, ui, vr, vi;
  for (std::size_t len = 2; len <= t; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = t / len;
    for (std::size_t start = 0; start < t; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const FPComplex& w = plan.twiddles[j * step];
        const mpz_class& wr = w.re.mantissa();
        const mpz_class wi = inverse ? mpz_class(-w.im.mantissa()) : w.im.mantissa();
        const bool unit = j == 0;
        for (std::size_t l = 0; l < lanes; ++l) {
          mpz_class& ar = out.re[(start + j) * lanes + l];
          mpz_class& ai = out.im[(start + j) * lanes + l];
          mpz_class& br = out.re[(start + j + half) * lanes + l];
          mpz_class& bi = out.im[(start + j + half) * lanes + l];
          if (unit) {
            mpz_mul_2exp(vr.get_mpz_t(), br.get_mpz_t(), shift);
            mpz_mul_2exp(vi.get_mpz_t(), bi.get_mpz_t(), shift);
          } else {
            vr = wr * br;
            mpz_submul(vr.get_mpz_t(), wi.get_mpz_t(), bi.get_mpz_t());
            vi = wr * bi;
            mpz_addmul(vi.get_mpz_t(), wi.get_mpz_t(), br.get_mpz_t());
          }
          mpz_mul_2exp(ur.get_mpz_t(), ar.get_mpz_t(), shift);
          mpz_mul_2exp(ui.get_mpz_t(), ai.get_mpz_t(), shift);
          ar = ur + vr;
          ai = ui + vi;
          br = ur - vr;
          bi = ui - vi;
        }
      }
    }
    out.frac_words += Lc;
  }
  if (inverse && lg > 0) {
    // Exact division by t = 2^lg: one more word, shifted up by 64 - lg bits.
    const int extra = static_cast<int>((lg + kWordBits - 1) / kWordBits);
    const unsigned long up = static_cast<unsigned long>(extra) * kWordBits - lg;
    for (auto& v : out.re) mpz_mul_2exp(v.get_mpz_t(), v.get_mpz_t(), up);
    for (auto& v : out.im) mpz_mul_2exp(v.get_mpz_t(), v.get_mpz_t(), up);
    out.frac_words += extra;
  }
  return out;
}

Blocks naive_circular_conv(const Blocks& X, const Blocks& B) {
  check_blocks(X, B);
  const std::size_t t = X.size();
  Blocks out;
  for (std::size_t i = 0; i < t; ++i) {
    DenseMatrix acc(B.front().rows(), B.front().cols(), 0);
    for (std::size_t j = 0; j < t; ++j) acc += mat_mul_exact(X[(i + t - j) % t], B[j]);
    out.push_back(std::move(acc));
  }
  return out;
}

Blocks naive_linear_conv(const Blocks& X, const Blocks& B) {
  check_blocks(X, B);
  const std::size_t t = X.size();
  Blocks out;
  for (std::size_t l = 0; l + 1 < 2 * t; ++l) {
    DenseMatrix acc(B.front().rows(), B.front().cols(), 0);
    for (std::size_t j = 0; j < t; ++j) {
      if (l < j || l - j >= t) continue;
      acc += mat_mul_exact(X[l - j], B[j]);
    }
    out.push_back(std::move(acc));
  }
  return out;
}

Blocks block_circular_conv(const Blocks& X, const Blocks& B, const FixedPoint& delta,
                           ConvKind kind) {
  check_blocks(X, B);
  require_pow2(X.size());
  require_positive(delta);
  if (kind == ConvKind::direct) return naive_circular_conv(X, B);
  const std::size_t t = X.size();
  const std::size_t s = X.front().rows();
  const double lg = conv_fft_log2_tol(X, t, s, delta);
  const FFTPlan plan = FFTPlan::make(t, s, FixedPoint::pow2(static_cast<long>(std::floor(lg))));
  const ComplexBlocks xh = fft_apply(plan, ComplexBlocks::from_real(X), false);
  const ComplexBlocks bh = fft_apply(plan, ComplexBlocks::from_real(B), false);
  return fft_apply(plan, pointwise_product(xh, bh), true).real_part();
}

Blocks linear_conv_via_circular(const Blocks& X, const Blocks& B, const FixedPoint& delta,
                                ConvKind kind) {
  check_blocks(X, B);
  require_positive(delta);
  const std::size_t t = X.size();
  if (kind == ConvKind::direct) return naive_linear_conv(X, B);
  const std::size_t T = next_pow2(2 * t);
  Blocks full = block_circular_conv(zero_padded(X, T), zero_padded(B, T), delta, kind);
  full.resize(2 * t - 1);
  return full;
}

BlockConvolver::BlockConvolver(Blocks kernel, const FixedPoint& delta, ConvKind kind)
    : kernel_(std::move(kernel)), kind_(kind) {
  if (kernel_.empty()) throw DimensionError("BlockConvolver: empty kernel");
  require_positive(delta);
  s_ = kernel_.front().rows();
  if (kind_ == ConvKind::fft) {
    const std::size_t T = next_pow2(2 * kernel_.size());
    const Blocks padded = zero_padded(kernel_, T);
    const double lg = conv_fft_log2_tol(padded, T, s_, delta);
    plan_ = FFTPlan::make(T, s_, FixedPoint::pow2(static_cast<long>(std::floor(lg))));
    kernel_hat_ = fft_apply(plan_, ComplexBlocks::from_real(padded), false);
  }
}

Blocks BlockConvolver::apply_prefix(const Blocks& B) const {
  if (B.size() != kernel_.size()) throw DimensionError("BlockConvolver: block count mismatch");
  const std::size_t m = B.size();
  if (kind_ == ConvKind::direct) {
    Blocks out;
    for (std::size_t i = 0; i < m; ++i) {
      DenseMatrix acc(B.front().rows(), B.front().cols(), 0);
      for (std::size_t j = 0; j <= i; ++j) acc += mat_mul_exact(kernel_[i - j], B[j]);
      out.push_back(std::move(acc));
    }
    return out;
  }
  const ComplexBlocks bh = fft_apply(plan_, ComplexBlocks::from_real(zero_padded(B, plan_.t)), false);
  Blocks full = fft_apply(plan_, pointwise_product(kernel_hat_, bh), true).real_part();
  full.resize(m);
  return full;
}

}  // namespace hpsolve
