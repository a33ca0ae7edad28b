#pragma once

#include <cstddef>
#include <vector>

#include "hpsolve/matrix.hpp"

namespace hpsolve {

/// How block convolutions are evaluated. `fft` is the certified transform
/// path; `direct` is the exact schoolbook sum, used as an oracle and for
/// exactness checks.
enum class ConvKind { fft, direct };

using Blocks = std::vector<DenseMatrix>;

/// Sequence of t complex blocks of equal shape sharing one word count.
struct ComplexBlocks {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  int frac_words = 0;
  std::vector<mpz_class> re;
  std::vector<mpz_class> im;

  std::size_t lanes() const { return rows * cols; }
  static ComplexBlocks from_real(const Blocks& blocks);
  Blocks real_part() const;
  Blocks imag_part() const;
};

/// Transform length, block size, tolerance and the twiddle table
/// omega^j = exp(2 pi i j / t), each within 2^(-64 coeff_words) of exact.
struct FFTPlan {
  std::size_t t = 0;
  std::size_t s = 0;
  FixedPoint delta;
  int coeff_words = 0;
  std::vector<FPComplex> twiddles;

  /// Throws std::invalid_argument if t is not a power of two or delta <= 0.
  static FFTPlan make(std::size_t t, std::size_t s, const FixedPoint& delta);
};

/// Twiddle word count for a length-t transform with operator tolerance
/// delta: enough words that each twiddle is within delta / t^3.
int fft_coeff_words(std::size_t t, const FixedPoint& delta);

/// Roots of unity exp(2 pi i j / t), j < t, to `frac_words` words, built by
/// argument halving from the exact anchors 1, -1 and i.
std::vector<FPComplex> roots_of_unity(std::size_t t, int frac_words);

/// Block DFT: out_i = sum_j omega^(i j) B_j (inverse: conjugate roots and an
/// exact 1/t). Data arithmetic is exact, only twiddles are rounded, so the
/// map is a fixed linear operator.
ComplexBlocks fft_apply(const FFTPlan& plan, const ComplexBlocks& B, bool inverse);

/// Circular block convolution out_i = sum_j X_{(i-j) mod t} B_j.
/// X holds t blocks of s x s, B holds t blocks of s x k.
Blocks block_circular_conv(const Blocks& X, const Blocks& B, const FixedPoint& delta,
                           ConvKind kind = ConvKind::fft);

/// Linear convolution out_l = sum_{j+k=l} X_j B_k (2t-1 blocks), computed
/// through a zero-padded circular convolution.
Blocks linear_conv_via_circular(const Blocks& X, const Blocks& B, const FixedPoint& delta,
                                ConvKind kind = ConvKind::fft);

/// Exact schoolbook versions.
Blocks naive_circular_conv(const Blocks& X, const Blocks& B);
Blocks naive_linear_conv(const Blocks& X, const Blocks& B);

/// Convolution with a fixed kernel whose transform is computed once.
/// apply_prefix(B) returns the first B.size() blocks of the linear
/// convolution of the kernel with B.
class BlockConvolver {
 public:
  BlockConvolver() = default;
  /// `delta` is the operator tolerance of one application.
  BlockConvolver(Blocks kernel, const FixedPoint& delta, ConvKind kind);

  std::size_t length() const { return kernel_.size(); }
  std::size_t block_size() const { return s_; }
  Blocks apply_prefix(const Blocks& B) const;

 private:
  Blocks kernel_;
  std::size_t s_ = 0;
  ConvKind kind_ = ConvKind::fft;
  FFTPlan plan_;
  ComplexBlocks kernel_hat_;
};

/// Smallest power of two >= n (n >= 1).
std::size_t next_pow2(std::size_t n);

}  // namespace hpsolve
