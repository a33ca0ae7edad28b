#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace hpsolve {

/// Bits per fractional word. Every fixed-point quantity stores its
/// fractional part as a whole number of these words.
inline constexpr int kWordBits = 64;

/// Arbitrary-precision binary fixed-point number.
///
/// The represented value is exactly `mantissa * 2^(-kWordBits * frac_words)`.
/// Addition and multiplication are exact; the only lossy operation is an
/// explicit call to rounded() (or the division/square-root helpers, which
/// take a target word count). Equality and ordering are on values, so two
/// representations of 0.5 with different word counts compare equal.
class FixedPoint {
 public:
  FixedPoint() = default;

  static FixedPoint from_int(long value);
  static FixedPoint from_mpz(mpz_class integer);
  static FixedPoint from_mantissa(mpz_class mantissa, int frac_words);
  /// Nearest value with `frac_words` words; doubles are dyadic, so this is
  /// exact whenever the word count is large enough.
  static FixedPoint from_double(double value, int frac_words);
  /// Exactly 2^exponent, stored with the fewest words that hold it.
  static FixedPoint pow2(long exponent);
  /// Parses a decimal literal ("-1.25e-3", "7", ".5") and rounds it to
  /// `frac_words` words. Throws std::invalid_argument on malformed text.
  static FixedPoint parse(std::string_view text, int frac_words);

  const mpz_class& mantissa() const { return mant_; }
  int frac_words() const { return frac_words_; }
  int sign() const { return sgn(mant_); }
  bool is_zero() const { return sgn(mant_) == 0; }

  double to_double() const;
  /// log2 |value|; -infinity for zero. Accurate to double precision.
  double log2_abs() const;
  /// Decimal rendering with `digits` digits after the point (rounded).
  std::string to_string(int digits) const;

  /// Nearest value with exactly `frac_words` words; ties round toward zero.
  FixedPoint rounded(int frac_words) const;
  /// Same value re-expressed with at least `frac_words` words (exact).
  FixedPoint widened(int frac_words) const;
  /// Rounds only when the value carries more than `frac_words` words.
  FixedPoint at_most(int frac_words) const {
    return frac_words_ > frac_words ? rounded(frac_words) : *this;
  }
  FixedPoint abs() const;
  /// Exact multiplication by 2^exponent.
  FixedPoint scaled_pow2(long exponent) const;

  FixedPoint operator-() const;
  FixedPoint& operator+=(const FixedPoint& other);
  FixedPoint& operator-=(const FixedPoint& other);
  FixedPoint& operator*=(const FixedPoint& other);

  friend FixedPoint operator+(FixedPoint a, const FixedPoint& b) { return a += b; }
  friend FixedPoint operator-(FixedPoint a, const FixedPoint& b) { return a -= b; }
  friend FixedPoint operator*(const FixedPoint& a, const FixedPoint& b);

  friend std::strong_ordering operator<=>(const FixedPoint& a, const FixedPoint& b);
  friend bool operator==(const FixedPoint& a, const FixedPoint& b) {
    return (a <=> b) == std::strong_ordering::equal;
  }

 private:
  FixedPoint(mpz_class mantissa, int frac_words)
      : mant_(std::move(mantissa)), frac_words_(frac_words) {}

  mpz_class mant_;
  int frac_words_ = 0;
};

/// Exact sum; result carries max(a.frac_words, b.frac_words) words.
FixedPoint fp_add(const FixedPoint& a, const FixedPoint& b);
/// Exact product; result carries a.frac_words + b.frac_words words.
FixedPoint fp_mul(const FixedPoint& a, const FixedPoint& b);
FixedPoint fp_round(const FixedPoint& a, int frac_words);
std::strong_ordering fp_compare(const FixedPoint& a, const FixedPoint& b);

/// a / b rounded to `frac_words` words. Throws std::domain_error if b == 0.
FixedPoint fp_div(const FixedPoint& a, const FixedPoint& b, int frac_words);
/// sqrt(a) rounded to `frac_words` words. Throws std::domain_error if a < 0.
FixedPoint fp_sqrt(const FixedPoint& a, int frac_words);

/// Number of words needed so that one unit in the last word is at most
/// 2^log2_tol. Returns 0 for tolerances >= 1.
int words_for_log2(double log2_tol);

/// Decimal digits after the point that make to_string/parse an exact
/// round trip for values carrying `frac_words` words.
int round_trip_digits(int frac_words);

/// Rounds num/den to the nearest integer, ties toward zero.
mpz_class round_div(const mpz_class& num, const mpz_class& den);
/// Rounds value / 2^bits to the nearest integer, ties toward zero.
mpz_class round_shift(const mpz_class& value, unsigned long bits);
/// In-place form of round_shift; `out` may alias `value`.
void round_shift_into(mpz_class& out, const mpz_class& value, unsigned long bits);

/// Complex number with fixed-point components.
struct FPComplex {
  FixedPoint re;
  FixedPoint im;

  FPComplex conj() const { return {re, -im}; }
  FPComplex rounded(int frac_words) const {
    return {re.rounded(frac_words), im.rounded(frac_words)};
  }
  friend FPComplex operator+(const FPComplex& a, const FPComplex& b) {
    return {a.re + b.re, a.im + b.im};
  }
  friend FPComplex operator-(const FPComplex& a, const FPComplex& b) {
    return {a.re - b.re, a.im - b.im};
  }
  friend FPComplex operator*(const FPComplex& a, const FPComplex& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend bool operator==(const FPComplex& a, const FPComplex& b) = default;
};

}  // namespace hpsolve
