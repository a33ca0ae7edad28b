#include "hpsolve/fixed_point.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hpsolve {

namespace {

unsigned long word_shift(int words) {
  return static_cast<unsigned long>(words) * kWordBits;
}

mpz_class shifted_left(const mpz_class& v, int words) {
  if (words <= 0) return v;
  mpz_class out;
  mpz_mul_2exp(out.get_mpz_t(), v.get_mpz_t(), word_shift(words));
  return out;
}

mpz_class pow10(unsigned long e) {
  mpz_class out;
  mpz_ui_pow_ui(out.get_mpz_t(), 10, e);
  return out;
}

}  // namespace

void round_shift_into(mpz_class& out, const mpz_class& value, unsigned long bits) {
  if (bits == 0) {
    out = value;
    return;
  }
  // Inspect the discarded bits before `out` (which may alias `value`) changes.
  // mpz bit queries use two's complement, matching floor division.
  const bool above_half = mpz_tstbit(value.get_mpz_t(), bits - 1) != 0;
  const bool tie = above_half && mpz_scan1(value.get_mpz_t(), 0) == bits - 1;
  const bool negative = sgn(value) < 0;
  mpz_fdiv_q_2exp(out.get_mpz_t(), value.get_mpz_t(), bits);
  if (above_half && (!tie || negative)) out += 1;
}

mpz_class round_shift(const mpz_class& value, unsigned long bits) {
  mpz_class out;
  round_shift_into(out, value, bits);
  return out;
}

mpz_class round_div(const mpz_class& num, const mpz_class& den) {
  if (sgn(den) == 0) throw std::domain_error("division by zero");
  mpz_class q, r;
  mpz_tdiv_qr(q.get_mpz_t(), r.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  if (sgn(r) == 0) return q;
  mpz_class twice = r;
  mpz_mul_2exp(twice.get_mpz_t(), twice.get_mpz_t(), 1);
  if (mpz_cmpabs(twice.get_mpz_t(), den.get_mpz_t()) > 0) {
    // Truncation went toward zero; step away from zero.
    if ((sgn(num) < 0) != (sgn(den) < 0)) {
      q -= 1;
    } else {
      q += 1;
    }
  }
  return q;
}

int words_for_log2(double log2_tol) {
  if (!(log2_tol < 0)) return 0;
  return static_cast<int>(std::ceil(-log2_tol / kWordBits));
}

int round_trip_digits(int frac_words) {
  // Half an ulp of the decimal output must be below half an ulp in binary.
  return static_cast<int>(std::ceil(frac_words * kWordBits * std::log10(2.0))) + 2;
}

FixedPoint FixedPoint::from_int(long value) { return FixedPoint(mpz_class(value), 0); }

FixedPoint FixedPoint::from_mpz(mpz_class integer) { return FixedPoint(std::move(integer), 0); }

FixedPoint FixedPoint::from_mantissa(mpz_class mantissa, int frac_words) {
  if (frac_words < 0) throw std::invalid_argument("negative fractional word count");
  return FixedPoint(std::move(mantissa), frac_words);
}

FixedPoint FixedPoint::from_double(double value, int frac_words) {
  if (!std::isfinite(value)) throw std::invalid_argument("non-finite double");
  if (frac_words < 0) throw std::invalid_argument("negative fractional word count");
  if (value == 0.0) return FixedPoint(mpz_class(0), frac_words);
  int exp = 0;
  const double frac = std::frexp(value, &exp);  // value = frac * 2^exp
  const auto top = static_cast<long long>(std::ldexp(frac, 53));
  mpz_class m;
  mpz_set_si(m.get_mpz_t(), static_cast<long>(top));
  // value = m * 2^(exp - 53); express with enough words to be exact.
  const long low = exp - 53;
  const int exact_words = low >= 0 ? 0 : static_cast<int>((-low + kWordBits - 1) / kWordBits);
  const long shift = low + static_cast<long>(exact_words) * kWordBits;
  mpz_mul_2exp(m.get_mpz_t(), m.get_mpz_t(), static_cast<unsigned long>(shift));
  return FixedPoint(std::move(m), exact_words).rounded(frac_words);
}

FixedPoint FixedPoint::pow2(long exponent) {
  mpz_class m(1);
  if (exponent >= 0) {
    mpz_mul_2exp(m.get_mpz_t(), m.get_mpz_t(), static_cast<unsigned long>(exponent));
    return FixedPoint(std::move(m), 0);
  }
  const int words = static_cast<int>((-exponent + kWordBits - 1) / kWordBits);
  mpz_mul_2exp(m.get_mpz_t(), m.get_mpz_t(),
               static_cast<unsigned long>(static_cast<long>(words) * kWordBits + exponent));
  return FixedPoint(std::move(m), words);
}

FixedPoint FixedPoint::parse(std::string_view text, int frac_words) {
  if (frac_words < 0) throw std::invalid_argument("negative fractional word count");
  std::size_t i = 0;
  auto fail = [&]() -> FixedPoint {
    throw std::invalid_argument("malformed decimal literal: '" + std::string(text) + "'");
  };
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  bool negative = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) negative = text[i++] == '-';
  std::string digits;
  long scale = 0;  // value = digits * 10^(-scale)
  bool any = false;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    digits.push_back(text[i++]);
    any = true;
  }
  if (i < text.size() && text[i] == '.') {
    ++i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      digits.push_back(text[i++]);
      ++scale;
      any = true;
    }
  }
  if (!any) return fail();
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    bool exp_negative = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) exp_negative = text[i++] == '-';
    long e = 0;
    bool exp_any = false;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      e = e * 10 + (text[i++] - '0');
      exp_any = true;
      if (e > 100000000) return fail();
    }
    if (!exp_any) return fail();
    scale += exp_negative ? e : -e;
  }
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  if (i != text.size()) return fail();

  mpz_class num(digits, 10);
  if (negative) num = -num;
  mpz_class den(1);
  if (scale > 0) {
    den = pow10(static_cast<unsigned long>(scale));
  } else if (scale < 0) {
    num *= pow10(static_cast<unsigned long>(-scale));
  }
  mpz_mul_2exp(num.get_mpz_t(), num.get_mpz_t(), word_shift(frac_words));
  return FixedPoint(round_div(num, den), frac_words);
}

double FixedPoint::to_double() const {
  if (is_zero()) return 0.0;
  long exp = 0;
  const double d = mpz_get_d_2exp(&exp, mant_.get_mpz_t());
  return std::ldexp(d, static_cast<int>(exp - static_cast<long>(word_shift(frac_words_))));
}

double FixedPoint::log2_abs() const {
  if (is_zero()) return -std::numeric_limits<double>::infinity();
  long exp = 0;
  const double d = mpz_get_d_2exp(&exp, mant_.get_mpz_t());
  return std::log2(std::fabs(d)) + static_cast<double>(exp) -
         static_cast<double>(word_shift(frac_words_));
}

std::string FixedPoint::to_string(int digits) const {
  digits = std::max(digits, 0);
  mpz_class scaled = mant_ * pow10(static_cast<unsigned long>(digits));
  scaled = round_shift(scaled, word_shift(frac_words_));
  const bool negative = sgn(scaled) < 0;
  std::string body = mpz_class(::abs(scaled)).get_str(10);
  if (digits > 0) {
    if (body.size() <= static_cast<std::size_t>(digits)) {
      body.insert(0, static_cast<std::size_t>(digits) + 1 - body.size(), '0');
    }
    body.insert(body.size() - static_cast<std::size_t>(digits), ".");
  }
  return negative ? "-" + body : body;
}

FixedPoint FixedPoint::rounded(int frac_words) const {
  if (frac_words < 0) throw std::invalid_argument("negative fractional word count");
  if (frac_words >= frac_words_) return widened(frac_words);
  return FixedPoint(round_shift(mant_, word_shift(frac_words_ - frac_words)), frac_words);
}

FixedPoint FixedPoint::widened(int frac_words) const {
  if (frac_words <= frac_words_) return *this;
  return FixedPoint(shifted_left(mant_, frac_words - frac_words_), frac_words);
}

FixedPoint FixedPoint::abs() const { return FixedPoint(::abs(mant_), frac_words_); }

FixedPoint FixedPoint::scaled_pow2(long exponent) const {
  if (exponent >= 0) {
    mpz_class m;
    mpz_mul_2exp(m.get_mpz_t(), mant_.get_mpz_t(), static_cast<unsigned long>(exponent));
    return FixedPoint(std::move(m), frac_words_);
  }
  // Add words until the division by 2^-exponent is exact.
  const long need = -exponent;
  const int extra = static_cast<int>((need + kWordBits - 1) / kWordBits);
  mpz_class m;
  mpz_mul_2exp(m.get_mpz_t(), mant_.get_mpz_t(),
               static_cast<unsigned long>(static_cast<long>(extra) * kWordBits - need));
  return FixedPoint(std::move(m), frac_words_ + extra);
}

FixedPoint FixedPoint::operator-() const { return FixedPoint(-mant_, frac_words_); }

FixedPoint& FixedPoint::operator+=(const FixedPoint& other) {
  if (other.frac_words_ == frac_words_) {
    mant_ += other.mant_;
  } else if (other.frac_words_ < frac_words_) {
    mpz_class tmp;
    mpz_mul_2exp(tmp.get_mpz_t(), other.mant_.get_mpz_t(),
                 word_shift(frac_words_ - other.frac_words_));
    mant_ += tmp;
  } else {
    mpz_mul_2exp(mant_.get_mpz_t(), mant_.get_mpz_t(),
                 word_shift(other.frac_words_ - frac_words_));
    mant_ += other.mant_;
    frac_words_ = other.frac_words_;
  }
  return *this;
}

FixedPoint& FixedPoint::operator-=(const FixedPoint& other) {
  if (other.frac_words_ == frac_words_) {
    mant_ -= other.mant_;
  } else if (other.frac_words_ < frac_words_) {
    mpz_class tmp;
    mpz_mul_2exp(tmp.get_mpz_t(), other.mant_.get_mpz_t(),
                 word_shift(frac_words_ - other.frac_words_));
    mant_ -= tmp;
  } else {
    mpz_mul_2exp(mant_.get_mpz_t(), mant_.get_mpz_t(),
                 word_shift(other.frac_words_ - frac_words_));
    mant_ -= other.mant_;
    frac_words_ = other.frac_words_;
  }
  return *this;
}

FixedPoint& FixedPoint::operator*=(const FixedPoint& other) {
  mant_ *= other.mant_;
  frac_words_ += other.frac_words_;
  return *this;
}

FixedPoint operator*(const FixedPoint& a, const FixedPoint& b) {
  mpz_class m;
  mpz_mul(m.get_mpz_t(), a.mant_.get_mpz_t(), b.mant_.get_mpz_t());
  return FixedPoint(std::move(m), a.frac_words_ + b.frac_words_);
}

std::strong_ordering operator<=>(const FixedPoint& a, const FixedPoint& b) {
  int cmp;
  if (a.frac_words_ == b.frac_words_) {
    cmp = mpz_cmp(a.mant_.get_mpz_t(), b.mant_.get_mpz_t());
  } else {
    const int sa = sgn(a.mant_);
    const int sb = sgn(b.mant_);
    if (sa != sb) {
      cmp = sa < sb ? -1 : 1;
    } else if (a.frac_words_ < b.frac_words_) {
      cmp = mpz_cmp(shifted_left(a.mant_, b.frac_words_ - a.frac_words_).get_mpz_t(),
                    b.mant_.get_mpz_t());
    } else {
      cmp = mpz_cmp(a.mant_.get_mpz_t(),
                    shifted_left(b.mant_, a.frac_words_ - b.frac_words_).get_mpz_t());
    }
  }
  if (cmp < 0) return std::strong_ordering::less;
  if (cmp > 0) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

FixedPoint fp_add(const FixedPoint& a, const FixedPoint& b) { return a + b; }

FixedPoint fp_mul(const FixedPoint& a, const FixedPoint& b) { return a * b; }

FixedPoint fp_round(const FixedPoint& a, int frac_words) { return a.rounded(frac_words); }

std::strong_ordering fp_compare(const FixedPoint& a, const FixedPoint& b) { return a <=> b; }

FixedPoint fp_div(const FixedPoint& a, const FixedPoint& b, int frac_words) {
  if (b.is_zero()) throw std::domain_error("fixed-point division by zero");
  if (frac_words < 0) throw std::invalid_argument("negative fractional word count");
  // a/b = (ma/mb) * 2^(-w(La - Lb)); want mantissa at 2^(-w L).
  const long e = static_cast<long>(frac_words) - a.frac_words() + b.frac_words();
  mpz_class num = a.mantissa();
  mpz_class den = b.mantissa();
  if (e >= 0) {
    mpz_mul_2exp(num.get_mpz_t(), num.get_mpz_t(), static_cast<unsigned long>(e) * kWordBits);
  } else {
    mpz_mul_2exp(den.get_mpz_t(), den.get_mpz_t(), static_cast<unsigned long>(-e) * kWordBits);
  }
  return FixedPoint::from_mantissa(round_div(num, den), frac_words);
}

FixedPoint fp_sqrt(const FixedPoint& a, int frac_words) {
  if (a.sign() < 0) throw std::domain_error("square root of a negative fixed-point value");
  if (frac_words < 0) throw std::invalid_argument("negative fractional word count");
  // Work with L' words where 2L' >= La so the radicand shift is non-negative.
  const int work = std::max(frac_words, (a.frac_words() + 1) / 2);
  mpz_class radicand = a.mantissa();
  mpz_mul_2exp(radicand.get_mpz_t(), radicand.get_mpz_t(),
               static_cast<unsigned long>(2 * work - a.frac_words()) * kWordBits);
  mpz_class root;
  mpz_sqrt(root.get_mpz_t(), radicand.get_mpz_t());
  // Round to nearest: (root + 1/2)^2 = root^2 + root + 1/4.
  mpz_class excess = radicand - root * root;
  if (excess > root) root += 1;
  return FixedPoint::from_mantissa(std::move(root), work).rounded(frac_words);
}

}  // namespace hpsolve
