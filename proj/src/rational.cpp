#include "mixlab/rational.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mixlab {

std::string to_string(const Rational& r) {
  const BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

Rational parse_rational(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty rational");
  const std::string s(text);
  try {
    if (auto slash = s.find('/'); slash != std::string::npos) {
      BigInt num(s.substr(0, slash));
      BigInt den(s.substr(slash + 1));
      if (den == 0) throw std::invalid_argument("zero denominator in '" + s + "'");
      return Rational(num, den);
    }
    if (auto dot = s.find('.'); dot != std::string::npos) {
      const bool neg = s.front() == '-';
      const std::string int_part = s.substr(neg ? 1 : 0, dot - (neg ? 1 : 0));
      const std::string frac_part = s.substr(dot + 1);
      BigInt scale = 1;
      for (std::size_t i = 0; i < frac_part.size(); ++i) scale *= 10;
      BigInt whole(int_part.empty() ? "0" : int_part);
      BigInt frac(frac_part.empty() ? "0" : frac_part);
      Rational value = Rational(whole) + Rational(frac, scale);
      return neg ? Rational(-value) : value;
    }
    return Rational(BigInt(s));
  } catch (const std::runtime_error&) {
    throw std::invalid_argument("malformed rational '" + s + "'");
  }
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

Rational from_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite value has no rational form");
  int exp = 0;
  const double mant = std::frexp(x, &exp);
  // mant * 2^53 is an exact integer.
  const auto scaled = static_cast<long long>(std::ldexp(mant, 53));
  Rational r(scaled);
  const int shift = exp - 53;
  if (shift >= 0)
    r *= Rational(BigInt(1) << shift);
  else
    r /= Rational(BigInt(1) << -shift);
  return r;
}

Dyadic::Dyadic(BigInt numerator, std::uint32_t exponent) : num_(std::move(numerator)), exp_(exponent) {
  normalize();
}

void Dyadic::normalize() {
  if (num_ == 0) {
    exp_ = 0;
    return;
  }
  const BigInt magnitude = num_ < 0 ? BigInt(-num_) : num_;
  const auto shift = std::min<std::uint32_t>(
      exp_, static_cast<std::uint32_t>(boost::multiprecision::lsb(magnitude)));
  if (shift > 0) {
    num_ /= BigInt(1) << shift;
    exp_ -= shift;
  }
}

namespace {

BigInt scale_up(const BigInt& n, std::uint32_t by) { return n * (BigInt(1) << by); }

}  // namespace

Dyadic operator+(const Dyadic& a, const Dyadic& b) {
  const std::uint32_t e = std::max(a.exp_, b.exp_);
  return Dyadic(scale_up(a.num_, e - a.exp_) + scale_up(b.num_, e - b.exp_), e);
}

Dyadic operator-(const Dyadic& a, const Dyadic& b) {
  const std::uint32_t e = std::max(a.exp_, b.exp_);
  return Dyadic(scale_up(a.num_, e - a.exp_) - scale_up(b.num_, e - b.exp_), e);
}

Dyadic operator*(const Dyadic& a, const Dyadic& b) { return Dyadic(a.num_ * b.num_, a.exp_ + b.exp_); }

std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b) {
  const std::uint32_t e = std::max(a.exp_, b.exp_);
  const BigInt lhs = scale_up(a.num_, e - a.exp_);
  const BigInt rhs = scale_up(b.num_, e - b.exp_);
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

Rational Dyadic::to_rational() const { return Rational(num_, BigInt(1) << exp_); }

double Dyadic::to_double() const { return mixlab::to_double(to_rational()); }

std::string Dyadic::to_string() const { return mixlab::to_string(to_rational()); }

}  // namespace mixlab
