#pragma once

// Exact arithmetic used on every exact measure path.

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace mixlab {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Formats as "p/q" (or "p" when q = 1).
std::string to_string(const Rational& r);
/// Accepts "p/q", "p", or a decimal such as "0.25" (converted exactly).
Rational parse_rational(std::string_view text);
double to_double(const Rational& r);
/// Exact conversion of a finite double.
Rational from_double(double x);

/// A dyadic rational numerator / 2^exponent, kept normalized: the numerator
/// is odd unless the value is zero, in which case the exponent is zero.
class Dyadic {
 public:
  Dyadic() = default;
  Dyadic(BigInt numerator, std::uint32_t exponent);
  static Dyadic pow2_inv(std::uint32_t exponent) { return Dyadic(1, exponent); }
  static Dyadic zero() { return {}; }
  static Dyadic one() { return Dyadic(1, 0); }

  const BigInt& numerator() const { return num_; }
  std::uint32_t exponent() const { return exp_; }
  bool is_zero() const { return num_ == 0; }

  Rational to_rational() const;
  double to_double() const;
  std::string to_string() const;

  friend Dyadic operator+(const Dyadic& a, const Dyadic& b);
  friend Dyadic operator-(const Dyadic& a, const Dyadic& b);
  friend Dyadic operator*(const Dyadic& a, const Dyadic& b);
  Dyadic abs() const { return Dyadic(num_ < 0 ? BigInt(-num_) : num_, exp_); }

  friend bool operator==(const Dyadic&, const Dyadic&) = default;
  friend std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b);

 private:
  void normalize();
  BigInt num_ = 0;
  std::uint32_t exp_ = 0;
};

}  // namespace mixlab
