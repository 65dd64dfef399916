#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <cstdint>
#include <string>

namespace qgends {

using Rational = boost::multiprecision::cpp_rational;

/// A positive-or-signed real that is either an exact rational or a double
/// carrying an absolute error bound. Exactness survives +, -, *, / and
/// integer powers; anything else degrades to the interval form.
class Number {
 public:
  Number() = default;
  Number(int value) : exact_(true), q_(value), v_(value) {}
  Number(std::int64_t value)
      : exact_(true), q_(value), v_(static_cast<double>(value)) {}

  static Number exact(const Rational& q);
  static Number approx(double value, double error_bound);
  /// Parses "p/q", "p" or a decimal string. Decimals are kept inexact.
  static Number parse(const std::string& text);

  bool is_exact() const noexcept { return exact_; }
  const Rational& rational() const;
  double value() const noexcept { return v_; }
  double error() const noexcept { return exact_ ? 0.0 : err_; }

  bool is_integer() const;
  /// Certainly > 0 (exact, or the whole error interval is positive).
  bool certainly_positive() const;
  bool certainly_negative() const;
  /// Exact zero, or an interval straddling zero.
  bool possibly_zero() const;

  Number operator-() const;
  friend Number operator+(const Number& a, const Number& b);
  friend Number operator-(const Number& a, const Number& b);
  friend Number operator*(const Number& a, const Number& b);
  friend Number operator/(const Number& a, const Number& b);
  Number& operator+=(const Number& o) { return *this = *this + o; }
  Number& operator*=(const Number& o) { return *this = *this * o; }

  Number pow(std::int64_t exponent) const;
  /// base^exponent for an arbitrary (possibly non-integer) exponent.
  Number pow(const Number& exponent) const;

  /// Exact comparison when both are exact; otherwise compares midpoints.
  friend std::partial_ordering operator<=>(const Number& a, const Number& b);
  friend bool operator==(const Number& a, const Number& b);

  /// "p/q" (or "p") when exact, shortest round-trip decimal otherwise.
  std::string to_string() const;

 private:
  bool exact_ = true;
  Rational q_ = 0;
  double v_ = 0.0;
  double err_ = 0.0;
};

}  // namespace qgends
