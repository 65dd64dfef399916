#include "qgends/number.hpp"

#include "qgends/error.hpp"

#include <charconv>
#include <cmath>
#include <limits>

namespace qgends {

namespace {

constexpr double kUlp = std::numeric_limits<double>::epsilon();

double rounding(double v) { return std::abs(v) * kUlp; }

double to_double(const Rational& q) { return q.convert_to<double>(); }

}  // namespace

Number Number::exact(const Rational& q) {
  Number n;
  n.exact_ = true;
  n.q_ = q;
  n.v_ = to_double(q);
  return n;
}

Number Number::approx(double value, double error_bound) {
  Number n;
  n.exact_ = false;
  n.v_ = value;
  n.err_ = std::abs(error_bound);
  return n;
}

Number Number::parse(const std::string& text) {
  const auto slash = text.find('/');
  try {
    if (slash != std::string::npos) {
      Rational num(text.substr(0, slash));
      Rational den(text.substr(slash + 1));
      if (den == 0) fail(ErrorKind::SchemaError, "zero denominator in '" + text + "'");
      return exact(num / den);
    }
    if (text.find_first_of(".eE") == std::string::npos) {
      return exact(Rational(text));
    }
  } catch (const std::runtime_error&) {
    // boost throws runtime_error on malformed integers
    if (slash != std::string::npos || text.find_first_of(".eE") == std::string::npos) {
      fail(ErrorKind::SchemaError, "malformed rational '" + text + "'");
    }
  }
  double v = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    fail(ErrorKind::SchemaError, "malformed number '" + text + "'");
  }
  return approx(v, rounding(v));
}

const Rational& Number::rational() const {
  if (!exact_) fail(ErrorKind::InvariantError, "number is not exact");
  return q_;
}

bool Number::is_integer() const {
  if (exact_) return boost::multiprecision::denominator(q_) == 1;
  return err_ == 0.0 && std::floor(v_) == v_;
}

bool Number::certainly_positive() const {
  if (exact_) return q_ > 0;
  return v_ - err_ > 0.0;
}

bool Number::certainly_negative() const {
  if (exact_) return q_ < 0;
  return v_ + err_ < 0.0;
}

bool Number::possibly_zero() const {
  return !certainly_positive() && !certainly_negative();
}

Number Number::operator-() const {
  if (exact_) return exact(-q_);
  return approx(-v_, err_);
}

Number operator+(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) return Number::exact(a.q_ + b.q_);
  const double v = a.v_ + b.v_;
  return Number::approx(v, a.error() + b.error() + rounding(v));
}

Number operator-(const Number& a, const Number& b) { return a + (-b); }

Number operator*(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) return Number::exact(a.q_ * b.q_);
  const double v = a.v_ * b.v_;
  const double e = std::abs(a.v_) * b.error() + std::abs(b.v_) * a.error() +
                   a.error() * b.error() + rounding(v);
  return Number::approx(v, e);
}

Number operator/(const Number& a, const Number& b) {
  if (b.exact_ && b.q_ == 0) fail(ErrorKind::InvariantError, "division by zero");
  if (a.exact_ && b.exact_) return Number::exact(a.q_ / b.q_);
  const double v = a.v_ / b.v_;
  const double lo = std::abs(b.v_) - b.error();
  if (lo <= 0.0) return Number::approx(v, std::numeric_limits<double>::infinity());
  const double e = (a.error() + std::abs(v) * b.error()) / lo + rounding(v);
  return Number::approx(v, e);
}

Number Number::pow(std::int64_t exponent) const {
  if (exact_) {
    if (exponent < 0 && q_ == 0) fail(ErrorKind::InvariantError, "zero to a negative power");
    Rational base = exponent < 0 ? Rational(1) / q_ : q_;
    std::uint64_t e = exponent < 0 ? static_cast<std::uint64_t>(-exponent)
                                   : static_cast<std::uint64_t>(exponent);
    Rational acc = 1;
    while (e > 0) {
      if (e & 1u) acc *= base;
      base *= base;
      e >>= 1u;
    }
    return exact(acc);
  }
  const double v = std::pow(v_, static_cast<double>(exponent));
  // d(x^n) = n x^(n-1) dx, first order in the error bound
  const double rel = v_ != 0.0 ? err_ / std::abs(v_) : 0.0;
  const double e = std::abs(v) * (std::expm1(std::abs(static_cast<double>(exponent)) *
                                             std::log1p(rel))) +
                   rounding(v) * (1.0 + std::log2(1.0 + std::abs(static_cast<double>(exponent))));
  return approx(v, e);
}

Number Number::pow(const Number& exponent) const {
  if (exponent.is_exact() && exponent.is_integer()) {
    const Rational& q = exponent.rational();
    return pow(static_cast<std::int64_t>(boost::multiprecision::numerator(q)));
  }
  const double x = v_;
  const double p = exponent.value();
  const double v = std::pow(x, p);
  const double dx = x != 0.0 ? std::abs(p * v / x) * error() : 0.0;
  const double dp = x > 0.0 ? std::abs(v * std::log(x)) * exponent.error() : 0.0;
  return approx(v, dx + dp + 4.0 * rounding(v));
}

std::partial_ordering operator<=>(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) {
    if (a.q_ < b.q_) return std::partial_ordering::less;
    if (a.q_ > b.q_) return std::partial_ordering::greater;
    return std::partial_ordering::equivalent;
  }
  return a.v_ <=> b.v_;
}

bool operator==(const Number& a, const Number& b) {
  return (a <=> b) == std::partial_ordering::equivalent;
}

std::string Number::to_string() const {
  if (exact_) return q_.str();
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v_);
  return std::string(buf, ptr);
}

}  // namespace qgends
