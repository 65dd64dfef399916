#pragma once

#include "qgends/number.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace qgends {

/// User-facing sequence grammar. Every form has a closed-form series
/// classification.
struct SequenceSpec {
  enum class Kind { Constant, Geometric, Power, Explicit };

  Kind kind = Kind::Constant;
  Number a = 1;  ///< constant value, geometric/power coefficient
  Number r = 1;  ///< geometric ratio
  Number p = 0;  ///< power exponent: a * (n + 1)^(-p)
  std::vector<Number> prefix;                  ///< explicit leading terms
  std::shared_ptr<const SequenceSpec> tail;    ///< explicit tail
  bool exact = true;  ///< false: decimal inputs carry rounding intervals

  static SequenceSpec constant(Number c);
  static SequenceSpec geometric(Number a, Number r);
  static SequenceSpec power(Number a, Number p);
  static SequenceSpec explicit_terms(std::vector<Number> prefix, SequenceSpec tail);

  friend bool operator==(const SequenceSpec& x, const SequenceSpec& y);
};

/// Outcome of summing a positive series: a finite value (exact or with an
/// error bound) or divergence.
class SeriesSum {
 public:
  static SeriesSum finite(Number value) { return SeriesSum(std::move(value)); }
  static SeriesSum divergent() { return SeriesSum(); }

  bool is_finite() const noexcept { return value_.has_value(); }
  bool is_divergent() const noexcept { return !value_.has_value(); }
  /// Throws InvariantError when divergent.
  const Number& value() const;
  /// +inf when divergent.
  double as_double() const;
  std::string to_string() const;

 private:
  SeriesSum() = default;
  explicit SeriesSum(Number v) : value_(std::move(v)) {}
  std::optional<Number> value_;
};

/// (n + shift)^(-exponent)
struct PowerFactor {
  std::int64_t shift = 1;
  Number exponent = 0;
};

/// Compiled closed form of a sequence: explicit leading terms overriding a
/// tail term a * r^n * prod_i (n + c_i)^(-p_i). Closed under products,
/// reciprocals, index shifts and scaling, which is what the volume, kernel
/// and tail-volume series need.
class TermSequence {
 public:
  TermSequence() = default;
  static TermSequence from_spec(const SequenceSpec& spec);
  /// a * r^n, no prefix.
  static TermSequence geometric(Number a, Number r);

  Number eval(std::size_t n) const;
  double eval_double(std::size_t n) const;

  TermSequence operator*(const TermSequence& other) const;
  TermSequence reciprocal() const;
  /// n -> s_{n + k}
  TermSequence shifted(std::size_t k) const;
  TermSequence scaled(const Number& factor) const;
  /// Replaces the terms at indices [0, values.size()).
  TermSequence with_prefix(std::vector<Number> values) const;

  /// Sum over n >= first.
  SeriesSum sum_from(std::size_t first = 0) const;

  bool tends_to_zero() const;
  bool bounded() const;
  /// Tail is a constant (r == 1, no power factors).
  bool constant_tail() const;
  /// Sufficient check that every term is an integer.
  bool integer_valued() const;

  std::size_t prefix_size() const noexcept { return prefix_.size(); }
  const std::vector<Number>& prefix() const noexcept { return prefix_; }
  const Number& coefficient() const noexcept { return a_; }
  const Number& ratio() const noexcept { return r_; }
  const std::vector<PowerFactor>& factors() const noexcept { return factors_; }
  /// Sum of the power exponents of the tail.
  Number total_exponent() const;

 private:
  Number tail_eval(std::size_t n) const;
  double tail_eval_double(double n) const;
  SeriesSum tail_sum(std::size_t first) const;
  SeriesSum geometric_power_sum(std::size_t first) const;
  SeriesSum unit_ratio_sum(std::size_t first) const;
  void normalize();
  /// -1 / 0 / +1 relative to 1; throws when undecidable.
  int compare_ratio_to_one() const;

  std::vector<Number> prefix_;
  Number a_ = 1;
  Number r_ = 1;
  std::vector<PowerFactor> factors_;
};

Number seq_eval(const SequenceSpec& s, std::size_t n);
SeriesSum seq_series_sum(const SequenceSpec& s);

}  // namespace qgends
