#include "qgends/sequence.hpp"

#include "qgends/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace qgends {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

bool same_number(const Number& x, const Number& y) {
  return x.is_exact() == y.is_exact() && x.to_string() == y.to_string();
}

// Relative error of a number, 0 for exact inputs.
double rel_error(const Number& x) {
  if (x.is_exact() || x.value() == 0.0) return 0.0;
  return x.error() / std::abs(x.value());
}

// 8-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 8> kGlNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

// B_{2k} for k = 1..8
constexpr std::array<double, 8> kBernoulli = {
    1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0,
    5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0, -3617.0 / 510.0};

}  // namespace

// ---------------------------------------------------------------------------
// SequenceSpec

SequenceSpec SequenceSpec::constant(Number c) {
  SequenceSpec s;
  s.kind = Kind::Constant;
  s.a = std::move(c);
  return s;
}

SequenceSpec SequenceSpec::geometric(Number a, Number r) {
  SequenceSpec s;
  s.kind = Kind::Geometric;
  s.a = std::move(a);
  s.r = std::move(r);
  return s;
}

SequenceSpec SequenceSpec::power(Number a, Number p) {
  SequenceSpec s;
  s.kind = Kind::Power;
  s.a = std::move(a);
  s.p = std::move(p);
  return s;
}

SequenceSpec SequenceSpec::explicit_terms(std::vector<Number> prefix, SequenceSpec tail) {
  SequenceSpec s;
  s.kind = Kind::Explicit;
  s.prefix = std::move(prefix);
  s.tail = std::make_shared<const SequenceSpec>(std::move(tail));
  return s;
}

bool operator==(const SequenceSpec& x, const SequenceSpec& y) {
  if (x.kind != y.kind || x.exact != y.exact) return false;
  switch (x.kind) {
    case SequenceSpec::Kind::Constant:
      return same_number(x.a, y.a);
    case SequenceSpec::Kind::Geometric:
      return same_number(x.a, y.a) && same_number(x.r, y.r);
    case SequenceSpec::Kind::Power:
      return same_number(x.a, y.a) && same_number(x.p, y.p);
    case SequenceSpec::Kind::Explicit:
      if (x.prefix.size() != y.prefix.size()) return false;
      for (std::size_t i = 0; i < x.prefix.size(); ++i) {
        if (!same_number(x.prefix[i], y.prefix[i])) return false;
      }
      if (!x.tail || !y.tail) return x.tail == y.tail;
      return *x.tail == *y.tail;
  }
  return false;
}

// ---------------------------------------------------------------------------
// SeriesSum

const Number& SeriesSum::value() const {
  if (!value_) fail(ErrorKind::InvariantError, "series diverges");
  return *value_;
}

double SeriesSum::as_double() const {
  return value_ ? value_->value() : std::numeric_limits<double>::infinity();
}

std::string SeriesSum::to_string() const {
  return value_ ? value_->to_string() : std::string("divergent");
}

// ---------------------------------------------------------------------------
// TermSequence

TermSequence TermSequence::from_spec(const SequenceSpec& spec) {
  TermSequence t;
  switch (spec.kind) {
    case SequenceSpec::Kind::Constant:
      t.a_ = spec.a;
      break;
    case SequenceSpec::Kind::Geometric:
      t.a_ = spec.a;
      t.r_ = spec.r;
      break;
    case SequenceSpec::Kind::Power:
      t.a_ = spec.a;
      t.factors_.push_back({1, spec.p});
      break;
    case SequenceSpec::Kind::Explicit: {
      if (!spec.tail) fail(ErrorKind::SchemaError, "explicit sequence without tail");
      t = from_spec(*spec.tail);
      std::vector<Number> values = spec.prefix;
      for (std::size_t i = values.size(); i < t.prefix_.size(); ++i) {
        values.push_back(t.prefix_[i]);
      }
      t.prefix_ = std::move(values);
      break;
    }
  }
  t.normalize();
  return t;
}

TermSequence TermSequence::geometric(Number a, Number r) {
  TermSequence t;
  t.a_ = std::move(a);
  t.r_ = std::move(r);
  return t;
}

void TermSequence::normalize() {
  std::sort(factors_.begin(), factors_.end(),
            [](const PowerFactor& x, const PowerFactor& y) { return x.shift < y.shift; });
  std::vector<PowerFactor> merged;
  for (const auto& f : factors_) {
    if (!merged.empty() && merged.back().shift == f.shift) {
      merged.back().exponent += f.exponent;
    } else {
      merged.push_back(f);
    }
  }
  std::erase_if(merged, [](const PowerFactor& f) {
    return f.exponent.is_exact() && f.exponent.rational() == 0;
  });
  factors_ = std::move(merged);
}

Number TermSequence::tail_eval(std::size_t n) const {
  Number v = a_ * r_.pow(static_cast<std::int64_t>(n));
  for (const auto& f : factors_) {
    const auto base = static_cast<std::int64_t>(n) + f.shift;
    if (base <= 0) fail(ErrorKind::InvariantError, "power factor evaluated at a non-positive base");
    v = v * Number(base).pow(-f.exponent);
  }
  return v;
}

double TermSequence::tail_eval_double(double n) const {
  double direct = a_.value() * std::pow(r_.value(), n);
  for (const auto& f : factors_) direct *= std::pow(n + static_cast<double>(f.shift), -f.exponent.value());
  if (std::isfinite(direct) && direct > 0.0) return direct;
  double log_v = std::log(a_.value()) + n * std::log(r_.value());
  for (const auto& f : factors_) {
    log_v -= f.exponent.value() * std::log(n + static_cast<double>(f.shift));
  }
  return std::exp(log_v);
}

Number TermSequence::eval(std::size_t n) const {
  if (n < prefix_.size()) return prefix_[n];
  return tail_eval(n);
}

double TermSequence::eval_double(std::size_t n) const {
  if (n < prefix_.size()) return prefix_[n].value();
  return tail_eval_double(static_cast<double>(n));
}

TermSequence TermSequence::operator*(const TermSequence& other) const {
  TermSequence t;
  const std::size_t k = std::max(prefix_.size(), other.prefix_.size());
  for (std::size_t i = 0; i < k; ++i) t.prefix_.push_back(eval(i) * other.eval(i));
  t.a_ = a_ * other.a_;
  t.r_ = r_ * other.r_;
  t.factors_ = factors_;
  t.factors_.insert(t.factors_.end(), other.factors_.begin(), other.factors_.end());
  t.normalize();
  return t;
}

TermSequence TermSequence::reciprocal() const {
  TermSequence t;
  for (const auto& v : prefix_) t.prefix_.push_back(Number(1) / v);
  t.a_ = Number(1) / a_;
  t.r_ = Number(1) / r_;
  for (const auto& f : factors_) t.factors_.push_back({f.shift, -f.exponent});
  return t;
}

TermSequence TermSequence::shifted(std::size_t k) const {
  TermSequence t;
  for (std::size_t i = k; i < prefix_.size(); ++i) t.prefix_.push_back(prefix_[i]);
  t.a_ = a_ * r_.pow(static_cast<std::int64_t>(k));
  t.r_ = r_;
  for (const auto& f : factors_) {
    t.factors_.push_back({f.shift + static_cast<std::int64_t>(k), f.exponent});
  }
  return t;
}

TermSequence TermSequence::scaled(const Number& factor) const {
  TermSequence t = *this;
  for (auto& v : t.prefix_) v = v * factor;
  t.a_ = a_ * factor;
  return t;
}

TermSequence TermSequence::with_prefix(std::vector<Number> values) const {
  TermSequence t = *this;
  for (std::size_t i = values.size(); i < prefix_.size(); ++i) values.push_back(prefix_[i]);
  t.prefix_ = std::move(values);
  return t;
}

Number TermSequence::total_exponent() const {
  Number total = 0;
  for (const auto& f : factors_) total += f.exponent;
  return total;
}

int TermSequence::compare_ratio_to_one() const {
  const Number d = r_ - Number(1);
  if (d.is_exact()) {
    const Rational& q = d.rational();
    return q < 0 ? -1 : (q > 0 ? 1 : 0);
  }
  if (d.certainly_negative()) return -1;
  if (d.certainly_positive()) return 1;
  fail(ErrorKind::InvariantError,
       "ratio " + r_.to_string() + " cannot be separated from 1 at its stated precision");
}

bool TermSequence::constant_tail() const {
  return factors_.empty() && compare_ratio_to_one() == 0;
}

bool TermSequence::tends_to_zero() const {
  const int c = compare_ratio_to_one();
  if (c != 0) return c < 0;
  return total_exponent().certainly_positive();
}

bool TermSequence::bounded() const {
  const int c = compare_ratio_to_one();
  if (c != 0) return c < 0;
  return !total_exponent().certainly_negative();
}

bool TermSequence::integer_valued() const {
  for (const auto& v : prefix_) {
    if (!v.is_integer()) return false;
  }
  if (!a_.is_integer() || !r_.is_integer()) return false;
  for (const auto& f : factors_) {
    if (!f.exponent.is_integer() || f.exponent.certainly_positive()) return false;
  }
  return true;
}

SeriesSum TermSequence::sum_from(std::size_t first) const {
  Number head = 0;
  for (std::size_t n = first; n < prefix_.size(); ++n) head += prefix_[n];
  SeriesSum tail = tail_sum(std::max(first, prefix_.size()));
  if (tail.is_divergent()) return tail;
  return SeriesSum::finite(head + tail.value());
}

SeriesSum TermSequence::tail_sum(std::size_t first) const {
  const int c = compare_ratio_to_one();
  if (c > 0) return SeriesSum::divergent();
  if (c < 0) {
    if (factors_.empty()) {
      return SeriesSum::finite(a_ * r_.pow(static_cast<std::int64_t>(first)) /
                               (Number(1) - r_));
    }
    return geometric_power_sum(first);
  }
  if (factors_.empty()) return SeriesSum::divergent();
  const Number excess = total_exponent() - Number(1);
  if (excess.is_exact()) {
    if (excess.rational() <= 0) return SeriesSum::divergent();
  } else if (!excess.certainly_positive()) {
    if (excess.certainly_negative()) return SeriesSum::divergent();
    fail(ErrorKind::InvariantError, "power exponent cannot be separated from 1");
  }
  return unit_ratio_sum(first);
}

// r < 1 with power factors: direct summation with a ratio-bounded tail.
SeriesSum TermSequence::geometric_power_sum(std::size_t first) const {
  const double r = r_.value();
  long double sum = 0.0L;
  double tail_bound = std::numeric_limits<double>::infinity();
  std::size_t n = first;
  constexpr std::size_t kMaxTerms = 50'000'000;
  for (; n < first + kMaxTerms; ++n) {
    const double t = tail_eval_double(static_cast<double>(n));
    sum += t;
    const double next = tail_eval_double(static_cast<double>(n + 1));
    const double next2 = tail_eval_double(static_cast<double>(n + 2));
    const double q = std::max(r, next > 0.0 ? next2 / next : 0.0);
    if (q < 1.0) {
      tail_bound = next / (1.0 - q);
      if (tail_bound <= 1e-17 * static_cast<double>(sum) || tail_bound == 0.0) break;
    }
  }
  const double s = static_cast<double>(sum);
  const double terms = static_cast<double>(n - first + 1);
  double err = tail_bound + s * kEps * (4.0 + std::sqrt(terms));
  err += s * rel_error(a_);
  err += s * terms * rel_error(r_);
  for (const auto& f : factors_) {
    err += s * f.exponent.error() * std::log(static_cast<double>(n) + std::abs(static_cast<double>(f.shift)) + 1.0);
  }
  return SeriesSum::finite(Number::approx(s, err));
}

// r == 1, total exponent > 1: direct head, Euler-Maclaurin tail with Taylor
// coefficients of the product of shifted powers.
SeriesSum TermSequence::unit_ratio_sum(std::size_t first) const {
  std::int64_t min_shift = factors_.front().shift;
  for (const auto& f : factors_) min_shift = std::min(min_shift, f.shift);
  std::size_t cut = first + 64;
  if (static_cast<std::int64_t>(cut) + min_shift < 64) {
    cut = static_cast<std::size_t>(64 - min_shift);
  }
  cut = std::max(cut, first);

  long double head = 0.0L;
  for (std::size_t n = first; n < cut; ++n) head += tail_eval_double(static_cast<double>(n));

  // Taylor coefficients of f(cut + t) up to t^(2J - 1)
  constexpr int kOrder = 16;
  std::array<long double, kOrder> coeff{};
  coeff[0] = a_.value();
  for (const auto& f : factors_) {
    const long double u = static_cast<long double>(cut) + static_cast<long double>(f.shift);
    const long double p = f.exponent.value();
    std::array<long double, kOrder> g{};
    g[0] = std::pow(u, -p);
    for (int j = 1; j < kOrder; ++j) g[j] = g[j - 1] * (-p - (j - 1)) / (j * u);
    std::array<long double, kOrder> prod{};
    for (int i = 0; i < kOrder; ++i) {
      for (int j = 0; i + j < kOrder; ++j) prod[i + j] += coeff[i] * g[j];
    }
    coeff = prod;
  }

  const double P = total_exponent().value();
  long double integral = 0.0L;
  double quad_err = 0.0;
  if (factors_.size() == 1) {
    const long double u = static_cast<long double>(cut) + static_cast<long double>(factors_[0].shift);
    integral = a_.value() * std::pow(u, 1.0L - P) / (P - 1.0L);
  } else {
    // x = cut * e^s; the integrand decays like e^{-(P-1)s}
    const double x0 = static_cast<double>(cut);
    const double s_max = std::min(50.0 / (P - 1.0), 2.0e5);
    const double width = 0.25;
    const auto panels = static_cast<std::size_t>(std::ceil(s_max / width));
    for (std::size_t k = 0; k < panels; ++k) {
      const double lo = static_cast<double>(k) * width;
      long double panel = 0.0L;
      for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
        const double s = lo + 0.5 * width * (kGlNodes[i] + 1.0);
        const double x = x0 * std::exp(s);
        panel += kGlWeights[i] * tail_eval_double(x) * x;
      }
      integral += 0.5L * width * panel;
    }
    const double xe = x0 * std::exp(s_max);
    quad_err = tail_eval_double(xe) * xe / (P - 1.0) + 1e-15 * static_cast<double>(integral);
  }

  long double em = coeff[0] / 2.0L;
  double last = 0.0;
  for (int k = 1; k <= 7; ++k) {
    const long double term = kBernoulli[k - 1] / (2.0L * k) * coeff[2 * k - 1];
    em -= term;
    last = static_cast<double>(std::abs(term));
  }
  const double total = static_cast<double>(head + integral + em);
  double err = last + quad_err + total * kEps * 16.0;
  err += total * rel_error(a_);
  for (const auto& f : factors_) {
    err += total * f.exponent.error() * std::log(static_cast<double>(cut) + 1.0) * 4.0;
  }
  return SeriesSum::finite(Number::approx(total, err));
}

Number seq_eval(const SequenceSpec& s, std::size_t n) {
  return TermSequence::from_spec(s).eval(n);
}

SeriesSum seq_series_sum(const SequenceSpec& s) {
  return TermSequence::from_spec(s).sum_from(0);
}

}  // namespace qgends
