#include "qgends/radial_sl.hpp"

#include "qgends/error.hpp"
#include "qgends/metric_graph.hpp"

#include <cmath>
#include <sstream>

namespace qgends {

namespace {

// Breakpoints below this index are compared exactly.
constexpr std::size_t kExactBreakpoints = 256;
constexpr std::size_t kMaxGenerations = 100'000'000;

Number exact_double(double x) { return Number::exact(Rational(x)); }

std::string csv_number(double x) {
  std::ostringstream out;
  out.precision(17);
  out << x;
  return out.str();
}

}  // namespace

RadialTreeData RadialTreeData::build(const RadialTreeSpec& spec) {
  RadialTreeData d;
  d.b_ = TermSequence::from_spec(spec.b);
  d.ell_ = TermSequence::from_spec(spec.ell);
  d.mu_ = branching_products(spec.b);
  d.ell_over_mu_ = d.ell_ * d.mu_.reciprocal();
  d.L_ = d.ell_.sum_from(0);
  d.vol_ = (d.mu_ * d.ell_).sum_from(0);
  return d;
}

Number RadialTreeData::t(std::size_t n) const {
  Number s = 0;
  for (std::size_t k = 0; k < n; ++k) s += ell_.eval(k);
  return s;
}

double RadialTreeData::t_double(std::size_t n) const {
  double s = 0.0, c = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double y = ell_.eval_double(k) - c;
    const double u = s + y;
    c = (u - s) - y;
    s = u;
  }
  return s;
}

std::size_t generation_at(const RadialTreeData& data, double s) {
  if (!(s >= 0.0)) fail(ErrorKind::OutOfDomain, "radial coordinate must be >= 0");
  if (data.L().is_finite() && s >= data.L().as_double()) {
    fail(ErrorKind::OutOfDomain, "radial coordinate must be < L = " + data.L().to_string());
  }
  // Doubles decide unless s lies within kNear of a breakpoint; those are
  // compared exactly.
  constexpr double kNear = 1e-12;
  double t = 0.0;
  std::size_t n = 0;
  for (; n < kExactBreakpoints; ++n) {
    const double next = t + data.ell_sequence().eval_double(n);
    const double margin = kNear * std::max(1.0, next);
    if (s < next - margin) return n;
    if (s <= next + margin) {
      const Number t_next = data.t(n + 1);
      if (!t_next.is_exact()) break;
      if (exact_double(s) < t_next) return n;
    }
    t = next;
  }
  if (data.L().is_finite() && data.L().value().is_exact() && exact_double(s) >= data.L().value()) {
    fail(ErrorKind::OutOfDomain, "radial coordinate must be < L = " + data.L().to_string());
  }
  t = data.t_double(n);
  for (; n < kMaxGenerations; ++n) {
    const double next = t + data.ell_sequence().eval_double(n);
    if (s < next) return n;
    if (next == t) break;
    t = next;
  }
  fail(ErrorKind::OutOfDomain, "radial coordinate is not resolvable below L in double precision");
}

Number weight_eval(const RadialTreeData& data, double s) { return data.mu(generation_at(data, s)); }

RadialFunction RadialFunction::constant(Number c) {
  const double v = c.value();
  return {[v](double) { return v; }, c, "constant " + c.to_string()};
}

KernelG::KernelG(RadialTreeData data, std::size_t n)
    : data_(std::move(data)), n_(n), limit_(data_.inverse_weight_lengths().sum_from(n)) {}

Number KernelG::at_breakpoint(std::size_t j) const {
  if (j < n_) fail(ErrorKind::OutOfDomain, "g_n is defined from t_n on");
  Number s = 0;
  for (std::size_t k = n_; k < j; ++k) s += data_.inverse_weight_lengths().eval(k);
  return s;
}

double KernelG::operator()(double x) const {
  const std::size_t j = generation_at(data_, x);
  if (j < n_) fail(ErrorKind::OutOfDomain, "g_n is defined from t_n on");
  const double tj = data_.t_double(j);
  return at_breakpoint(j).value() + (x - tj) / data_.mu_sequence().eval_double(j);
}

double KernelG::derivative(double x) const {
  const std::size_t j = generation_at(data_, x);
  if (j < n_) fail(ErrorKind::OutOfDomain, "g_n is defined from t_n on");
  return 1.0 / data_.mu_sequence().eval_double(j);
}

RadialFunction KernelG::handle() const {
  RadialFunction f;
  f.eval = [self = *this](double x) { return self(x); };
  if (limit_.is_finite()) f.limit = limit_.value();
  f.name = "g_" + std::to_string(n_);
  f.first_generation = n_;
  return f;
}

KernelG kernel_g(const RadialTreeData& data, std::size_t n) {
  if (data.vol().is_divergent()) {
    fail(ErrorKind::InfiniteVolumeRegime, "kernel functions are only analysed for trees of finite volume");
  }
  return KernelG(data, n);
}

SeriesSum kernel_energy(const RadialTreeData& data, std::size_t n) {
  return data.inverse_weight_lengths().sum_from(n);
}

Number decomposition_multiplicities(const RadialTreeData& data, std::size_t n) {
  const Number previous = n == 0 ? Number(1) : data.mu(n - 1);
  return data.mu(n) - previous;
}

double end_value(const RadialTreeData& data, const RadialFunction& f) {
  if (f.limit) return f.limit->value();
  double prev = 0.0, prev_diff = INFINITY;
  int settled = 0;
  bool have_prev = false;
  const std::size_t first = f.first_generation + 1;
  for (std::size_t j = first; j < first + (std::size_t(1) << 24); j += std::max<std::size_t>(1, (j - first) / 8)) {
    const double x = data.t_double(j);
    if (data.L().is_finite() && x >= data.L().as_double()) break;
    const double v = f.eval(x);
    if (!std::isfinite(v)) fail(ErrorKind::NoLimit, f.name + " is not finite near the end");
    if (have_prev) {
      const double diff = std::abs(v - prev);
      const double tol = 1e-9 * std::max(1.0, std::abs(v));
      settled = (diff <= tol && diff <= prev_diff) ? settled + 1 : 0;
      if (settled >= 3) return v;
      prev_diff = diff;
    }
    prev = v;
    have_prev = true;
  }
  fail(ErrorKind::NoLimit, f.name + " does not settle towards the end");
}

nlohmann::json weight_breakpoints_json(const RadialTreeData& data, std::size_t generations) {
  nlohmann::json t = nlohmann::json::array(), mu = nlohmann::json::array();
  Number acc = 0;
  for (std::size_t n = 0; n < generations; ++n) {
    t.push_back(acc.to_string());
    mu.push_back(data.mu(n).to_string());
    acc += data.ell(n);
  }
  return {{"schema", "qgends-weight/1"},
          {"breakpoints", t},
          {"values", mu},
          {"L", data.L().is_finite() ? data.L().to_string() : "infinite"},
          {"volume", data.vol().to_string()}};
}

std::string tree_kernels_csv(const RadialTreeData& data, std::size_t generations) {
  std::ostringstream out;
  out << "n,end_value,energy,multiplicity\n";
  for (std::size_t n = 0; n < generations; ++n) {
    const KernelG g = kernel_g(data, n);
    out << n << ',' << csv_number(end_value(data, g.handle())) << ',' << csv_number(kernel_energy(data, n).as_double())
        << ',' << decomposition_multiplicities(data, n).to_string() << '\n';
  }
  return out.str();
}

}  // namespace qgends
