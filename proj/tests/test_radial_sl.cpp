#include "qgends/error.hpp"
#include "qgends/graphspec.hpp"
#include "qgends/radial_sl.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

using namespace qgends;

namespace {

RadialTreeData data(const std::string& b, const std::string& ell) {
  const auto s = parse_spec(R"({"variant":"RadialTree","b":)" + b + R"(,"ell":)" + ell + "}");
  return RadialTreeData::build(*s.get_if<RadialTreeSpec>());
}
RadialTreeData geometric_tree(int b, const std::string& r) {
  return data(R"({"kind":"constant","c":)" + std::to_string(b) + "}", R"({"kind":"geometric","a":1,"r":")" + r + "\"}");
}
Number q(long p, long d) { return Number::exact(Rational(p, d)); }

void check_error(ErrorKind kind, auto&& fn) {
  try {
    fn();
    FAIL("expected " << to_string(kind));
  } catch (const Error& e) {
    CHECK(e.kind() == kind);
  }
}

}  // namespace

TEST_CASE("build examples") {
  const auto d = geometric_tree(2, "1/4");
  CHECK(d.mu(2) == Number(8));
  CHECK(d.t(2) == q(5, 4));
  CHECK(d.L().value() == q(4, 3));
  CHECK(d.vol().value() == Number(4));
  const auto u = geometric_tree(2, "1");
  CHECK(u.L().is_divergent());
  CHECK(u.vol().is_divergent());
  CHECK(u.complete());
  CHECK(geometric_tree(3, "1").mu(0) == Number(3));
}

TEST_CASE("radial data invariants") {
  for (int b : {2, 3}) {
    for (const char* r : {"1/8", "1/2", "1", "2"}) {
      const auto d = geometric_tree(b, r);
      for (std::size_t n = 0; n < 20; ++n) {
        CHECK(d.mu(n + 1) > d.mu(n));
        CHECK(d.mu(n) >= Number(std::int64_t(1) << (n + 1)));
        CHECK(d.t(n + 1) > d.t(n));
      }
      CHECK(d.L().is_finite() == (Number::parse(r) < Number(1)));
    }
  }
  // Explicit branching prefix.
  const auto e = data(R"({"kind":"explicit","prefix":[3,2],"tail":{"kind":"constant","c":2}})",
                      R"({"kind":"constant","c":1})");
  CHECK(e.mu(0) == Number(3));
  CHECK(e.mu(1) == Number(6));
  CHECK(e.mu(4) == Number(48));
}

TEST_CASE("weight_eval examples") {
  const auto d = geometric_tree(2, "1/4");
  CHECK(weight_eval(d, 0.5) == Number(2));
  CHECK(weight_eval(d, 1.1) == Number(4));
  check_error(ErrorKind::OutOfDomain, [&] { weight_eval(d, 4.0 / 3.0); });
  check_error(ErrorKind::OutOfDomain, [&] { weight_eval(d, -0.1); });
  // Right-continuous with jump factor b_n at every breakpoint.
  for (std::size_t n = 1; n < 12; ++n) {
    const double t = d.t(n).value();
    CHECK(weight_eval(d, t) == d.mu(n));
    const double below = std::nextafter(t, 0.0);
    CHECK(weight_eval(d, below) * d.b(n) == weight_eval(d, t));
  }
}

TEST_CASE("generation_at agrees with exact comparison next to breakpoints") {
  const auto d = geometric_tree(2, "2/3");
  std::vector<Number> t = {Number(0)};
  for (std::size_t j = 0; j < 60; ++j) t.push_back(t.back() + d.ell(j));
  for (std::size_t j = 1; j < 50; ++j) {
    double x = std::nextafter(std::nextafter(t[j].value(), 0.0), 0.0);
    for (int step = 0; step < 5; ++step, x = std::nextafter(x, 10.0)) {
      const Number xs = Number::exact(Rational(x));
      std::size_t expected = 0;
      while (!(xs < t[expected + 1])) ++expected;
      CHECK(generation_at(d, x) == expected);
    }
  }
}

TEST_CASE("kernel_g examples") {
  const auto d = geometric_tree(2, "1/4");
  const KernelG g0 = kernel_g(d, 0);
  CHECK(g0.at_breakpoint(1) == q(1, 2));
  CHECK(g0(1.0) == doctest::Approx(0.5).epsilon(1e-15));
  for (std::size_t n = 0; n < 6; ++n) {
    CHECK(kernel_g(d, n).at_breakpoint(n) == Number(0));
    CHECK(kernel_g(d, n)(d.t(n).value()) == 0.0);
  }
  CHECK(g0.limit().value() == q(4, 7));
  double oracle = 0.0;
  for (int k = 0; k < 60; ++k) oracle += 0.5 * std::pow(8.0, -k);
  CHECK(std::abs(g0.limit().as_double() - oracle) < 1e-12);
  check_error(ErrorKind::InfiniteVolumeRegime, [&] { kernel_g(geometric_tree(2, "1"), 0); });
}

TEST_CASE("kernel_energy examples") {
  CHECK(kernel_energy(geometric_tree(2, "1/4"), 0).value() == q(4, 7));
  CHECK(kernel_energy(geometric_tree(2, "1"), 0).value() == Number(1));
  CHECK(kernel_energy(geometric_tree(2, "1/4"), 1).value() == q(1, 14));
}

TEST_CASE("decomposition_multiplicities examples and telescoping") {
  CHECK(decomposition_multiplicities(geometric_tree(2, "1"), 0) == Number(1));
  CHECK(decomposition_multiplicities(geometric_tree(2, "1"), 2) == Number(4));
  CHECK(decomposition_multiplicities(geometric_tree(3, "1"), 1) == Number(6));
  for (int b : {2, 3, 5}) {
    const auto d = geometric_tree(b, "1/2");
    Number acc = 1;
    for (std::size_t n = 0; n <= 15; ++n) {
      acc += decomposition_multiplicities(d, n);
      CHECK(acc == d.mu(n));
    }
  }
}

TEST_CASE("end_value examples") {
  const auto d = geometric_tree(2, "1/4");
  CHECK(end_value(d, RadialFunction::constant(1)) == 1.0);
  CHECK(end_value(d, kernel_g(d, 0).handle()) == doctest::Approx(4.0 / 7.0).epsilon(1e-15));
  // Without the closed-form limit the sampled tail must agree.
  RadialFunction sampled = kernel_g(d, 0).handle();
  sampled.limit.reset();
  CHECK(end_value(d, sampled) == doctest::Approx(4.0 / 7.0).epsilon(1e-9));
  RadialFunction late = kernel_g(d, 9).handle();
  late.limit.reset();
  CHECK(end_value(d, late) == doctest::Approx(kernel_energy(d, 9).as_double()).epsilon(1e-9));
  const double L = d.L().as_double();
  RadialFunction wild{[L](double x) { return std::sin(1.0 / (L - x)); }, std::nullopt, "oscillating"};
  check_error(ErrorKind::NoLimit, [&] { end_value(d, wild); });
}

TEST_CASE("energy identity against quadrature") {
  const std::vector<RadialTreeData> trees = {geometric_tree(2, "1/4"), geometric_tree(3, "1/4"),
                                             geometric_tree(2, "1/8")};
  for (const auto& d : trees) {
    for (std::size_t n = 0; n <= 10; ++n) {
      const KernelG g = kernel_g(d, n);
      CHECK(kernel_energy(d, n).value() == g.limit().value());
      CHECK(end_value(d, g.handle()) == kernel_energy(d, n).as_double());
      // Truncated domain [t_n, t_N]: integral of |g'|^2 mu segment by segment.
      const std::size_t N = n + 4;
      double integral = 0.0;
      for (std::size_t j = n; j < N; ++j) {
        const double a = d.t(j).value(), b = d.t(j + 1).value();
        const double mid = 0.5 * (a + b);
        const double mu = weight_eval(d, mid).value();
        integral += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
            [&](double x) {
              const double gp = g.derivative(std::clamp(x, a, std::nextafter(b, a)));
              return gp * gp * mu;
            },
            a, b, 10, 1e-15);
      }
      CHECK(std::abs(integral - g.at_breakpoint(N).value()) < 1e-12);
    }
  }
}

TEST_CASE("radial operator annihilates kernels") {
  const auto d = geometric_tree(2, "1/4");
  for (std::size_t n = 0; n < 3; ++n) {
    const KernelG g = kernel_g(d, n);
    double worst = 0.0;
    for (std::size_t j = n; j < n + 2; ++j) {
      const double a = d.t(j).value(), b = d.t(j + 1).value();
      const double h = (b - a) / 16.0;
      const double mu = d.mu(j).value();
      for (int i = 2; i < 14; ++i) {
        const double x = a + i * h;
        // -(1/mu) (mu f')' by centered divided differences of the flux.
        const double flux_r = mu * (g(x + h) - g(x)) / h;
        const double flux_l = mu * (g(x) - g(x - h)) / h;
        worst = std::max(worst, std::abs(-(flux_r - flux_l) / h / mu));
      }
    }
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("exports") {
  const auto d = geometric_tree(2, "1/4");
  const auto j = weight_breakpoints_json(d, 3);
  CHECK(j["breakpoints"][2] == "5/4");
  CHECK(j["values"][1] == "4");
  CHECK(j["L"] == "4/3");
  const std::string csv = tree_kernels_csv(d, 2);
  CHECK(csv.rfind("n,end_value,energy,multiplicity\n0,", 0) == 0);
  CHECK(csv.find("\n1,0.071428571428571") != std::string::npos);
}
