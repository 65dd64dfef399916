#pragma once

#include "qgends/graphspec.hpp"
#include "qgends/number.hpp"
#include "qgends/sequence.hpp"

#include <json.hpp>

#include <cstddef>
#include <functional>
#include <optional>
#include <string>

namespace qgends {

/// Radial data of a tree: mu_n = b_0 ... b_n edges in generation n, each of
/// length ell_n, starting at distance t_n = ell_0 + ... + ell_{n-1}.
class RadialTreeData {
 public:
  static RadialTreeData build(const RadialTreeSpec& spec);

  Number b(std::size_t n) const { return b_.eval(n); }
  Number ell(std::size_t n) const { return ell_.eval(n); }
  Number mu(std::size_t n) const { return mu_.eval(n); }
  Number t(std::size_t n) const;
  double t_double(std::size_t n) const;

  /// lim t_n
  const SeriesSum& L() const noexcept { return L_; }
  const SeriesSum& vol() const noexcept { return vol_; }
  bool complete() const noexcept { return L_.is_divergent(); }

  const TermSequence& mu_sequence() const noexcept { return mu_; }
  const TermSequence& ell_sequence() const noexcept { return ell_; }
  /// ell_k / mu_k
  const TermSequence& inverse_weight_lengths() const noexcept { return ell_over_mu_; }

 private:
  TermSequence b_, ell_, mu_, ell_over_mu_;
  SeriesSum L_ = SeriesSum::divergent();
  SeriesSum vol_ = SeriesSum::divergent();
};

/// Index n with t_n <= s < t_{n+1}. OutOfDomain outside [0, L).
std::size_t generation_at(const RadialTreeData& data, double s);
/// mu(s)
Number weight_eval(const RadialTreeData& data, double s);

/// A radial function on [0, L) with an optional known limit at L.
struct RadialFunction {
  std::function<double(double)> eval;
  std::optional<Number> limit;
  std::string name;
  /// eval is defined from t_{first_generation} on.
  std::size_t first_generation = 0;

  static RadialFunction constant(Number c);
};

/// g_n(x) = integral of 1/mu over [t_n, x], an exact piecewise-linear form.
class KernelG {
 public:
  KernelG(RadialTreeData data, std::size_t n);

  std::size_t generation() const noexcept { return n_; }
  /// g_n(t_j) for j >= n.
  Number at_breakpoint(std::size_t j) const;
  double operator()(double x) const;
  /// g_n'(x) = 1 / mu(x)
  double derivative(double x) const;
  /// lim_{x -> L} g_n(x)
  const SeriesSum& limit() const noexcept { return limit_; }
  RadialFunction handle() const;

 private:
  RadialTreeData data_;
  std::size_t n_;
  SeriesSum limit_ = SeriesSum::divergent();
};

/// InfiniteVolumeRegime when vol(T) diverges.
KernelG kernel_g(const RadialTreeData& data, std::size_t n);
/// Sum over k >= n of ell_k / mu_k.
SeriesSum kernel_energy(const RadialTreeData& data, std::size_t n);
/// mu_n - mu_{n-1}, with mu_{-1} = 1.
Number decomposition_multiplicities(const RadialTreeData& data, std::size_t n);
/// lim_{x -> L} f(x). Uses the closed-form limit when the handle has one,
/// otherwise samples at breakpoints approaching L; NoLimit when they do not settle.
double end_value(const RadialTreeData& data, const RadialFunction& f);

nlohmann::json weight_breakpoints_json(const RadialTreeData& data, std::size_t generations);
/// Rows n,end_value,energy,multiplicity for n < generations.
std::string tree_kernels_csv(const RadialTreeData& data, std::size_t generations);

}  // namespace qgends
