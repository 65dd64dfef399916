#include "qgends/spectral.hpp"

#include "qgends/ends.hpp"
#include "qgends/error.hpp"
#include "qgends/parallel.hpp"

#include <Eigen/SVD>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace qgends {

namespace {

enum class Basis { Trig, Hyperbolic, Linear };

struct Wave {
  Basis basis = Basis::Linear;
  double k = 0.0;
};

Wave wave(double lambda) {
  if (lambda > 0) return {Basis::Trig, std::sqrt(lambda)};
  if (lambda < 0) return {Basis::Hyperbolic, std::sqrt(-lambda)};
  return {};
}

// y - sin y and sinh y - y without cancellation for small y.
double y_minus_sin(double y) {
  if (std::abs(y) >= 0.5) return y - std::sin(y);
  const double y2 = y * y;
  return y * y2 * (1.0 / 6 - y2 * (1.0 / 120 - y2 * (1.0 / 5040 - y2 * (1.0 / 362880 - y2 / 39916800))));
}
double sinh_minus_y(double y) {
  if (std::abs(y) >= 0.5) return std::sinh(y) - y;
  const double y2 = y * y;
  return y * y2 * (1.0 / 6 + y2 * (1.0 / 120 + y2 * (1.0 / 5040 + y2 * (1.0 / 362880 + y2 / 39916800))));
}

// Integrals over [0, l] of the basis products (c c, c s, s s) and of their
// derivatives (c'c', c's', s's').
struct BasisIntegrals {
  double cc, cs, ss, dcc, dcs, dss;
};

BasisIntegrals basis_integrals(double lambda, double l) {
  const Wave w = wave(lambda);
  const double k = w.k;
  switch (w.basis) {
    case Basis::Trig: {
      const double x = k * l;
      const double cc = l / 2 + std::sin(2 * x) / (4 * k);
      const double ss = y_minus_sin(2 * x) / (4 * k);
      const double cs = std::pow(std::sin(x), 2) / (2 * k);
      return {cc, cs, ss, k * k * ss, -k * k * cs, k * k * cc};
    }
    case Basis::Hyperbolic: {
      const double x = k * l;
      const double cc = (std::sinh(2 * x) + 2 * x) / (4 * k);
      const double ss = sinh_minus_y(2 * x) / (4 * k);
      const double cs = std::pow(std::sinh(x), 2) / (2 * k);
      return {cc, cs, ss, k * k * ss, k * k * cs, k * k * cc};
    }
    case Basis::Linear:
      return {l, l * l / 2, l * l * l / 3, 0.0, 0.0, l};
  }
  return {};
}

double total_length(const MetricGraph& g) {
  double s = 0.0;
  for (const Edge& e : g.edges()) s += e.length;
  return s;
}

// The vertex matrix is evaluated with every edge split at this ratio by a
// free degree-two vertex. Eigenvalues of symmetric graphs often coincide
// with Dirichlet eigenvalues of whole edges, where the matrix entries cancel
// catastrophically; the split pieces avoid those coincidences.
constexpr double kSplit = 0.6180339887498949;

template <class Fn>
void for_each_piece(const MetricGraph& g, Fn&& fn) {
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const Edge& ed = g.edge(e);
    fn(e, ed.tail, true, kSplit * ed.length);
    fn(e, ed.head, false, (1.0 - kSplit) * ed.length);
  }
}

std::size_t dirichlet_count_below(const MetricGraph& g, double k) {
  std::size_t n = 0;
  for_each_piece(g, [&](EdgeId, VertexId, bool, double l) {
    const double m = k * l / std::numbers::pi;
    if (m > 0) n += static_cast<std::size_t>(std::ceil(m)) - 1;
  });
  return n;
}

bool near_edge_dirichlet_root(const MetricGraph& g, double k) {
  bool near = false;
  for_each_piece(g, [&](EdgeId, VertexId, bool, double l) { near = near || std::abs(std::sin(k * l)) < 1e-13; });
  return near;
}

std::size_t negative_eigenvalues(const MetricGraph& g, const BoundaryConditions& bc, double k, bool& ok) {
  ok = true;
  std::vector<int> index(g.vertex_count(), -1);
  int free = 0;
  for (VertexId v = 0; v < g.vertex_count(); ++v)
    if (bc[v] == VertexCondition::Kirchhoff) index[v] = free++;
  const int first_mid = free;
  free += static_cast<int>(g.edge_count());
  std::vector<Eigen::Triplet<double>> entries;
  for_each_piece(g, [&](EdgeId e, VertexId end, bool, double l) {
    const double s = std::sin(k * l), c = std::cos(k * l);
    const int u = index[end], v = first_mid + static_cast<int>(e);
    if (u >= 0) {
      entries.emplace_back(u, u, k * c / s);
      entries.emplace_back(u, v, -k / s);
      entries.emplace_back(v, u, -k / s);
    }
    entries.emplace_back(v, v, k * c / s);
  });
  if (free <= 200) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(free, free);
    for (const auto& t : entries) m(t.row(), t.col()) += t.value();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
      ok = false;
      return 0;
    }
    return static_cast<std::size_t>((es.eigenvalues().array() < 0).count());
  }
  Eigen::SparseMatrix<double> m(free, free);
  m.setFromTriplets(entries.begin(), entries.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(m);
  if (ldlt.info() != Eigen::Success) {
    ok = false;
    return 0;
  }
  const Eigen::VectorXd d = ldlt.vectorD();
  if ((d.array() == 0).any() || !d.allFinite()) {
    ok = false;
    return 0;
  }
  return static_cast<std::size_t>((d.array() < 0).count());
}

Eigen::JacobiSVD<Eigen::MatrixXd> condition_svd(const MetricGraph& g, const BoundaryConditions& bc, double k) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(condition_matrix(g, bc, k), Eigen::ComputeFullV);
}

std::vector<std::vector<EdgeSolution>> modes_from_svd(const MetricGraph& g, const Eigen::JacobiSVD<Eigen::MatrixXd>& svd,
                                                      std::size_t nullity, double k) {
  const std::size_t cols = svd.matrixV().cols();
  const double lambda = k * k;
  std::vector<std::vector<EdgeSolution>> modes;
  for (std::size_t j = cols - nullity; j < cols; ++j) {
    std::vector<EdgeSolution> f(g.edge_count());
    for (EdgeId e = 0; e < g.edge_count(); ++e)
      f[e] = {svd.matrixV()(2 * e, j), svd.matrixV()(2 * e + 1, j), lambda, g.edge(e).length};
    // Gram-Schmidt in L^2.
    for (const auto& prev : modes) {
      double dot = 0.0;
      for (EdgeId e = 0; e < g.edge_count(); ++e) dot += edge_inner(f[e], prev[e]).l2;
      for (EdgeId e = 0; e < g.edge_count(); ++e) {
        f[e].a -= dot * prev[e].a;
        f[e].b -= dot * prev[e].b;
      }
    }
    double norm = 0.0;
    for (EdgeId e = 0; e < g.edge_count(); ++e) norm += edge_inner(f[e], f[e]).l2;
    norm = std::sqrt(norm);
    for (auto& piece : f) {
      piece.a /= norm;
      piece.b /= norm;
    }
    modes.push_back(std::move(f));
  }
  return modes;
}

}  // namespace

// --- edge solutions ----------------------------------------------------------

double EdgeSolution::value(double x) const {
  const Wave w = wave(lambda);
  switch (w.basis) {
    case Basis::Trig: return a * std::cos(w.k * x) + b * std::sin(w.k * x);
    case Basis::Hyperbolic: return a * std::cosh(w.k * x) + b * std::sinh(w.k * x);
    case Basis::Linear: return a + b * x;
  }
  return 0.0;
}

double EdgeSolution::derivative(double x) const {
  const Wave w = wave(lambda);
  switch (w.basis) {
    case Basis::Trig: return w.k * (-a * std::sin(w.k * x) + b * std::cos(w.k * x));
    case Basis::Hyperbolic: return w.k * (a * std::sinh(w.k * x) + b * std::cosh(w.k * x));
    case Basis::Linear: return b;
  }
  return 0.0;
}

EdgeSolution EdgeSolution::reversed() const {
  const Wave w = wave(lambda);
  const double x = w.k * length;
  EdgeSolution r = *this;
  switch (w.basis) {
    case Basis::Trig:
      r.a = a * std::cos(x) + b * std::sin(x);
      r.b = a * std::sin(x) - b * std::cos(x);
      break;
    case Basis::Hyperbolic:
      r.a = a * std::cosh(x) + b * std::sinh(x);
      r.b = -a * std::sinh(x) - b * std::cosh(x);
      break;
    case Basis::Linear:
      r.a = a + b * length;
      r.b = -b;
      break;
  }
  return r;
}

EdgeInner edge_inner(const EdgeSolution& f, const EdgeSolution& g) {
  if (f.lambda != g.lambda || f.length != g.length) {
    fail(ErrorKind::InvariantError, "edge solutions with different lambda or length");
  }
  const BasisIntegrals I = basis_integrals(f.lambda, f.length);
  const double cross = f.a * g.b + f.b * g.a;
  return {f.a * g.a * I.cc + cross * I.cs + f.b * g.b * I.ss, f.a * g.a * I.dcc + cross * I.dcs + f.b * g.b * I.dss};
}

// --- boundary conditions -------------------------------------------------------

BoundaryConditions kirchhoff_everywhere(const MetricGraph& g) {
  return BoundaryConditions(g.vertex_count(), VertexCondition::Kirchhoff);
}

BoundaryConditions dirichlet_on_boundary(const MetricGraph& g) {
  BoundaryConditions bc = kirchhoff_everywhere(g);
  for (VertexId v : g.boundary_vertices()) bc[v] = VertexCondition::Dirichlet;
  return bc;
}

BoundaryConditions dirichlet_on_leaves(const MetricGraph& g) {
  BoundaryConditions bc = kirchhoff_everywhere(g);
  for (VertexId v = 0; v < g.vertex_count(); ++v)
    if (g.degree(v) == 1) bc[v] = VertexCondition::Dirichlet;
  return bc;
}

// --- secular solver --------------------------------------------------------------

std::size_t counting_function(const MetricGraph& g, const BoundaryConditions& bc, double k) {
  if (bc.size() != g.vertex_count()) fail(ErrorKind::InvariantError, "one vertex condition per vertex required");
  if (!(k > 0)) return 0;
  double kk = k;
  for (int attempt = 0; attempt < 8; ++attempt) {
    if (!near_edge_dirichlet_root(g, kk)) {
      bool ok = true;
      const std::size_t neg = negative_eigenvalues(g, bc, kk, ok);
      if (ok) return dirichlet_count_below(g, kk) + neg;
    }
    kk = std::nextafter(kk, 0.0) * (1.0 - 1e-14);
  }
  fail(ErrorKind::SingularAssembly, "vertex matrix is singular near k = " + std::to_string(k));
}

Eigen::MatrixXd condition_matrix(const MetricGraph& g, const BoundaryConditions& bc, double k) {
  if (bc.size() != g.vertex_count()) fail(ErrorKind::InvariantError, "one vertex condition per vertex required");
  const std::size_t n = 2 * g.edge_count();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  // Row entries of the trace f_e(v) and of the inward derivative d_e f(v) / k.
  auto trace = [&](EdgeId e, VertexId v, Eigen::Index row, double sign) {
    const Edge& ed = g.edge(e);
    if (ed.tail == v) {
      A(row, 2 * e) += sign;
    } else if (k > 0) {
      A(row, 2 * e) += sign * std::cos(k * ed.length);
      A(row, 2 * e + 1) += sign * std::sin(k * ed.length);
    } else {
      A(row, 2 * e) += sign;
      A(row, 2 * e + 1) += sign * ed.length;
    }
  };
  auto flux = [&](EdgeId e, VertexId v, Eigen::Index row) {
    const Edge& ed = g.edge(e);
    if (ed.tail == v) {
      A(row, 2 * e + 1) += 1.0;
    } else if (k > 0) {
      A(row, 2 * e) += std::sin(k * ed.length);
      A(row, 2 * e + 1) -= std::cos(k * ed.length);
    } else {
      A(row, 2 * e + 1) -= 1.0;
    }
  };
  Eigen::Index row = 0;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    const auto inc = g.incident(v);
    if (bc[v] == VertexCondition::Dirichlet) {
      for (EdgeId e : inc) trace(e, v, row++, 1.0);
      continue;
    }
    for (std::size_t i = 1; i < inc.size(); ++i) {
      trace(inc[0], v, row, 1.0);
      trace(inc[i], v, row, -1.0);
      ++row;
    }
    for (EdgeId e : inc) flux(e, v, row);
    ++row;
  }
  return A;
}

std::vector<Eigenvalue> secular_eigenvalues(const MetricGraph& g, const BoundaryConditions& bc, double k_max,
                                            const SpectrumOptions& options) {
  if (!(k_max > 0)) fail(ErrorKind::OutOfDomain, "k_max must be positive");
  if (bc.size() != g.vertex_count()) fail(ErrorKind::InvariantError, "one vertex condition per vertex required");
  const double L = total_length(g);
  const double cell = std::numbers::pi / (4 * L);
  // Below pi / (2 L) the only possible eigenvalue is 0.
  const double eps = cell / 2;
  const double top = k_max + options.tolerance;

  std::vector<double> grid = {eps};
  while (grid.back() < top) grid.push_back(std::min(top, grid.back() + cell));
  std::vector<std::size_t> counts(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) { counts[i] = counting_function(g, bc, grid[i]); });

  struct Root {
    double k;
    std::size_t multiplicity;
  };
  std::vector<std::vector<Root>> per_cell(grid.size());
  parallel_for(grid.size() - 1, [&](std::size_t i) {
    if (counts[i + 1] == counts[i]) return;
    auto find = [&](auto&& self, double a, double b, std::size_t na, std::size_t nb) -> void {
      while (b - a > options.tolerance) {
        const double m = 0.5 * (a + b);
        const std::size_t nm = counting_function(g, bc, m);
        if (nm == na) {
          a = m;
        } else if (nm == nb) {
          b = m;
        } else {
          self(self, a, m, na, nm);
          self(self, m, b, nm, nb);
          return;
        }
      }
      per_cell[i].push_back({0.5 * (a + b), nb - na});
    };
    find(find, grid[i], grid[i + 1], counts[i], counts[i + 1]);
  });

  std::vector<Eigenvalue> out;
  if (counts[0] > 0) out.push_back({0.0, 0.0, counts[0], {}});
  // Rounding splits a multiple eigenvalue into a cluster of simple ones.
  const double cluster = 1e3 * options.tolerance;
  for (const auto& roots : per_cell)
    for (const Root& r : roots) {
      if (!out.empty() && out.back().k > 0 && r.k - out.back().k <= cluster * std::max(1.0, r.k)) {
        Eigenvalue& last = out.back();
        const std::size_t m = last.multiplicity + r.multiplicity;
        last.k = (last.k * last.multiplicity + r.k * r.multiplicity) / m;
        last.lambda = last.k * last.k;
        last.multiplicity = m;
        continue;
      }
      out.push_back({r.k, r.k * r.k, r.multiplicity, {}});
    }

  const bool check = g.edge_count() <= options.svd_edge_limit;
  if (check || options.with_modes) {
    parallel_for(out.size(), [&](std::size_t i) {
      Eigenvalue& ev = out[i];
      const auto svd = condition_svd(g, bc, ev.k);
      const auto& s = svd.singularValues();
      const double threshold = options.svd_threshold * std::max(1.0, s(0));
      const std::size_t nullity = static_cast<std::size_t>((s.array() < threshold).count());
      if (nullity == 0) {
        fail(ErrorKind::SingularAssembly, "no kernel of the vertex conditions at k = " + std::to_string(ev.k));
      }
      if (nullity != ev.multiplicity) {
        fail(ErrorKind::RootScanTooCoarse, "eigenvalue count and kernel dimension disagree at k = " +
                                               std::to_string(ev.k) + "; roots closer than the scan resolves");
      }
      if (options.with_modes) ev.modes = modes_from_svd(g, svd, nullity, ev.k);
    });
  }
  return out;
}

std::vector<double> eigenvalue_list(const std::vector<Eigenvalue>& spectrum) {
  std::vector<double> out;
  for (const auto& ev : spectrum) out.insert(out.end(), ev.multiplicity, ev.lambda);
  return out;
}

SpectrumPair dirichlet_vs_neumann(const MetricGraph& g, double k_max, const SpectrumOptions& options) {
  if (g.boundary_vertices().empty()) fail(ErrorKind::InvariantError, "graph has no boundary marks");
  return {eigenvalue_list(secular_eigenvalues(g, kirchhoff_everywhere(g), k_max, options)),
          eigenvalue_list(secular_eigenvalues(g, dirichlet_on_boundary(g), k_max, options))};
}

std::string spectrum_csv(const std::vector<Eigenvalue>& spectrum) {
  std::ostringstream out;
  out.precision(12);
  out << "index,k,lambda,multiplicity\n";
  std::size_t index = 1;
  for (const auto& ev : spectrum) {
    out << index << ',' << ev.k << ',' << ev.lambda << ',' << ev.multiplicity << '\n';
    index += ev.multiplicity;
  }
  return out.str();
}

double SobolevNorms::ratio() const {
  if (f2 == 0.0 && grad2 == 0.0 && hf2 == 0.0) fail(ErrorKind::ZeroFunction, "all norms vanish");
  if (grad2 == 0.0) return 0.0;
  return grad2 / (f2 + hf2);
}

SobolevNorms sobolev_norms(const MetricGraph& g, std::span<const EdgeSolution> f) {
  if (f.size() != g.edge_count()) fail(ErrorKind::InvariantError, "one edge solution per edge required");
  SobolevNorms n;
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    if (std::abs(f[e].length - g.edge(e).length) > 1e-12 * g.edge(e).length) {
      fail(ErrorKind::InvariantError, "edge solution length differs from the edge");
    }
    const EdgeInner in = edge_inner(f[e], f[e]);
    n.f2 += in.l2;
    n.grad2 += in.grad;
    n.hf2 += f[e].lambda * f[e].lambda * in.l2;
  }
  return n;
}

double sobolev_ratio(const MetricGraph& g, std::span<const EdgeSolution> f) { return sobolev_norms(g, f).ratio(); }

// --- layered problems ---------------------------------------------------------------

Eigen::Matrix2d layer_transfer(double length, double lambda) {
  const Wave w = wave(lambda);
  const double x = w.k * length;
  Eigen::Matrix2d T;
  switch (w.basis) {
    case Basis::Trig:
      T << std::cos(x), std::sin(x) / w.k, -w.k * std::sin(x), std::cos(x);
      break;
    case Basis::Hyperbolic:
      T << std::cosh(x), std::sinh(x) / w.k, w.k * std::sinh(x), std::cosh(x);
      break;
    case Basis::Linear:
      T << 1.0, length, 0.0, 1.0;
      break;
  }
  return T;
}

LayeredSolution LayeredSolution::shoot(std::vector<Layer> layers, double lambda, double f0, double df0) {
  if (layers.empty()) fail(ErrorKind::InvariantError, "no layers to shoot through");
  LayeredSolution s;
  s.layers_ = std::move(layers);
  s.lambda_ = lambda;
  const Wave w = wave(lambda);
  Eigen::Vector2d state(f0, df0);
  double x = 0.0;
  for (std::size_t i = 0; i < s.layers_.size(); ++i) {
    const Layer& L = s.layers_[i];
    if (!(L.length > 0) || !(L.weight > 0)) fail(ErrorKind::NonPositiveLength, "layers need positive length and weight");
    const double b = w.basis == Basis::Linear ? state(1) : state(1) / w.k;
    s.pieces_.push_back({state(0), b, lambda, L.length});
    s.starts_.push_back(x);
    x += L.length;
    state = layer_transfer(L.length, lambda) * state;
    if (i + 1 < s.layers_.size()) state(1) *= L.weight / s.layers_[i + 1].weight;
    if (!state.allFinite()) fail(ErrorKind::ShootingFailure, "solution overflows while shooting");
  }
  s.starts_.push_back(x);
  return s;
}

double LayeredSolution::operator()(double x) const {
  if (x < 0 || x > extent()) fail(ErrorKind::OutOfDomain, "point outside the layered domain");
  auto it = std::upper_bound(starts_.begin(), starts_.end() - 1, x);
  const std::size_t i = std::max<std::ptrdiff_t>(0, (it - starts_.begin()) - 1);
  return pieces_[i].value(x - starts_[i]);
}

double LayeredSolution::derivative(double x) const {
  if (x < 0 || x > extent()) fail(ErrorKind::OutOfDomain, "point outside the layered domain");
  auto it = std::upper_bound(starts_.begin(), starts_.end() - 1, x);
  const std::size_t i = std::max<std::ptrdiff_t>(0, (it - starts_.begin()) - 1);
  return pieces_[i].derivative(x - starts_[i]);
}

EdgeInner LayeredSolution::layer_inner(std::size_t i) const {
  const EdgeInner in = edge_inner(pieces_.at(i), pieces_.at(i));
  return {layers_[i].weight * in.l2, layers_[i].weight * in.grad};
}

double LayeredSolution::layer_energy(std::size_t i) const {
  const EdgeInner in = layer_inner(i);
  return in.l2 + in.grad;
}

EdgeInner LayeredSolution::inner(const LayeredSolution& other) const {
  if (other.pieces_.size() != pieces_.size()) fail(ErrorKind::InvariantError, "layer structures differ");
  EdgeInner sum;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const EdgeInner in = edge_inner(pieces_[i], other.pieces_[i]);
    sum.l2 += layers_[i].weight * in.l2;
    sum.grad += layers_[i].weight * in.grad;
  }
  return sum;
}

LayeredSolution LayeredSolution::combined(double self, const LayeredSolution& other, double factor) const {
  if (other.pieces_.size() != pieces_.size()) fail(ErrorKind::InvariantError, "layer structures differ");
  LayeredSolution r = *this;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    r.pieces_[i].a = self * pieces_[i].a + factor * other.pieces_[i].a;
    r.pieces_[i].b = self * pieces_[i].b + factor * other.pieces_[i].b;
  }
  return r;
}

LayeredSolution LayeredSolution::scaled(double factor) const {
  return combined(factor, *this, 0.0);
}

double LayeredSolution::sup_on_grid(std::size_t per_layer) const {
  double m = 0.0;
  for (const EdgeSolution& p : pieces_)
    for (std::size_t j = 0; j <= per_layer; ++j)
      m = std::max(m, std::abs(p.value(p.length * static_cast<double>(j) / static_cast<double>(per_layer))));
  return m;
}

EdgeInner BranchedSolution::inner(const BranchedSolution& other) const {
  if (other.branches.size() != branches.size()) fail(ErrorKind::InvariantError, "branch structures differ");
  EdgeInner sum;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const EdgeInner in = branches[i].inner(other.branches[i]);
    sum.l2 += in.l2;
    sum.grad += in.grad;
  }
  return sum;
}

SobolevNorms BranchedSolution::norms() const {
  const EdgeInner in = inner(*this);
  const double lambda = branches.empty() ? 0.0 : branches.front().lambda();
  return {in.l2, in.grad, lambda * lambda * in.l2};
}

double BranchedSolution::sup_on_grid(std::size_t per_layer) const {
  double m = 0.0;
  for (const auto& b : branches) m = std::max(m, b.sup_on_grid(per_layer));
  return m;
}

BranchedSolution BranchedSolution::scaled(double factor) const {
  BranchedSolution r;
  for (const auto& b : branches) r.branches.push_back(b.scaled(factor));
  return r;
}

// --- deficiency elements and witnesses ---------------------------------------------------

namespace {

constexpr std::size_t kMaxLayers = 4096;

/// Layers k = first, first + 1, ... until the remaining volume and length are
/// negligible or `cap` layers are taken.
std::vector<Layer> build_layers(const TermSequence& ell, const TermSequence& weight, std::size_t first,
                                double length_scale = 1.0, std::size_t cap = kMaxLayers) {
  std::vector<Layer> layers;
  const double w0 = weight.eval_double(first);
  double volume = 0.0, length = 0.0;
  for (std::size_t k = first; layers.size() < cap; ++k) {
    const double l = ell.eval_double(k) * length_scale;
    const double w = weight.eval_double(k) / w0;
    layers.push_back({l, w});
    volume += l * w;
    length += l;
    if (layers.size() >= 8 && l * w <= 1e-17 * volume && l <= 1e-17 * length) break;
  }
  return layers;
}

TermSequence ones() { return TermSequence::geometric(1, 1); }

/// Layer energies decay geometrically over the middle of the horizon.
bool energy_tail_converges(const LayeredSolution& s) {
  const std::size_t n = s.layers().size();
  if (n < 8) return true;
  const std::size_t lo = n / 4, hi = n / 2;
  const double e_lo = s.layer_energy(lo), e_hi = s.layer_energy(hi);
  if (e_lo == 0.0) return e_hi == 0.0;
  return std::pow(e_hi / e_lo, 1.0 / static_cast<double>(hi - lo)) <= 0.999;
}

BranchedSolution normalised_h1(BranchedSolution s) {
  const EdgeInner in = s.inner(s);
  const double n = std::sqrt(in.l2 + in.grad);
  if (!(n > 0) || !std::isfinite(n)) fail(ErrorKind::ShootingFailure, "solution has no finite nonzero H1 norm");
  return s.scaled(1.0 / n);
}

struct Branch {
  std::vector<Layer> layers;
  double amplitude = 1.0;
};

std::vector<Branch> tree_branches(const TermSequence& layer_edges, const TermSequence& ell, std::size_t level,
                                  double scale) {
  const double vertices = level == 0 ? 1.0 : layer_edges.eval_double(level - 1);
  const double children = layer_edges.eval_double(level) / vertices;
  if (children < 2.0 - 1e-9) {
    fail(ErrorKind::NoQualifyingSequence, "the boundary vertex of G_n has a single child");
  }
  const auto layers = build_layers(ell, layer_edges, level, scale);
  return {{layers, 1.0}, {layers, -1.0}};
}

std::vector<Branch> template_branches(const GraphFamilySpec& spec, double scale) {
  if (const auto* t = spec.get_if<RadialTreeSpec>()) {
    return tree_branches(branching_products(t->b), TermSequence::from_spec(t->ell), 0, scale);
  }
  if (const auto* s = spec.get_if<SphereSymmetricSpec>()) {
    const TermSequence ell = TermSequence::from_spec(s->ell);
    if (s->ends == DeclaredEnds::Cantor) return tree_branches(sphere_layer_edges(*s), ell, 0, scale);
    if (s->ends == DeclaredEnds::Two) {
      const auto layers = build_layers(ell, sphere_layer_edges(*s), 0, scale);
      return {{layers, 1.0}, {layers, -1.0}};
    }
  }
  if (const auto* f = spec.get_if<FullLinePathSpec>()) {
    return {{build_layers(TermSequence::from_spec(f->ell_pos), ones(), 0, scale), 1.0},
            {build_layers(TermSequence::from_spec(f->ell_neg), ones(), 0, scale), -1.0}};
  }
  fail(ErrorKind::NoQualifyingSequence, "attachment has no pair of branches at its root");
}

std::vector<Branch> level_branches(const GraphFamilySpec& spec, std::size_t level) {
  if (const auto* t = spec.get_if<RadialTreeSpec>()) {
    return tree_branches(branching_products(t->b), TermSequence::from_spec(t->ell), level, 1.0);
  }
  if (const auto* s = spec.get_if<SphereSymmetricSpec>(); s && s->ends == DeclaredEnds::Cantor) {
    return tree_branches(sphere_layer_edges(*s), TermSequence::from_spec(s->ell), level, 1.0);
  }
  if (const auto* c = spec.get_if<ChainWithAttachmentsSpec>()) {
    return template_branches(*c->attachment, seq_eval(c->scaling, level).value());
  }
  fail(ErrorKind::NoQualifyingSequence, "no shrinking subgraphs with a branch pair");
}

}  // namespace

DeficiencyElement deficiency_element(const GraphFamilySpec& spec, double lambda, std::optional<std::size_t> channel) {
  if (lambda > 0) fail(ErrorKind::OutOfDomain, "deficiency elements need lambda <= 0");
  std::vector<Layer> layers;
  double start = 0.0;
  if (const auto* h = spec.get_if<HalfLinePathSpec>()) {
    if (channel) fail(ErrorKind::InvariantError, "a path has only the symmetric channel");
    if (count_finite_volume(spec).is_zero()) fail(ErrorKind::NoFiniteVolumeEnd, "the path has infinite volume");
    layers = build_layers(TermSequence::from_spec(h->ell), ones(), 0);
  } else if (const auto* t = spec.get_if<RadialTreeSpec>()) {
    if (count_finite_volume(spec).is_zero()) fail(ErrorKind::NoFiniteVolumeEnd, "the tree has no finite-volume end");
    const std::size_t first = channel.value_or(0);
    const TermSequence ell = TermSequence::from_spec(t->ell);
    layers = build_layers(ell, branching_products(t->b), first);
    for (std::size_t k = 0; k < first; ++k) start += ell.eval_double(k);
  } else {
    fail(ErrorKind::UnsupportedFamily, "deficiency elements are built for RadialTree and HalfLinePath");
  }
  const bool dirichlet = channel.has_value();
  const LayeredSolution raw = LayeredSolution::shoot(std::move(layers), lambda, dirichlet ? 0.0 : 1.0, dirichlet ? 1.0 : 0.0);
  if (!energy_tail_converges(raw)) fail(ErrorKind::ShootingFailure, "layer energies of the solution do not decay");
  DeficiencyElement d;
  d.solution = normalised_h1(BranchedSolution{{raw}});
  d.start = start;
  const EdgeInner in = d.solution.inner(d.solution);
  d.h1_norm2 = in.l2 + in.grad;
  const LayeredSolution profile = d.solution.branches.front();
  d.handle = {[profile, start](double x) { return profile(std::min(x - start, profile.extent())); }, std::nullopt,
              dirichlet ? "deficiency element, channel " + std::to_string(*channel) : "deficiency element"};
  return d;
}

DeficiencyCount deficiency_dimension(const GraphFamilySpec& spec, double lambda) {
  if (!(lambda < 0)) fail(ErrorKind::OutOfDomain, "deficiency dimension needs lambda < 0");
  constexpr std::size_t horizon = 64;
  // Branches in outward coordinates and the basis of solutions satisfying the
  // conditions at the origin, given by (f, f') per branch.
  std::vector<std::vector<Layer>> sides;
  std::vector<std::vector<Eigen::Vector2d>> basis;
  if (const auto* h = spec.get_if<HalfLinePathSpec>()) {
    sides.push_back(build_layers(TermSequence::from_spec(h->ell), ones(), 0, 1.0, horizon));
    basis.push_back({{1.0, 0.0}});
  } else if (const auto* f = spec.get_if<FullLinePathSpec>()) {
    sides.push_back(build_layers(TermSequence::from_spec(f->ell_pos), ones(), 0, 1.0, horizon));
    sides.push_back(build_layers(TermSequence::from_spec(f->ell_neg), ones(), 0, 1.0, horizon));
    basis.push_back({{1.0, 0.0}, {1.0, 0.0}});
    basis.push_back({{0.0, 1.0}, {0.0, -1.0}});
  } else {
    fail(ErrorKind::UnsupportedFamily, "deficiency dimension is computed for HalfLinePath and FullLinePath");
  }
  const std::size_t d = basis.size();
  std::vector<BranchedSolution> solutions(d);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t s = 0; s < sides.size(); ++s)
      solutions[j].branches.push_back(LayeredSolution::shoot(sides[s], lambda, basis[j][s](0), basis[j][s](1)));

  // Subspace of coefficient vectors with convergent energy on every side.
  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(d, d);
  for (std::size_t s = 0; s < sides.size() && V.cols() > 0; ++s) {
    bool all = true;
    for (std::size_t j = 0; j < d; ++j) all = all && energy_tail_converges(solutions[j].branches[s]);
    if (all) continue;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
    if (d == 2) {
      c << solutions[1].branches[s].end_value(), -solutions[0].branches[s].end_value();
      c.normalize();
      const LayeredSolution mix = solutions[0].branches[s].combined(c(0), solutions[1].branches[s], c(1));
      if (!energy_tail_converges(mix)) c.setZero();
    }
    if (c.isZero()) {
      V.resize(d, 0);
      break;
    }
    // Intersect span(V) with span(c).
    const Eigen::VectorXd residual = c - V * (V.transpose() * c);
    if (residual.norm() > 1e-8) {
      V.resize(d, 0);
      break;
    }
    V = c;
  }

  DeficiencyCount out;
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    BranchedSolution e;
    for (std::size_t s = 0; s < sides.size(); ++s) {
      LayeredSolution b = solutions[0].branches[s].scaled(V(0, j));
      for (std::size_t i = 1; i < d; ++i) b = b.combined(1.0, solutions[i].branches[s], V(i, j));
      e.branches.push_back(std::move(b));
    }
    out.elements.push_back(normalised_h1(std::move(e)));
  }
  const std::size_t m = out.elements.size();
  if (m > 0) {
    Eigen::MatrixXd G(m, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const EdgeInner in = out.elements[i].inner(out.elements[j]);
        G(i, j) = in.l2 + in.grad;
      }
    const Eigen::VectorXd dg = G.diagonal().cwiseSqrt().cwiseInverse();
    G = dg.asDiagonal() * G * dg.asDiagonal();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      out.gram_eigenvalues.push_back(es.eigenvalues()(i));
      if (es.eigenvalues()(i) > 1e-6) ++out.found;
    }
  }
  return out;
}

BranchedSolution witness_function(const GraphFamilySpec& spec, double lambda, std::size_t level) {
  if (!(lambda < 0)) fail(ErrorKind::OutOfDomain, "the witness needs lambda < 0");
  const std::vector<Branch> branches = level_branches(spec, level);
  // Inward derivatives balance at the shared boundary vertex.
  const double w0 = branches[0].layers.front().weight, w1 = branches[1].layers.front().weight;
  BranchedSolution s;
  s.branches.push_back(LayeredSolution::shoot(branches[0].layers, lambda, 0.0, w1));
  s.branches.push_back(LayeredSolution::shoot(branches[1].layers, lambda, 0.0, -w0));
  return s;
}

WitnessReport witness_nonclosed(const GraphFamilySpec& spec, double lambda, std::size_t n_max) {
  if (!(lambda < 0)) fail(ErrorKind::OutOfDomain, "the witness needs lambda < 0");
  if (n_max < 1) fail(ErrorKind::InvariantError, "at least one level is required");
  SubgraphSequenceReport seq;
  try {
    seq = subgraph_sequence(spec, n_max);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::UnsupportedFamily) throw;
    fail(ErrorKind::NoQualifyingSequence, e.what());
  }
  if (!seq.qualifies()) {
    fail(ErrorKind::NoQualifyingSequence, "the subgraphs (" + seq.description + ") do not shrink past their boundary");
  }
  WitnessReport report;
  report.subgraphs = seq.description;
  report.rows.resize(n_max);
  parallel_for(n_max, [&](std::size_t i) {
    const std::size_t n = i + 1;
    const BranchedSolution raw = witness_function(spec, lambda, n);
    WitnessRow& row = report.rows[i];
    row.level = n;
    row.lambda = lambda;
    row.sup_norm = raw.sup_on_grid(64);
    if (!(row.sup_norm > 0) || !std::isfinite(row.sup_norm)) fail(ErrorKind::ShootingFailure, "witness vanishes");
    const BranchedSolution f = raw.scaled(1.0 / row.sup_norm);
    double boundary = 0.0;
    for (const auto& b : f.branches) boundary = std::max(boundary, std::abs(b(0.0)));
    if (boundary > 1e-12) fail(ErrorKind::ShootingFailure, "witness does not vanish on the boundary");
    const SobolevNorms nm = f.norms();
    row.f2 = nm.f2;
    row.grad2 = nm.grad2;
    row.hf2 = nm.hf2;
    row.ratio = nm.ratio();
    row.boundary_value = boundary;
  });
  for (std::size_t i = 1; i < report.rows.size(); ++i) report.rows[i].growth = report.rows[i].ratio / report.rows[i - 1].ratio;
  return report;
}

std::string witness_csv(const WitnessReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "level,lambda,sup_norm,f2,grad2,hf2,ratio,growth,boundary_value\n";
  for (const auto& r : report.rows) {
    out << r.level << ',' << r.lambda << ',' << r.sup_norm << ',' << r.f2 << ',' << r.grad2 << ',' << r.hf2 << ','
        << r.ratio << ',' << r.growth << ',' << r.boundary_value << '\n';
  }
  return out.str();
}

}  // namespace qgends
