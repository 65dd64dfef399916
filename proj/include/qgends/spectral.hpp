#pragma once

#include "qgends/graphspec.hpp"
#include "qgends/metric_graph.hpp"
#include "qgends/radial_sl.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qgends {

/// f(x) = a c(x) + b s(x) on [0, length] with -f'' = lambda f, where (c, s) is
/// (cos kx, sin kx) for lambda = k^2 > 0, (cosh kx, sinh kx) for
/// lambda = -k^2 < 0 and (1, x) for lambda = 0.
struct EdgeSolution {
  double a = 0.0;
  double b = 0.0;
  double lambda = 0.0;
  double length = 1.0;

  double value(double x) const;
  double derivative(double x) const;
  /// Trace at the tail (x = 0) and at the head (x = length).
  double tail_value() const { return value(0.0); }
  double head_value() const { return value(length); }
  /// Derivative pointing into the edge at the tail and at the head.
  double tail_normal_derivative() const { return derivative(0.0); }
  double head_normal_derivative() const { return -derivative(length); }
  /// The same function in the flipped coordinate y = length - x.
  EdgeSolution reversed() const;
};

struct EdgeInner {
  double l2 = 0.0;    ///< integral of f g
  double grad = 0.0;  ///< integral of f' g'
};

/// Closed-form integrals; both solutions must share lambda and length.
EdgeInner edge_inner(const EdgeSolution& f, const EdgeSolution& g);

enum class VertexCondition { Kirchhoff, Dirichlet };
using BoundaryConditions = std::vector<VertexCondition>;

BoundaryConditions kirchhoff_everywhere(const MetricGraph& g);
/// Dirichlet at the boundary marks, Kirchhoff elsewhere.
BoundaryConditions dirichlet_on_boundary(const MetricGraph& g);
/// Dirichlet at vertices of degree one, Kirchhoff elsewhere.
BoundaryConditions dirichlet_on_leaves(const MetricGraph& g);

struct SpectrumOptions {
  /// Bisection width in k.
  double tolerance = 1e-12;
  /// Singular values below this fraction of the largest count as zero.
  double svd_threshold = 1e-8;
  /// Above this many edges the SVD multiplicity check is skipped.
  std::size_t svd_edge_limit = 300;
  bool with_modes = false;
};

struct Eigenvalue {
  double k = 0.0;
  double lambda = 0.0;
  std::size_t multiplicity = 0;
  /// Orthonormal (in L^2) basis of the eigenspace, one EdgeSolution per
  /// edge, filled when requested.
  std::vector<std::vector<EdgeSolution>> modes;
};

/// Number of eigenvalues strictly below k^2, counted with multiplicity.
std::size_t counting_function(const MetricGraph& g, const BoundaryConditions& bc, double k);
/// Vertex conditions applied to the edge coefficients (a_e, b_e).
Eigen::MatrixXd condition_matrix(const MetricGraph& g, const BoundaryConditions& bc, double k);
/// All eigenvalues with 0 <= k <= k_max.
std::vector<Eigenvalue> secular_eigenvalues(const MetricGraph& g, const BoundaryConditions& bc, double k_max,
                                            const SpectrumOptions& options = {});
/// Eigenvalues repeated by multiplicity.
std::vector<double> eigenvalue_list(const std::vector<Eigenvalue>& spectrum);

struct SpectrumPair {
  std::vector<double> neumann;
  std::vector<double> dirichlet;
};

/// Kirchhoff versus Dirichlet at the boundary marks, paired by index.
SpectrumPair dirichlet_vs_neumann(const MetricGraph& g, double k_max, const SpectrumOptions& options = {});

std::string spectrum_csv(const std::vector<Eigenvalue>& spectrum);

struct SobolevNorms {
  double f2 = 0.0;
  double grad2 = 0.0;
  double hf2 = 0.0;
  double ratio() const;
};

SobolevNorms sobolev_norms(const MetricGraph& g, std::span<const EdgeSolution> f);
/// |grad f|^2 / (|f|^2 + |Hf|^2). ZeroFunction when every norm vanishes.
double sobolev_ratio(const MetricGraph& g, std::span<const EdgeSolution> f);

// --- layered radial problems ---------------------------------------------

/// `weight` parallel edges of length `length`.
struct Layer {
  double length = 1.0;
  double weight = 1.0;
};

/// Solution of -(w f')' = lambda w f across consecutive layers with f and
/// w f' continuous at every interface.
class LayeredSolution {
 public:
  static LayeredSolution shoot(std::vector<Layer> layers, double lambda, double f0, double df0);

  std::span<const Layer> layers() const noexcept { return layers_; }
  std::span<const EdgeSolution> pieces() const noexcept { return pieces_; }
  double start(std::size_t i) const { return starts_.at(i); }
  double extent() const { return starts_.back(); }
  double lambda() const noexcept { return lambda_; }

  double operator()(double x) const;
  double derivative(double x) const;
  double end_value() const { return pieces_.back().head_value(); }

  /// Weighted integrals over layer i.
  EdgeInner layer_inner(std::size_t i) const;
  double layer_energy(std::size_t i) const;
  EdgeInner inner(const LayeredSolution& other) const;

  LayeredSolution combined(double self, const LayeredSolution& other, double factor) const;
  LayeredSolution scaled(double factor) const;
  /// max |f| on a grid of `per_layer` cells per layer.
  double sup_on_grid(std::size_t per_layer = 64) const;

 private:
  std::vector<Layer> layers_;
  std::vector<EdgeSolution> pieces_;
  std::vector<double> starts_;
  double lambda_ = 0.0;
};

/// Transfer matrix of one layer acting on (f, f').
Eigen::Matrix2d layer_transfer(double length, double lambda);

/// Branches glued at a common origin, each in its outward coordinate.
struct BranchedSolution {
  std::vector<LayeredSolution> branches;

  EdgeInner inner(const BranchedSolution& other) const;
  SobolevNorms norms() const;
  double sup_on_grid(std::size_t per_layer = 64) const;
  BranchedSolution scaled(double factor) const;
};

struct DeficiencyElement {
  BranchedSolution solution;
  /// Radial profile on [start, start + extent).
  RadialFunction handle;
  double start = 0.0;
  double h1_norm2 = 0.0;
};

/// H^1-normalised solution of (tau - lambda) f = 0 on a RadialTree (radial
/// channel: nullopt for the symmetric one, n for Dirichlet at t_n) or a
/// HalfLinePath. NoFiniteVolumeEnd when there is no finite-volume end.
DeficiencyElement deficiency_element(const GraphFamilySpec& spec, double lambda,
                                     std::optional<std::size_t> channel = std::nullopt);

struct DeficiencyCount {
  std::size_t found = 0;
  std::vector<BranchedSolution> elements;
  /// Eigenvalues of the normalised H^1 Gram matrix, ascending.
  std::vector<double> gram_eigenvalues;
};

/// Independent H^1 solutions of (H - lambda) f = 0 on a HalfLinePath or
/// FullLinePath, found by shooting without using the end census.
DeficiencyCount deficiency_dimension(const GraphFamilySpec& spec, double lambda);

struct WitnessRow {
  std::size_t level = 0;
  double lambda = 0.0;
  /// sup |f_n| before normalisation.
  double sup_norm = 0.0;
  double f2 = 0.0;
  double grad2 = 0.0;
  double hf2 = 0.0;
  double ratio = 0.0;
  /// r_n / r_{n-1}; 0 for the first row.
  double growth = 0.0;
  double boundary_value = 0.0;
};

struct WitnessReport {
  std::string subgraphs;
  std::vector<WitnessRow> rows;
};

/// Antisymmetric pair of branches at the boundary vertex of G_n (levels 1..n_max).
BranchedSolution witness_function(const GraphFamilySpec& spec, double lambda, std::size_t level);
WitnessReport witness_nonclosed(const GraphFamilySpec& spec, double lambda, std::size_t n_max);
std::string witness_csv(const WitnessReport& report);

}  // namespace qgends
