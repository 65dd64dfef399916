#pragma once

#include "qgends/extended_count.hpp"
#include "qgends/graphspec.hpp"
#include "qgends/sequence.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qgends {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;

/// Oriented edge: the local coordinate runs from `tail` (x = 0) to `head`
/// (x = length).
struct Edge {
  VertexId tail = 0;
  VertexId head = 0;
  double length = 1.0;
};

struct VertexInfo {
  std::uint32_t depth = 0;  ///< combinatorial distance from the root
  bool boundary = false;    ///< truncation cut: fewer edges than in the family
  /// Star weight m(v) in the full family when it is derivable from the spec.
  std::optional<double> family_star_weight;
};

struct Provenance {
  std::string spec_name;
  std::string variant;
  unsigned depth = 0;
};

/// Finite, simple, connected metric graph. Immutable after construction.
class MetricGraph {
 public:
  MetricGraph() = default;
  /// Validates simplicity, connectivity and edge lengths in (0, inf).
  MetricGraph(std::vector<VertexInfo> vertices, std::vector<Edge> edges, Provenance provenance = {});

  std::size_t vertex_count() const noexcept { return vertices_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::span<const Edge> edges() const noexcept { return edges_; }
  std::span<const VertexInfo> vertices() const noexcept { return vertices_; }
  const Edge& edge(EdgeId e) const { return edges_.at(e); }
  const VertexInfo& vertex(VertexId v) const;
  std::span<const EdgeId> incident(VertexId v) const;
  std::size_t degree(VertexId v) const { return incident(v).size(); }
  bool is_boundary(VertexId v) const { return vertex(v).boundary; }
  std::vector<VertexId> boundary_vertices() const;
  const Provenance& provenance() const noexcept { return provenance_; }

  double volume() const;
  double min_edge_length() const;

  MetricGraph scaled(double factor) const;
  /// Every edge orientation flipped.
  MetricGraph reversed() const;

 private:
  std::vector<VertexInfo> vertices_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<EdgeId> incidence_;
  Provenance provenance_;
};

struct TruncationOptions {
  std::size_t vertex_cap = 1'000'000;
};

/// Subgraph spanned by the vertices within combinatorial distance `depth`
/// of the root (origin). Cut vertices are flagged as boundary.
MetricGraph truncate(const GraphFamilySpec& spec, unsigned depth, TruncationOptions options = {});

/// Total length of the family.
SeriesSum volume_family(const GraphFamilySpec& spec);

struct StarWeight {
  double value = 0.0;
  /// True when only the truncation value is known (it underestimates m(v)).
  bool lower_bound = false;
};

StarWeight star_weight(const MetricGraph& g, VertexId v);
double path_metric(const MetricGraph& g, VertexId u, VertexId v);
double star_path_metric(const MetricGraph& g, VertexId u, VertexId v);
/// All distances from `source`.
std::vector<double> path_distances(const MetricGraph& g, VertexId source);
/// sup over all pairs of points (not only vertices) of the path metric.
double metric_diameter(const MetricGraph& g);

nlohmann::json graph_to_json(const MetricGraph& g);
std::string graph_to_edge_csv(const MetricGraph& g);

// --- closed forms shared by the family analyses -----------------------------

/// mu_n = b_0 * ... * b_n
TermSequence branching_products(const SequenceSpec& b);
/// Number of edges between S_n and S_{n+1} in a sphere-symmetric model.
TermSequence sphere_layer_edges(const SphereSymmetricSpec& s);
/// Star weight of the root of a family (used when grafting attachments).
double root_star_weight(const GraphFamilySpec& spec);
/// sup of the path metric over the whole family; +inf when unbounded.
double family_diameter(const GraphFamilySpec& spec);

struct SubgraphLevel {
  std::size_t index = 0;
  SeriesSum volume = SeriesSum::divergent();
  double diameter = 0.0;
  std::size_t boundary_size = 0;
  ExtendedCount end_count;
};

/// Canonical shrinking subgraphs G_n of a family: subtrees past generation n
/// for trees, the n-th attachment for chains, tails for paths.
struct SubgraphSequenceReport {
  std::string description;
  std::vector<SubgraphLevel> levels;
  bool volume_tends_to_zero = false;
  bool volume_bounded = false;
  bool diameter_tends_to_zero = false;
  /// #boundary(G_n) < #ends(G_n) for every n.
  bool boundary_below_ends = false;

  /// vol -> 0 (or bounded volume with diam -> 0) together with the
  /// boundary/end count condition.
  bool qualifies() const {
    return (volume_tends_to_zero || (volume_bounded && diameter_tends_to_zero)) &&
           boundary_below_ends;
  }
  bool qualifies_by_volume() const { return volume_tends_to_zero && boundary_below_ends; }
};

/// Throws UnsupportedFamily when the family has no canonical tail
/// decomposition.
SubgraphSequenceReport subgraph_sequence(const GraphFamilySpec& spec, std::size_t levels);

}  // namespace qgends
