#pragma once

#include "qgends/number.hpp"
#include "qgends/sequence.hpp"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace qgends {

inline constexpr std::string_view kSpecSchema = "qgends-spec/1";

struct GraphFamilySpec;

/// Rooted tree: every vertex of generation n has b_n children, joined by
/// edges of length ell_n.
struct RadialTreeSpec {
  SequenceSpec b;
  SequenceSpec ell;
};

/// Vertices 0, 1, 2, ... with |(n, n+1)| = ell_n.
struct HalfLinePathSpec {
  SequenceSpec ell;
};

/// Vertices ..., -1, 0, 1, ... ; ell_pos_n = |(n, n+1)|, ell_neg_n = |(-n, -n-1)|.
struct FullLinePathSpec {
  SequenceSpec ell_pos;
  SequenceSpec ell_neg;
};

/// Half-line chain whose n-th vertex is identified with the root of a copy
/// of `attachment`, every length of that copy multiplied by scaling_n.
struct ChainWithAttachmentsSpec {
  SequenceSpec ell;
  std::shared_ptr<const GraphFamilySpec> attachment;
  SequenceSpec scaling;
};

enum class DeclaredEnds { One, Two, Cantor };

/// Sphere-symmetric model with |S_n| = sphere_sizes_n and every edge between
/// S_n and S_{n+1} of length ell_n. Realised as an antitree (one end), two
/// antitrees glued at the root (two ends) or a spherically symmetric tree
/// (Cantor end space).
struct SphereSymmetricSpec {
  SequenceSpec sphere_sizes;
  SequenceSpec ell;
  DeclaredEnds ends = DeclaredEnds::One;
  bool cayley = false;
};

struct FiniteEdgeSpec {
  std::uint32_t u = 0;
  std::uint32_t v = 0;
  Number length = 1;
};

/// Explicit finite graph; vertex 0 is the root used for depth labels.
struct FiniteGraphSpec {
  std::uint32_t vertex_count = 0;
  std::vector<FiniteEdgeSpec> edges;
};

struct GraphFamilySpec {
  using Variant = std::variant<RadialTreeSpec, HalfLinePathSpec, FullLinePathSpec,
                               ChainWithAttachmentsSpec, SphereSymmetricSpec, FiniteGraphSpec>;
  std::string name;
  std::string notes;
  Variant variant;

  std::string_view variant_name() const;
  template <class T>
  const T* get_if() const { return std::get_if<T>(&variant); }
};

/// Parses and validates a spec document. Throws SchemaError,
/// InvariantError or NonPositiveLength.
GraphFamilySpec parse_spec(std::string_view text);
GraphFamilySpec spec_from_json(const nlohmann::json& doc);
nlohmann::json spec_to_json(const GraphFamilySpec& spec);
std::string serialize_spec(const GraphFamilySpec& spec);

/// Re-runs every structural invariant; parse_spec calls this.
void validate(const GraphFamilySpec& spec);

SequenceSpec sequence_from_json(const nlohmann::json& doc);
nlohmann::json sequence_to_json(const SequenceSpec& s);
Number number_from_json(const nlohmann::json& value, bool exact = true);
nlohmann::json number_to_json(const Number& n);

/// Every length of the family multiplied by `factor` (used for the scale
/// invariance checks).
GraphFamilySpec scale_lengths(const GraphFamilySpec& spec, const Number& factor);

}  // namespace qgends
