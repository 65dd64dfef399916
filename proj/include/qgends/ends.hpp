#pragma once

#include "qgends/extended_count.hpp"
#include "qgends/graphspec.hpp"
#include "qgends/sequence.hpp"

#include <json.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace qgends {

enum class VolumeClass { FiniteVolume, InfiniteVolume };
enum class Freeness { Free, NonFree };

/// One class of ends sharing volume class and freeness. `multiplicity` is the
/// number of ends it stands for (1 for a path tail, uncountable for the
/// branches of a tree).
struct EndDescriptor {
  std::string id;
  std::string ray;
  VolumeClass volume_class = VolumeClass::InfiniteVolume;
  /// vol(U_0) of the canonical neighbourhood when finite.
  SeriesSum tail_volume = SeriesSum::divergent();
  Freeness freeness = Freeness::Free;
  ExtendedCount multiplicity = ExtendedCount::finite(1);
};

struct EndSummary {
  ExtendedCount total;
  ExtendedCount finite_volume;
  ExtendedCount free_finite_volume;
  bool has_nonfree_finite_volume = false;
  std::vector<EndDescriptor> descriptors;
};

EndSummary enumerate_ends(const GraphFamilySpec& spec);

struct VolumeClassification {
  VolumeClass volume_class = VolumeClass::InfiniteVolume;
  SeriesSum tail_volume = SeriesSum::divergent();
};

/// Volume class of an end from the census of `spec`, decided by the volume of
/// its canonical neighbourhoods.
VolumeClassification classify_volume(const GraphFamilySpec& spec, const EndDescriptor& end);
/// vol(U_n) for the n-th canonical neighbourhood of `end`.
SeriesSum end_neighbourhood_volume(const GraphFamilySpec& spec, const EndDescriptor& end, std::size_t n);

ExtendedCount count_finite_volume(const GraphFamilySpec& spec);
Freeness detect_free(const GraphFamilySpec& spec, const EndDescriptor& end);
bool has_nonfree_finite_volume(const GraphFamilySpec& spec);

/// Components of the complement of the combinatorial ball of radius R that
/// reach the truncation cut, with the map into the radius R - 1 level.
struct ComponentLevel {
  unsigned radius = 0;
  std::size_t count = 0;
  /// parent[i] = index of the radius R - 1 component containing component i.
  std::vector<std::size_t> parent;
  /// Number of vertices of each component inside the truncation.
  std::vector<std::size_t> sizes;
};

ComponentLevel truncation_components(const GraphFamilySpec& spec, unsigned radius);
/// Levels 1..max_radius, computed concurrently.
std::vector<ComponentLevel> component_levels(const GraphFamilySpec& spec, unsigned max_radius);

nlohmann::json to_json(const EndSummary& summary);
std::string components_to_csv(const std::vector<ComponentLevel>& levels);

std::string_view to_string(VolumeClass c);
std::string_view to_string(Freeness f);

}  // namespace qgends
