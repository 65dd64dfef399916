#pragma once

#include "qgends/metric_graph.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace support {

/// Connected simple graph with at most `max_edges` edges and lengths drawn
/// uniformly from [lo, hi]: a random spanning tree plus random chords.
inline qgends::MetricGraph random_graph(std::mt19937_64& rng, std::size_t max_edges = 12, double lo = 0.5,
                                        double hi = 2.0) {
  std::uniform_int_distribution<std::size_t> edge_count(2, max_edges);
  std::uniform_real_distribution<double> length(lo, hi);
  const std::size_t m = edge_count(rng);
  const std::size_t n = std::uniform_int_distribution<std::size_t>(2, m + 1)(rng);
  std::vector<qgends::Edge> edges;
  std::set<std::pair<std::uint32_t, std::uint32_t>> used;
  auto add = [&](std::uint32_t a, std::uint32_t b) {
    if (a == b || used.count({std::min(a, b), std::max(a, b)})) return false;
    used.insert({std::min(a, b), std::max(a, b)});
    if (rng() % 2) std::swap(a, b);
    edges.push_back({a, b, length(rng)});
    return true;
  };
  for (std::uint32_t v = 1; v < n; ++v) add(v, std::uniform_int_distribution<std::uint32_t>(0, v - 1)(rng));
  const std::size_t possible = n * (n - 1) / 2;
  while (edges.size() < std::min(m, possible)) {
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
    add(pick(rng), pick(rng));
  }
  return qgends::MetricGraph(std::vector<qgends::VertexInfo>(n), edges);
}

}  // namespace support
