#include "qgends/error.hpp"
#include "qgends/graphspec.hpp"
#include "qgends/metric_graph.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

using namespace qgends;

namespace {

GraphFamilySpec spec(const char* text) { return parse_spec(text); }

const char* kTree4 =
    R"({"variant":"RadialTree","b":{"kind":"constant","c":2},"ell":{"kind":"geometric","a":1,"r":"1/4"}})";
const char* kTree2 =
    R"({"variant":"RadialTree","b":{"kind":"constant","c":2},"ell":{"kind":"geometric","a":1,"r":"1/2"}})";
const char* kUnitPath = R"({"variant":"HalfLinePath","ell":{"kind":"constant","c":1}})";

// Exhaustive search over simple paths for the star path metric.
double rho_m_bruteforce(const MetricGraph& g, VertexId u, VertexId v) {
  if (u == v) return 0.0;
  double best = INFINITY;
  std::vector<char> used(g.vertex_count(), 0);
  std::function<void(VertexId, double)> walk = [&](VertexId x, double acc) {
    if (x == v) {
      best = std::min(best, acc);
      return;
    }
    for (EdgeId e : g.incident(x)) {
      const VertexId w = g.edge(e).tail == x ? g.edge(e).head : g.edge(e).tail;
      if (used[w]) continue;
      used[w] = 1;
      walk(w, acc + star_weight(g, w).value);
      used[w] = 0;
    }
  };
  used[u] = 1;
  walk(u, star_weight(g, u).value);
  return best;
}

// Diameter over points, sampled densely on every edge.
double sampled_diameter(const MetricGraph& g, int per_edge) {
  std::vector<std::vector<double>> d;
  for (VertexId v = 0; v < g.vertex_count(); ++v) d.push_back(path_distances(g, v));
  double best = 0.0;
  for (const Edge& e : g.edges())
    for (const Edge& f : g.edges())
      for (int i = 0; i <= per_edge; ++i)
        for (int j = 0; j <= per_edge; ++j) {
          const double s = e.length * i / per_edge, t = f.length * j / per_edge;
          double dist = std::min({s + d[e.tail][f.tail] + t, s + d[e.tail][f.head] + f.length - t,
                                  e.length - s + d[e.head][f.tail] + t,
                                  e.length - s + d[e.head][f.head] + f.length - t});
          if (&e == &f) dist = std::min(dist, std::abs(s - t));
          best = std::max(best, dist);
        }
  return best;
}

}  // namespace

TEST_CASE("truncate examples") {
  const MetricGraph t = truncate(spec(kTree4), 2);
  CHECK(t.vertex_count() == 7);
  CHECK(t.edge_count() == 6);
  const MetricGraph p = truncate(spec(kUnitPath), 5);
  CHECK(p.vertex_count() == 6);
  CHECK(p.volume() == doctest::Approx(5.0));
  CHECK(p.boundary_vertices() == std::vector<VertexId>{5});

  // Brute-force edge-length summation: layer n holds 2^(n+1) edges of length 4^-n.
  const MetricGraph t3 = truncate(spec(kTree4), 3);
  double oracle = 0.0;
  for (int n = 0; n < 3; ++n) oracle += std::pow(2.0, n + 1) * std::pow(4.0, -n);
  CHECK(oracle == doctest::Approx(3.5).epsilon(1e-15));
  CHECK(t3.volume() == doctest::Approx(oracle).epsilon(1e-15));
}

TEST_CASE("truncation boundary marks have smaller degree than in the family") {
  for (const char* s : {kTree4, kUnitPath}) {
    const MetricGraph g = truncate(spec(s), 4);
    const MetricGraph deeper = truncate(spec(s), 5);
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
      CHECK(g.is_boundary(v) == (g.degree(v) < deeper.degree(v)));
    }
  }
}

TEST_CASE("truncation respects the vertex cap") {
  CHECK_THROWS_AS(truncate(spec(kTree4), 25), Error);
  try {
    truncate(spec(kTree4), 8, {100});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DepthTooLarge);
  }
  CHECK_NOTHROW(truncate(spec(kTree4), 6, {1000}));
}

TEST_CASE("volume_family examples") {
  const SeriesSum v4 = volume_family(spec(kTree4));
  REQUIRE(v4.is_finite());
  CHECK(v4.value() == Number(4));
  // Oracle: partial sums of 2^(n+1) 4^-n.
  double s = 0.0;
  for (int n = 0; n < 200; ++n) s += std::pow(2.0, n + 1) * std::pow(4.0, -n);
  CHECK(std::abs(s - v4.as_double()) < 1e-12);
  CHECK(volume_family(spec(kTree2)).is_divergent());
  const auto fg = spec(
      R"({"variant":"FiniteGraph","vertex_count":3,"edges":[{"u":0,"v":1,"length":1},{"u":1,"v":2,"length":"1/2"}]})");
  CHECK(volume_family(fg).value() == Number::exact(Rational(3, 2)));
}

TEST_CASE("volume of truncations increases to the family volume") {
  for (const char* s : {kTree4,
                        R"({"variant":"RadialTree","b":{"kind":"explicit","prefix":[3],"tail":{"kind":"constant","c":2}},"ell":{"kind":"geometric","a":2,"r":"1/8"}})",
                        R"({"variant":"FullLinePath","ell_pos":{"kind":"geometric","a":1,"r":"1/2"},"ell_neg":{"kind":"power","a":1,"p":3}})"}) {
    const GraphFamilySpec f = spec(s);
    const double total = volume_family(f).as_double();
    double prev = 0.0;
    for (unsigned d = 1; d <= 16; ++d) {
      const double v = truncate(f, d).volume();
      CHECK(v >= prev);
      CHECK(v <= total * (1 + 1e-12));
      prev = v;
    }
    CHECK(total - prev < 2e-3);
  }
}

TEST_CASE("sphere-symmetric realisations match the layer edge counts") {
  const char* one =
      R"({"variant":"SphereSymmetric","sphere_sizes":{"kind":"explicit","prefix":[1],"tail":{"kind":"constant","c":3}},"ell":{"kind":"geometric","a":1,"r":"1/4"},"ends":"one"})";
  const char* two =
      R"({"variant":"SphereSymmetric","sphere_sizes":{"kind":"explicit","prefix":[1],"tail":{"kind":"constant","c":4}},"ell":{"kind":"geometric","a":1,"r":"1/4"},"ends":"two"})";
  const char* cantor =
      R"({"variant":"SphereSymmetric","sphere_sizes":{"kind":"geometric","a":1,"r":2},"ell":{"kind":"geometric","a":1,"r":"1/4"},"ends":"cantor"})";
  for (const char* s : {one, two, cantor}) {
    const GraphFamilySpec f = spec(s);
    const TermSequence edges = sphere_layer_edges(*f.get_if<SphereSymmetricSpec>());
    const MetricGraph g = truncate(f, 4);
    std::vector<std::size_t> per_layer(4, 0);
    for (const Edge& e : g.edges()) ++per_layer[g.vertex(e.tail).depth];
    for (std::size_t n = 0; n < 4; ++n) CHECK(double(per_layer[n]) == edges.eval_double(n));
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
      if (g.is_boundary(v)) continue;
      double local = 0.0;
      for (EdgeId e : g.incident(v)) local += g.edge(e).length;
      CHECK(star_weight(g, v).value == doctest::Approx(local));
    }
  }
}

TEST_CASE("chain truncation grafts scaled attachments") {
  const auto f = spec(
      R"({"variant":"ChainWithAttachments","ell":{"kind":"constant","c":1},"attachment":{"variant":"FullLinePath","ell_pos":{"kind":"geometric","a":1,"r":"1/2"},"ell_neg":{"kind":"geometric","a":1,"r":"1/2"}},"scaling":{"kind":"geometric","a":1,"r":"1/2"}})");
  const MetricGraph g = truncate(f, 3);
  // chain 0..3 plus attachments at sites 0,1,2 truncated to depth 3,2,1.
  CHECK(g.vertex_count() == 4 + 6 + 4 + 2);
  const double expected = 3.0 + 2 * (1 + 0.5 + 0.25) + 0.5 * 2 * (1 + 0.5) + 0.25 * 2 * 1;
  CHECK(g.volume() == doctest::Approx(expected));
  const SeriesSum v = volume_family(f);
  CHECK(v.is_divergent());
  for (VertexId u = 0; u < g.vertex_count(); ++u) {
    if (g.is_boundary(u)) continue;
    double local = 0.0;
    for (EdgeId e : g.incident(u)) local += g.edge(e).length;
    CHECK(star_weight(g, u).value == doctest::Approx(local));
  }
}

TEST_CASE("star_weight examples") {
  const MetricGraph single(std::vector<VertexInfo>(2), {{0, 1, 1.0}});
  CHECK(star_weight(single, 1).value == 1.0);
  const auto t = spec(
      R"({"variant":"RadialTree","b":{"kind":"constant","c":2},"ell":{"kind":"explicit","prefix":[1],"tail":{"kind":"constant","c":"1/4"}}})");
  const MetricGraph g = truncate(t, 2);
  CHECK(star_weight(g, 0).value == 2.0);
  CHECK(star_weight(g, 1).value == doctest::Approx(1.5));
  CHECK_FALSE(star_weight(g, 1).lower_bound);
  CHECK_THROWS_AS(star_weight(g, 99), Error);
  // The family value is reported at a cut vertex.
  const VertexId leaf = g.boundary_vertices().front();
  CHECK(star_weight(g, leaf).value == doctest::Approx(0.25 + 2 * 0.25));
  // Without family data the local sum is flagged as a lower bound.
  std::vector<VertexInfo> vs(3);
  vs[2].boundary = true;
  const MetricGraph bare(vs, {{0, 1, 1.0}, {1, 2, 2.0}});
  CHECK(star_weight(bare, 2).lower_bound);
  CHECK(star_weight(bare, 2).value == 2.0);
}

TEST_CASE("path metric and star path metric examples") {
  std::vector<VertexInfo> vs(4);
  const MetricGraph path(vs, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}});
  CHECK(path_metric(path, 0, 3) == 3.0);
  CHECK(star_path_metric(path, 0, 1) == 3.0);
  CHECK(star_path_metric(path, 0, 1) == rho_m_bruteforce(path, 0, 1));
  CHECK(path_metric(path, 2, 2) == 0.0);
  CHECK(star_path_metric(path, 2, 2) == 0.0);
  CHECK_THROWS_AS(path_metric(path, 0, 7), Error);
}

TEST_CASE("metric properties on random graphs") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> len(0.5, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + trial % 6;
    std::vector<Edge> edges;
    std::set<std::pair<VertexId, VertexId>> seen;
    for (VertexId v = 1; v < n; ++v) {
      const VertexId u = std::uniform_int_distribution<VertexId>(0, v - 1)(rng);
      edges.push_back({u, v, len(rng)});
      seen.insert({u, v});
    }
    for (int extra = 0; extra < 3; ++extra) {
      VertexId a = std::uniform_int_distribution<VertexId>(0, n - 1)(rng);
      VertexId b = std::uniform_int_distribution<VertexId>(0, n - 1)(rng);
      if (a > b) std::swap(a, b);
      if (a == b || !seen.insert({a, b}).second) continue;
      edges.push_back({a, b, len(rng)});
    }
    const MetricGraph g(std::vector<VertexInfo>(n), edges);
    const MetricGraph g2 = g.scaled(2.0);
    const MetricGraph gr = g.reversed();
    CHECK(g2.volume() == 2.0 * g.volume());
    for (VertexId a = 0; a < n; ++a) {
      CHECK(star_weight(g, a).value == star_weight(gr, a).value);
      for (VertexId b = 0; b < n; ++b) {
        const double dab = path_metric(g, a, b);
        CHECK(dab == doctest::Approx(path_metric(g, b, a)).epsilon(1e-14));
        CHECK(path_metric(g2, a, b) == 2.0 * dab);
        CHECK(star_path_metric(g, a, b) == doctest::Approx(rho_m_bruteforce(g, a, b)).epsilon(1e-14));
        for (VertexId c = 0; c < n; ++c) CHECK(dab <= path_metric(g, a, c) + path_metric(g, c, b) + 1e-12);
      }
    }
    const double diam = metric_diameter(g);
    const double sampled = sampled_diameter(g, 40);
    CHECK(diam >= sampled - 1e-12);
    CHECK(diam <= sampled + 2.0 * 2.0 / 40);
  }
}

TEST_CASE("metric diameter of simple shapes") {
  std::vector<VertexInfo> vs(3);
  CHECK(metric_diameter(MetricGraph(vs, {{0, 1, 1.0}, {1, 2, 2.0}})) == 3.0);
  CHECK(metric_diameter(MetricGraph(vs, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}})) == doctest::Approx(1.5));
}

TEST_CASE("invalid metric graphs are rejected") {
  std::vector<VertexInfo> vs(3);
  CHECK_THROWS_AS(MetricGraph(vs, {{0, 1, 1.0}}), Error);
  CHECK_THROWS_AS(MetricGraph(vs, {{0, 1, 1.0}, {1, 2, -1.0}}), Error);
  CHECK_THROWS_AS(MetricGraph(vs, {{0, 1, 1.0}, {1, 0, 1.0}, {1, 2, 1.0}}), Error);
  CHECK_THROWS_AS(MetricGraph(vs, {{0, 0, 1.0}, {0, 1, 1.0}, {1, 2, 1.0}}), Error);
}

TEST_CASE("subgraph_sequence examples") {
  const SubgraphSequenceReport r = subgraph_sequence(spec(kTree4), 8);
  CHECK(r.qualifies());
  for (std::size_t n = 1; n <= 8; ++n) {
    const SubgraphLevel& lv = r.levels[n];
    CHECK(lv.boundary_size == 1);
    CHECK(lv.end_count == ExtendedCount::uncountable());
    // Tail partial sums: sum_{k>=n} 2^(k+1) 4^-k / 2^n.
    double oracle = 0.0;
    for (int k = int(n); k < int(n) + 200; ++k) oracle += std::pow(2.0, k + 1) * std::pow(4.0, -k);
    oracle /= std::pow(2.0, double(n));
    CHECK(lv.volume.as_double() == doctest::Approx(oracle).epsilon(1e-13));
    CHECK(lv.volume.as_double() < r.levels[n - 1].volume.as_double());
  }

  const auto chain = spec(
      R"({"variant":"ChainWithAttachments","ell":{"kind":"constant","c":1},"attachment":{"variant":"FullLinePath","ell_pos":{"kind":"geometric","a":1,"r":"1/2"},"ell_neg":{"kind":"geometric","a":1,"r":"1/2"}},"scaling":{"kind":"geometric","a":1,"r":"1/2"}})");
  const SubgraphSequenceReport c = subgraph_sequence(chain, 6);
  CHECK(c.qualifies());
  for (std::size_t n = 1; n <= 6; ++n) {
    CHECK(c.levels[n].volume.value() * Number(2) == c.levels[n - 1].volume.value());
    CHECK(c.levels[n].diameter == doctest::Approx(c.levels[n - 1].diameter / 2));
  }
  CHECK(c.levels[0].volume.value() == Number(4));
  CHECK(c.levels[0].diameter == 4.0);

  const SubgraphSequenceReport d = subgraph_sequence(spec(kTree2), 4);
  CHECK_FALSE(d.qualifies());
  CHECK(d.diameter_tends_to_zero);

  try {
    subgraph_sequence(spec(R"({"variant":"FiniteGraph","vertex_count":2,"edges":[{"u":0,"v":1,"length":1}]})"), 3);
    FAIL("expected UnsupportedFamily");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnsupportedFamily);
  }
}

TEST_CASE("graph serialisation") {
  const MetricGraph p = truncate(spec(kUnitPath), 2);
  CHECK(graph_to_edge_csv(p) == "u,v,length\n0,1,1\n1,2,1\n");
  const auto j = graph_to_json(p);
  CHECK(j["vertices"].size() == 3);
  CHECK(j["edges"][1]["v"] == 2);
  CHECK(j["provenance"]["depth"] == 2);
}
