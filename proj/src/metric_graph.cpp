#include "qgends/metric_graph.hpp"

#include "qgends/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <utility>

namespace qgends {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

SeriesSum add(const SeriesSum& a, const SeriesSum& b) {
  if (a.is_divergent() || b.is_divergent()) return SeriesSum::divergent();
  return SeriesSum::finite(a.value() + b.value());
}

SeriesSum scale(const SeriesSum& a, const Number& c) {
  if (a.is_divergent()) return a;
  return SeriesSum::finite(a.value() * c);
}

class Builder {
 public:
  Builder(std::size_t cap, std::string spec_name, std::string variant, unsigned depth)
      : cap_(cap), provenance_{std::move(spec_name), std::move(variant), depth} {}

  VertexId add_vertex(std::uint32_t depth, bool boundary, std::optional<double> m) {
    if (vertices_.size() >= cap_) {
      fail(ErrorKind::DepthTooLarge,
           "truncation exceeds the vertex cap of " + std::to_string(cap_));
    }
    vertices_.push_back({depth, boundary, m});
    return static_cast<VertexId>(vertices_.size() - 1);
  }

  void add_edge(VertexId tail, VertexId head, double length) {
    if (edges_.size() >= 16 * cap_) {
      fail(ErrorKind::DepthTooLarge, "truncation exceeds the edge cap");
    }
    edges_.push_back({tail, head, length});
  }

  VertexInfo& vertex(VertexId v) { return vertices_[v]; }
  std::size_t size() const { return vertices_.size(); }

  MetricGraph finish() && {
    return MetricGraph(std::move(vertices_), std::move(edges_), std::move(provenance_));
  }

 private:
  std::size_t cap_;
  Provenance provenance_;
  std::vector<VertexInfo> vertices_;
  std::vector<Edge> edges_;
};

std::uint64_t to_count(const Number& n) {
  const double v = n.value();
  if (!(v >= 0) || v > 1e15) fail(ErrorKind::DepthTooLarge, "layer size too large");
  return static_cast<std::uint64_t>(std::llround(v));
}

void build_radial_tree(Builder& out, const RadialTreeSpec& s, unsigned depth) {
  const TermSequence b = TermSequence::from_spec(s.b);
  const TermSequence ell = TermSequence::from_spec(s.ell);
  std::vector<VertexId> layer{out.add_vertex(0, depth == 0, b.eval_double(0) * ell.eval_double(0))};
  for (unsigned n = 0; n < depth; ++n) {
    const std::uint64_t children = to_count(b.eval(n));
    const double len = ell.eval_double(n);
    const bool cut = n + 1 == depth;
    const double m = len + b.eval_double(n + 1) * ell.eval_double(n + 1);
    std::vector<VertexId> next;
    next.reserve(layer.size() * children);
    for (VertexId parent : layer) {
      for (std::uint64_t c = 0; c < children; ++c) {
        const VertexId v = out.add_vertex(n + 1, cut, m);
        out.add_edge(parent, v, len);
        next.push_back(v);
      }
    }
    layer = std::move(next);
  }
}

void build_half_line(Builder& out, const HalfLinePathSpec& s, unsigned depth) {
  const TermSequence ell = TermSequence::from_spec(s.ell);
  VertexId prev = out.add_vertex(0, depth == 0, ell.eval_double(0));
  for (unsigned n = 0; n < depth; ++n) {
    const VertexId v =
        out.add_vertex(n + 1, n + 1 == depth, ell.eval_double(n) + ell.eval_double(n + 1));
    out.add_edge(prev, v, ell.eval_double(n));
    prev = v;
  }
}

void build_full_line(Builder& out, const FullLinePathSpec& s, unsigned depth) {
  const TermSequence pos = TermSequence::from_spec(s.ell_pos);
  const TermSequence neg = TermSequence::from_spec(s.ell_neg);
  const VertexId origin = out.add_vertex(0, depth == 0, pos.eval_double(0) + neg.eval_double(0));
  for (const TermSequence* side : {&pos, &neg}) {
    VertexId prev = origin;
    for (unsigned n = 0; n < depth; ++n) {
      const VertexId v =
          out.add_vertex(n + 1, n + 1 == depth, side->eval_double(n) + side->eval_double(n + 1));
      out.add_edge(prev, v, side->eval_double(n));
      prev = v;
    }
  }
}

void build_sphere(Builder& out, const SphereSymmetricSpec& s, unsigned depth) {
  const TermSequence size = TermSequence::from_spec(s.sphere_sizes);
  const TermSequence ell = TermSequence::from_spec(s.ell);
  auto sz = [&](std::size_t n) { return to_count(size.eval(n)); };
  // Vertices of sphere n adjacent to a vertex of sphere n + 1 (down) or n - 1 (up).
  auto star = [&](std::size_t n) -> double {
    switch (s.ends) {
      case DeclaredEnds::One:
        return (n == 0 ? 0.0 : double(sz(n - 1)) * ell.eval_double(n - 1)) +
               double(sz(n + 1)) * ell.eval_double(n);
      case DeclaredEnds::Two: {
        if (n == 0) return double(sz(1)) * ell.eval_double(0);
        const double up = n == 1 ? 1.0 : double(sz(n - 1)) / 2;
        return up * ell.eval_double(n - 1) + double(sz(n + 1)) / 2 * ell.eval_double(n);
      }
      case DeclaredEnds::Cantor:
        return (n == 0 ? 0.0 : ell.eval_double(n - 1)) +
               double(sz(n + 1)) / double(sz(n)) * ell.eval_double(n);
    }
    return 0.0;
  };

  std::vector<VertexId> layer{out.add_vertex(0, depth == 0, star(0))};
  for (unsigned n = 0; n < depth; ++n) {
    const bool cut = n + 1 == depth;
    const double len = ell.eval_double(n);
    const std::uint64_t next_size = sz(n + 1);
    std::vector<VertexId> next;
    for (std::uint64_t i = 0; i < next_size; ++i) next.push_back(out.add_vertex(n + 1, cut, star(n + 1)));
    switch (s.ends) {
      case DeclaredEnds::One:
        for (VertexId u : layer)
          for (VertexId v : next) out.add_edge(u, v, len);
        break;
      case DeclaredEnds::Two: {
        if (n == 0) {
          for (VertexId v : next) out.add_edge(layer[0], v, len);
          break;
        }
        const std::size_t hu = layer.size() / 2, hv = next.size() / 2;
        for (std::size_t side = 0; side < 2; ++side)
          for (std::size_t i = 0; i < hu; ++i)
            for (std::size_t j = 0; j < hv; ++j)
              out.add_edge(layer[side * hu + i], next[side * hv + j], len);
        break;
      }
      case DeclaredEnds::Cantor: {
        const std::size_t per = next.size() / layer.size();
        for (std::size_t i = 0; i < layer.size(); ++i)
          for (std::size_t j = 0; j < per; ++j) out.add_edge(layer[i], next[i * per + j], len);
        break;
      }
    }
    layer = std::move(next);
  }
}

std::vector<std::uint32_t> bfs_depths(const FiniteGraphSpec& g) {
  std::vector<std::vector<std::uint32_t>> adj(g.vertex_count);
  for (const auto& e : g.edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  std::vector<std::uint32_t> depth(g.vertex_count, std::numeric_limits<std::uint32_t>::max());
  std::queue<std::uint32_t> q;
  depth[0] = 0;
  q.push(0);
  while (!q.empty()) {
    const auto u = q.front();
    q.pop();
    for (auto w : adj[u]) {
      if (depth[w] == std::numeric_limits<std::uint32_t>::max()) {
        depth[w] = depth[u] + 1;
        q.push(w);
      }
    }
  }
  return depth;
}

void build_finite(Builder& out, const FiniteGraphSpec& g, unsigned depth) {
  const auto d = bfs_depths(g);
  std::vector<double> m(g.vertex_count, 0.0);
  std::vector<std::size_t> full_degree(g.vertex_count, 0), kept_degree(g.vertex_count, 0);
  for (const auto& e : g.edges) {
    m[e.u] += e.length.value();
    m[e.v] += e.length.value();
    ++full_degree[e.u];
    ++full_degree[e.v];
    if (d[e.u] <= depth && d[e.v] <= depth) {
      ++kept_degree[e.u];
      ++kept_degree[e.v];
    }
  }
  std::vector<VertexId> id(g.vertex_count, 0);
  for (std::uint32_t v = 0; v < g.vertex_count; ++v) {
    if (d[v] <= depth) id[v] = out.add_vertex(d[v], kept_degree[v] < full_degree[v], m[v]);
  }
  for (const auto& e : g.edges) {
    if (d[e.u] <= depth && d[e.v] <= depth) out.add_edge(id[e.u], id[e.v], e.length.value());
  }
}

void build(Builder& out, const GraphFamilySpec& spec, unsigned depth, std::size_t cap);

void build_chain(Builder& out, const ChainWithAttachmentsSpec& s, unsigned depth, std::size_t cap) {
  const TermSequence ell = TermSequence::from_spec(s.ell);
  const TermSequence scaling = TermSequence::from_spec(s.scaling);
  const double root_m = root_star_weight(*s.attachment);
  VertexId prev = 0;
  for (unsigned n = 0; n <= depth; ++n) {
    const double sn = scaling.eval_double(n);
    const double m = (n == 0 ? 0.0 : ell.eval_double(n - 1)) + ell.eval_double(n) + sn * root_m;
    const VertexId c = out.add_vertex(n, n == depth, m);
    if (n > 0) out.add_edge(prev, c, ell.eval_double(n - 1));
    prev = c;
    if (n == depth) continue;
    Builder sub(cap, "", "", depth - n);
    build(sub, *s.attachment, depth - n, cap);
    const MetricGraph att = std::move(sub).finish().scaled(sn);
    if (out.size() + att.vertex_count() > cap) {
      fail(ErrorKind::DepthTooLarge, "truncation exceeds the vertex cap of " + std::to_string(cap));
    }
    std::vector<VertexId> map(att.vertex_count(), c);
    for (VertexId v = 1; v < att.vertex_count(); ++v) {
      const VertexInfo& info = att.vertex(v);
      map[v] = out.add_vertex(info.depth + n, info.boundary, info.family_star_weight);
    }
    for (const Edge& e : att.edges()) out.add_edge(map[e.tail], map[e.head], e.length);
  }
}

void build(Builder& out, const GraphFamilySpec& spec, unsigned depth, std::size_t cap) {
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, RadialTreeSpec>) build_radial_tree(out, s, depth);
        else if constexpr (std::is_same_v<T, HalfLinePathSpec>) build_half_line(out, s, depth);
        else if constexpr (std::is_same_v<T, FullLinePathSpec>) build_full_line(out, s, depth);
        else if constexpr (std::is_same_v<T, ChainWithAttachmentsSpec>) build_chain(out, s, depth, cap);
        else if constexpr (std::is_same_v<T, SphereSymmetricSpec>) build_sphere(out, s, depth);
        else build_finite(out, s, depth);
      },
      spec.variant);
}

std::vector<double> dijkstra(const MetricGraph& g, VertexId source,
                             const std::function<double(EdgeId, VertexId)>& step, double start) {
  std::vector<double> dist(g.vertex_count(), kInf);
  using Item = std::pair<double, VertexId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
  dist[source] = start;
  q.push({start, source});
  while (!q.empty()) {
    const auto [d, u] = q.top();
    q.pop();
    if (d > dist[u]) continue;
    for (EdgeId e : g.incident(u)) {
      const Edge& ed = g.edge(e);
      const VertexId w = ed.tail == u ? ed.head : ed.tail;
      const double nd = d + step(e, w);
      if (nd < dist[w]) {
        dist[w] = nd;
        q.push({nd, w});
      }
    }
  }
  return dist;
}

std::uint64_t template_end_count_finite(const GraphFamilySpec& spec, bool& uncountable) {
  uncountable = false;
  if (spec.get_if<RadialTreeSpec>()) {
    uncountable = true;
    return 0;
  }
  if (spec.get_if<HalfLinePathSpec>()) return 1;
  if (spec.get_if<FullLinePathSpec>()) return 2;
  if (spec.get_if<FiniteGraphSpec>()) return 0;
  if (const auto* s = spec.get_if<SphereSymmetricSpec>()) {
    if (s->ends == DeclaredEnds::Cantor) {
      uncountable = true;
      return 0;
    }
    return s->ends == DeclaredEnds::Two ? 2 : 1;
  }
  fail(ErrorKind::UnsupportedFamily, "attachment template has no symbolic end count");
}

ExtendedCount template_end_count(const GraphFamilySpec& spec) {
  bool unc = false;
  const auto k = template_end_count_finite(spec, unc);
  return unc ? ExtendedCount::uncountable() : ExtendedCount::finite(k);
}

/// Whole-subtree tails of a tree whose generation-k layer holds `layer_k`
/// edges of length ell_k and whose vertices branch at least twice.
SubgraphSequenceReport tree_tails(const TermSequence& layer_edges, const TermSequence& ell,
                                  std::size_t levels, std::string description) {
  SubgraphSequenceReport r;
  r.description = std::move(description);
  const TermSequence mass = layer_edges * ell;
  const SeriesSum total = mass.sum_from(0);
  const SeriesSum length = ell.sum_from(0);
  for (std::size_t n = 0; n <= levels; ++n) {
    SubgraphLevel lv;
    lv.index = n;
    // Vertices at generation n: layer_edges_{n-1}, with one root at n = 0.
    const Number count = n == 0 ? Number(1) : layer_edges.eval(n - 1);
    lv.volume = scale(mass.sum_from(n), Number(1) / count);
    lv.diameter = 2.0 * ell.sum_from(n).as_double();
    lv.boundary_size = n == 0 ? 0 : 1;
    lv.end_count = ExtendedCount::uncountable();
    r.levels.push_back(lv);
  }
  r.volume_tends_to_zero = total.is_finite();
  r.volume_bounded = total.is_finite();
  r.diameter_tends_to_zero = length.is_finite();
  r.boundary_below_ends = true;
  return r;
}

}  // namespace

MetricGraph::MetricGraph(std::vector<VertexInfo> vertices, std::vector<Edge> edges, Provenance provenance)
    : vertices_(std::move(vertices)), edges_(std::move(edges)), provenance_(std::move(provenance)) {
  const std::size_t n = vertices_.size();
  if (n == 0) fail(ErrorKind::InvariantError, "metric graph without vertices");
  std::set<std::pair<VertexId, VertexId>> seen;
  std::vector<std::size_t> deg(n, 0);
  for (const Edge& e : edges_) {
    if (e.tail >= n || e.head >= n) fail(ErrorKind::InvariantError, "edge endpoint out of range");
    if (e.tail == e.head) fail(ErrorKind::InvariantError, "loops are not allowed");
    if (!seen.insert(std::minmax(e.tail, e.head)).second) {
      fail(ErrorKind::InvariantError, "multi-edges are not allowed");
    }
    if (!(e.length > 0) || !std::isfinite(e.length)) {
      fail(ErrorKind::NonPositiveLength, "edge length " + format_double(e.length) + " is not positive");
    }
    ++deg[e.tail];
    ++deg[e.head];
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) offsets_[v + 1] = offsets_[v] + deg[v];
  incidence_.resize(offsets_[n]);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (EdgeId e = 0; e < edges_.size(); ++e) {
    incidence_[fill[edges_[e].tail]++] = e;
    incidence_[fill[edges_[e].head]++] = e;
  }
  std::vector<char> seen_v(n, 0);
  std::vector<VertexId> stack{0};
  seen_v[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const VertexId u = stack.back();
    stack.pop_back();
    for (EdgeId e : incident(u)) {
      const VertexId w = edges_[e].tail == u ? edges_[e].head : edges_[e].tail;
      if (!seen_v[w]) {
        seen_v[w] = 1;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  if (reached != n) fail(ErrorKind::InvariantError, "metric graph is not connected");
}

const VertexInfo& MetricGraph::vertex(VertexId v) const {
  if (v >= vertices_.size()) fail(ErrorKind::UnknownVertex, "unknown vertex " + std::to_string(v));
  return vertices_[v];
}

std::span<const EdgeId> MetricGraph::incident(VertexId v) const {
  if (v >= vertices_.size()) fail(ErrorKind::UnknownVertex, "unknown vertex " + std::to_string(v));
  return std::span<const EdgeId>(incidence_).subspan(offsets_[v], offsets_[v + 1] - offsets_[v]);
}

std::vector<VertexId> MetricGraph::boundary_vertices() const {
  std::vector<VertexId> out;
  for (VertexId v = 0; v < vertices_.size(); ++v)
    if (vertices_[v].boundary) out.push_back(v);
  return out;
}

double MetricGraph::volume() const {
  double s = 0.0;
  for (const Edge& e : edges_) s += e.length;
  return s;
}

double MetricGraph::min_edge_length() const {
  double m = kInf;
  for (const Edge& e : edges_) m = std::min(m, e.length);
  return m;
}

MetricGraph MetricGraph::scaled(double factor) const {
  std::vector<VertexInfo> v = vertices_;
  std::vector<Edge> e = edges_;
  for (auto& x : v)
    if (x.family_star_weight) *x.family_star_weight *= factor;
  for (auto& x : e) x.length *= factor;
  return MetricGraph(std::move(v), std::move(e), provenance_);
}

MetricGraph MetricGraph::reversed() const {
  std::vector<Edge> e = edges_;
  for (auto& x : e) std::swap(x.tail, x.head);
  return MetricGraph(vertices_, std::move(e), provenance_);
}

MetricGraph truncate(const GraphFamilySpec& spec, unsigned depth, TruncationOptions options) {
  if (depth < 1) fail(ErrorKind::InvariantError, "truncation depth must be at least 1");
  Builder out(options.vertex_cap, spec.name, std::string(spec.variant_name()), depth);
  build(out, spec, depth, options.vertex_cap);
  return std::move(out).finish();
}

TermSequence branching_products(const SequenceSpec& b) {
  const TermSequence t = TermSequence::from_spec(b);
  if (!t.constant_tail()) fail(ErrorKind::InvariantError, "branching numbers need a constant tail");
  const std::size_t m = t.prefix_size();
  std::vector<Number> prefix;
  Number acc = 1;
  for (std::size_t n = 0; n < m; ++n) {
    acc *= t.eval(n);
    prefix.push_back(acc);
  }
  const Number& c = t.coefficient();
  // mu_n = acc * c^(n - m + 1) for n >= m.
  const Number a = acc * c.pow(1 - static_cast<std::int64_t>(m));
  return TermSequence::geometric(a, c).with_prefix(std::move(prefix));
}

TermSequence sphere_layer_edges(const SphereSymmetricSpec& s) {
  const TermSequence size = TermSequence::from_spec(s.sphere_sizes);
  switch (s.ends) {
    case DeclaredEnds::One:
      return size * size.shifted(1);
    case DeclaredEnds::Two:
      return (size * size.shifted(1)).scaled(Number::exact(Rational(1, 2))).with_prefix({size.eval(1)});
    case DeclaredEnds::Cantor:
      return size.shifted(1);
  }
  return size;
}

SeriesSum volume_family(const GraphFamilySpec& spec) {
  return std::visit(
      [&](const auto& s) -> SeriesSum {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, RadialTreeSpec>) {
          return (branching_products(s.b) * TermSequence::from_spec(s.ell)).sum_from(0);
        } else if constexpr (std::is_same_v<T, HalfLinePathSpec>) {
          return seq_series_sum(s.ell);
        } else if constexpr (std::is_same_v<T, FullLinePathSpec>) {
          return add(seq_series_sum(s.ell_pos), seq_series_sum(s.ell_neg));
        } else if constexpr (std::is_same_v<T, ChainWithAttachmentsSpec>) {
          const SeriesSum v = volume_family(*s.attachment);
          if (v.is_divergent()) return v;
          return add(seq_series_sum(s.ell), scale(seq_series_sum(s.scaling), v.value()));
        } else if constexpr (std::is_same_v<T, SphereSymmetricSpec>) {
          return (sphere_layer_edges(s) * TermSequence::from_spec(s.ell)).sum_from(0);
        } else {
          Number total = 0;
          for (const auto& e : s.edges) total += e.length;
          return SeriesSum::finite(total);
        }
      },
      spec.variant);
}

double root_star_weight(const GraphFamilySpec& spec) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, RadialTreeSpec>) {
          return seq_eval(s.b, 0).value() * seq_eval(s.ell, 0).value();
        } else if constexpr (std::is_same_v<T, HalfLinePathSpec>) {
          return seq_eval(s.ell, 0).value();
        } else if constexpr (std::is_same_v<T, FullLinePathSpec>) {
          return seq_eval(s.ell_pos, 0).value() + seq_eval(s.ell_neg, 0).value();
        } else if constexpr (std::is_same_v<T, ChainWithAttachmentsSpec>) {
          return seq_eval(s.ell, 0).value() + seq_eval(s.scaling, 0).value() * root_star_weight(*s.attachment);
        } else if constexpr (std::is_same_v<T, SphereSymmetricSpec>) {
          return seq_eval(s.sphere_sizes, 1).value() * seq_eval(s.ell, 0).value();
        } else {
          double m = 0.0;
          for (const auto& e : s.edges)
            if (e.u == 0 || e.v == 0) m += e.length.value();
          return m;
        }
      },
      spec.variant);
}

double family_diameter(const GraphFamilySpec& spec) {
  if (const auto* t = spec.get_if<RadialTreeSpec>()) return 2.0 * seq_series_sum(t->ell).as_double();
  if (const auto* h = spec.get_if<HalfLinePathSpec>()) return seq_series_sum(h->ell).as_double();
  if (const auto* f = spec.get_if<FullLinePathSpec>()) {
    return seq_series_sum(f->ell_pos).as_double() + seq_series_sum(f->ell_neg).as_double();
  }
  if (const auto* s = spec.get_if<SphereSymmetricSpec>(); s && s->ends != DeclaredEnds::One) {
    // Two deep points in different root branches are joined only through the root.
    return 2.0 * seq_series_sum(s->ell).as_double();
  }
  if (const auto* g = spec.get_if<FiniteGraphSpec>()) {
    return metric_diameter(truncate(spec, std::max<std::uint32_t>(1, g->vertex_count)));
  }
  fail(ErrorKind::UnsupportedFamily, "no closed-form diameter for " + std::string(spec.variant_name()));
}

StarWeight star_weight(const MetricGraph& g, VertexId v) {
  const VertexInfo& info = g.vertex(v);
  if (info.family_star_weight) return {*info.family_star_weight, false};
  double m = 0.0;
  for (EdgeId e : g.incident(v)) m += g.edge(e).length;
  return {m, info.boundary};
}

std::vector<double> path_distances(const MetricGraph& g, VertexId source) {
  g.vertex(source);
  return dijkstra(g, source, [&](EdgeId e, VertexId) { return g.edge(e).length; }, 0.0);
}

double path_metric(const MetricGraph& g, VertexId u, VertexId v) {
  g.vertex(v);
  return path_distances(g, u)[v];
}

double star_path_metric(const MetricGraph& g, VertexId u, VertexId v) {
  g.vertex(u);
  g.vertex(v);
  if (u == v) return 0.0;
  std::vector<double> m(g.vertex_count());
  for (VertexId w = 0; w < g.vertex_count(); ++w) m[w] = star_weight(g, w).value;
  return dijkstra(g, u, [&](EdgeId, VertexId w) { return m[w]; }, m[u])[v];
}

double metric_diameter(const MetricGraph& g) {
  const std::size_t n = g.vertex_count();
  std::vector<std::vector<double>> d(n);
  for (VertexId v = 0; v < n; ++v) d[v] = path_distances(g, v);
  if (g.edge_count() == 0) return 0.0;
  double best = 0.0;
  const auto edges = g.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge& e = edges[i];
    const double le = e.length;
    best = std::max(best, std::min(le, 0.5 * (le + d[e.tail][e.head])));
    for (std::size_t j = i + 1; j < edges.size(); ++j) {
      const Edge& f = edges[j];
      // Distance from x at position s on e to an endpoint q: min(s + d(a,q), le - s + d(b,q)).
      // The farthest point of f from x sits at (D_x(c) + D_x(d) + |f|) / 2.
      auto value = [&](double s) {
        const double dc = std::min(s + d[e.tail][f.tail], le - s + d[e.head][f.tail]);
        const double dd = std::min(s + d[e.tail][f.head], le - s + d[e.head][f.head]);
        return 0.5 * (dc + dd + f.length);
      };
      const double sc = std::clamp(0.5 * (le + d[e.head][f.tail] - d[e.tail][f.tail]), 0.0, le);
      const double sd = std::clamp(0.5 * (le + d[e.head][f.head] - d[e.tail][f.head]), 0.0, le);
      for (double s : {0.0, le, sc, sd}) best = std::max(best, value(s));
    }
  }
  return best;
}

nlohmann::json graph_to_json(const MetricGraph& g) {
  nlohmann::json vs = nlohmann::json::array();
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    const VertexInfo& info = g.vertex(v);
    const StarWeight m = star_weight(g, v);
    vs.push_back({{"id", v},
                  {"depth", info.depth},
                  {"boundary", info.boundary},
                  {"star_weight", m.value},
                  {"star_weight_is_lower_bound", m.lower_bound}});
  }
  nlohmann::json es = nlohmann::json::array();
  for (const Edge& e : g.edges()) es.push_back({{"u", e.tail}, {"v", e.head}, {"length", e.length}});
  return {{"schema", "qgends-graph/1"},
          {"provenance",
           {{"spec", g.provenance().spec_name},
            {"variant", g.provenance().variant},
            {"depth", g.provenance().depth}}},
          {"vertices", vs},
          {"edges", es}};
}

std::string graph_to_edge_csv(const MetricGraph& g) {
  std::ostringstream out;
  out << "u,v,length\n";
  for (const Edge& e : g.edges()) out << e.tail << ',' << e.head << ',' << format_double(e.length) << '\n';
  return out.str();
}

SubgraphSequenceReport subgraph_sequence(const GraphFamilySpec& spec, std::size_t levels) {
  if (const auto* t = spec.get_if<RadialTreeSpec>()) {
    return tree_tails(branching_products(t->b), TermSequence::from_spec(t->ell), levels,
                      "subtree below a generation-n vertex");
  }
  if (const auto* s = spec.get_if<SphereSymmetricSpec>()) {
    if (s->ends != DeclaredEnds::Cantor) {
      fail(ErrorKind::UnsupportedFamily, "sphere-symmetric antitrees have no canonical tail decomposition");
    }
    return tree_tails(sphere_layer_edges(*s), TermSequence::from_spec(s->ell), levels,
                      "subtree below a vertex of sphere n");
  }
  if (const auto* c = spec.get_if<ChainWithAttachmentsSpec>()) {
    SubgraphSequenceReport r;
    r.description = "attachment at chain vertex n";
    const TermSequence scaling = TermSequence::from_spec(c->scaling);
    const SeriesSum v = volume_family(*c->attachment);
    const double diam = family_diameter(*c->attachment);
    const ExtendedCount ends = template_end_count(*c->attachment);
    for (std::size_t n = 0; n <= levels; ++n) {
      const Number sn = scaling.eval(n);
      r.levels.push_back({n, scale(v, sn), sn.value() * diam, 1, ends});
    }
    r.volume_tends_to_zero = v.is_finite() && scaling.tends_to_zero();
    r.volume_bounded = v.is_finite() && scaling.bounded();
    r.diameter_tends_to_zero = std::isfinite(diam) && scaling.tends_to_zero();
    r.boundary_below_ends = ExtendedCount::finite(1) < ends;
    return r;
  }
  const SequenceSpec* ell = nullptr;
  if (const auto* h = spec.get_if<HalfLinePathSpec>()) ell = &h->ell;
  if (const auto* f = spec.get_if<FullLinePathSpec>()) ell = &f->ell_pos;
  if (!ell) fail(ErrorKind::UnsupportedFamily, "finite graphs have no infinite tail");
  SubgraphSequenceReport r;
  r.description = "path tail beyond vertex n";
  const TermSequence t = TermSequence::from_spec(*ell);
  for (std::size_t n = 0; n <= levels; ++n) {
    const SeriesSum tail = t.sum_from(n);
    r.levels.push_back({n, tail, tail.as_double(), n == 0 && spec.get_if<HalfLinePathSpec>() ? 0u : 1u,
                        ExtendedCount::finite(1)});
  }
  const bool finite = t.sum_from(0).is_finite();
  r.volume_tends_to_zero = finite;
  r.volume_bounded = finite;
  r.diameter_tends_to_zero = finite;
  r.boundary_below_ends = false;
  return r;
}

}  // namespace qgends
