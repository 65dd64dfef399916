#include "qgends/ends.hpp"

#include "qgends/error.hpp"
#include "qgends/metric_graph.hpp"
#include "qgends/parallel.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace qgends {

namespace {

SeriesSum add(const SeriesSum& a, const SeriesSum& b) {
  if (a.is_divergent() || b.is_divergent()) return SeriesSum::divergent();
  return SeriesSum::finite(a.value() + b.value());
}

SeriesSum scale(const SeriesSum& a, const Number& c) {
  if (a.is_divergent()) return a;
  return SeriesSum::finite(a.value() * c);
}

/// Subtree below one vertex of generation n, where layer k holds layer_k edges.
SeriesSum subtree_volume(const TermSequence& layer_edges, const TermSequence& ell, std::size_t n) {
  const Number count = n == 0 ? Number(1) : layer_edges.eval(n - 1);
  return scale((layer_edges * ell).sum_from(n), Number(1) / count);
}

constexpr std::string_view kSitePrefix = "site/";

EndDescriptor make(std::string id, std::string ray, Freeness freeness, ExtendedCount mult) {
  EndDescriptor d;
  d.id = std::move(id);
  d.ray = std::move(ray);
  d.freeness = freeness;
  d.multiplicity = mult;
  return d;
}

std::vector<EndDescriptor> census(const GraphFamilySpec& spec) {
  std::vector<EndDescriptor> out;
  if (spec.get_if<HalfLinePathSpec>()) {
    out.push_back(make("tail", "vertices 0, 1, 2, ...", Freeness::Free, ExtendedCount::finite(1)));
  } else if (spec.get_if<FullLinePathSpec>()) {
    out.push_back(make("+", "vertices 0, 1, 2, ...", Freeness::Free, ExtendedCount::finite(1)));
    out.push_back(make("-", "vertices 0, -1, -2, ...", Freeness::Free, ExtendedCount::finite(1)));
  } else if (spec.get_if<RadialTreeSpec>()) {
    out.push_back(make("branch", "radial branch from the root", Freeness::NonFree, ExtendedCount::uncountable()));
  } else if (const auto* s = spec.get_if<SphereSymmetricSpec>()) {
    switch (s->ends) {
      case DeclaredEnds::One:
        out.push_back(make("tail", "spheres S_0, S_1, S_2, ...", Freeness::Free, ExtendedCount::finite(1)));
        break;
      case DeclaredEnds::Two:
        out.push_back(make("+", "first half of every sphere", Freeness::Free, ExtendedCount::finite(1)));
        out.push_back(make("-", "second half of every sphere", Freeness::Free, ExtendedCount::finite(1)));
        break;
      case DeclaredEnds::Cantor:
        out.push_back(
            make("branch", "radial branch through the spheres", Freeness::NonFree, ExtendedCount::uncountable()));
        break;
    }
  } else if (const auto* c = spec.get_if<ChainWithAttachmentsSpec>()) {
    const std::vector<EndDescriptor> tmpl = census(*c->attachment);
    ExtendedCount tmpl_total;
    for (const auto& d : tmpl) tmpl_total = tmpl_total + d.multiplicity;
    // The chain end is a limit of the attachment ends as soon as there are any.
    out.push_back(make("chain", "chain vertices 0, 1, 2, ...",
                       tmpl_total.is_zero() ? Freeness::Free : Freeness::NonFree, ExtendedCount::finite(1)));
    for (const auto& d : tmpl) {
      out.push_back(make(std::string(kSitePrefix) + d.id, "attachment end '" + d.id + "' at every chain vertex",
                         d.freeness, ExtendedCount::countably_many(d.multiplicity)));
    }
  }
  return out;
}

}  // namespace

SeriesSum end_neighbourhood_volume(const GraphFamilySpec& spec, const EndDescriptor& end, std::size_t n) {
  auto unknown = [&]() -> SeriesSum {
    fail(ErrorKind::UnsupportedFamily, "end '" + end.id + "' is not in the census of " +
                                           std::string(spec.variant_name()));
  };
  if (const auto* h = spec.get_if<HalfLinePathSpec>()) {
    if (end.id != "tail") return unknown();
    return TermSequence::from_spec(h->ell).sum_from(n);
  }
  if (const auto* f = spec.get_if<FullLinePathSpec>()) {
    if (end.id == "+") return TermSequence::from_spec(f->ell_pos).sum_from(n);
    if (end.id == "-") return TermSequence::from_spec(f->ell_neg).sum_from(n);
    return unknown();
  }
  if (const auto* t = spec.get_if<RadialTreeSpec>()) {
    if (end.id != "branch") return unknown();
    return subtree_volume(branching_products(t->b), TermSequence::from_spec(t->ell), n);
  }
  if (const auto* s = spec.get_if<SphereSymmetricSpec>()) {
    const TermSequence edges = sphere_layer_edges(*s);
    const TermSequence ell = TermSequence::from_spec(s->ell);
    switch (s->ends) {
      case DeclaredEnds::One:
        if (end.id != "tail") return unknown();
        return (edges * ell).sum_from(n);
      case DeclaredEnds::Two:
        if (end.id != "+" && end.id != "-") return unknown();
        return scale((edges * ell).sum_from(n), Number::exact(Rational(1, 2)));
      case DeclaredEnds::Cantor:
        if (end.id != "branch") return unknown();
        return subtree_volume(edges, ell, n);
    }
  }
  if (const auto* c = spec.get_if<ChainWithAttachmentsSpec>()) {
    const TermSequence scaling = TermSequence::from_spec(c->scaling);
    if (end.id == "chain") {
      const SeriesSum v = volume_family(*c->attachment);
      const SeriesSum chain = TermSequence::from_spec(c->ell).sum_from(n);
      if (v.is_divergent()) return v;
      return add(chain, scale(scaling.sum_from(n), v.value()));
    }
    if (end.id.starts_with(kSitePrefix)) {
      EndDescriptor inner = end;
      inner.id = end.id.substr(kSitePrefix.size());
      return scale(end_neighbourhood_volume(*c->attachment, inner, n), scaling.eval(0));
    }
    return unknown();
  }
  return unknown();
}

VolumeClassification classify_volume(const GraphFamilySpec& spec, const EndDescriptor& end) {
  VolumeClassification out;
  out.tail_volume = end_neighbourhood_volume(spec, end, 0);
  out.volume_class = out.tail_volume.is_finite() ? VolumeClass::FiniteVolume : VolumeClass::InfiniteVolume;
  return out;
}

EndSummary enumerate_ends(const GraphFamilySpec& spec) {
  EndSummary s;
  s.descriptors = census(spec);
  for (auto& d : s.descriptors) {
    const VolumeClassification v = classify_volume(spec, d);
    d.volume_class = v.volume_class;
    d.tail_volume = v.tail_volume;
    s.total = s.total + d.multiplicity;
    if (d.volume_class == VolumeClass::FiniteVolume) {
      s.finite_volume = s.finite_volume + d.multiplicity;
      if (d.freeness == Freeness::Free) {
        s.free_finite_volume = s.free_finite_volume + d.multiplicity;
      } else if (!d.multiplicity.is_zero()) {
        s.has_nonfree_finite_volume = true;
      }
    }
  }
  return s;
}

ExtendedCount count_finite_volume(const GraphFamilySpec& spec) { return enumerate_ends(spec).finite_volume; }

Freeness detect_free(const GraphFamilySpec& spec, const EndDescriptor& end) {
  for (const auto& d : census(spec)) {
    if (d.id == end.id) return d.freeness;
  }
  fail(ErrorKind::UnsupportedFamily, "end '" + end.id + "' is not in the census");
}

bool has_nonfree_finite_volume(const GraphFamilySpec& spec) {
  return enumerate_ends(spec).has_nonfree_finite_volume;
}

namespace {

// Labels the components of {v : depth(v) >= radius}; -1 for vertices inside the ball.
std::vector<long> label_outside(const MetricGraph& g, unsigned radius, std::size_t& count) {
  std::vector<long> label(g.vertex_count(), -1);
  count = 0;
  for (VertexId s = 0; s < g.vertex_count(); ++s) {
    if (label[s] != -1 || g.vertex(s).depth < radius) continue;
    const long id = static_cast<long>(count++);
    std::vector<VertexId> stack{s};
    label[s] = id;
    while (!stack.empty()) {
      const VertexId u = stack.back();
      stack.pop_back();
      for (EdgeId e : g.incident(u)) {
        const VertexId w = g.edge(e).tail == u ? g.edge(e).head : g.edge(e).tail;
        if (label[w] == -1 && g.vertex(w).depth >= radius) {
          label[w] = id;
          stack.push_back(w);
        }
      }
    }
  }
  return label;
}

}  // namespace

namespace {

// Extra depth so that finite pieces hanging off the ball never reach the cut.
unsigned finite_margin(const GraphFamilySpec& spec) {
  const auto* c = spec.get_if<ChainWithAttachmentsSpec>();
  if (!c) return 0;
  const auto* f = c->attachment->get_if<FiniteGraphSpec>();
  if (!f) return 0;
  const MetricGraph g = truncate(*c->attachment, std::max<std::uint32_t>(1, f->vertex_count));
  unsigned depth = 0;
  for (const auto& v : g.vertices()) depth = std::max(depth, v.depth);
  return depth;
}

// Components of the complement of the radius-R ball that contain a cut vertex,
// numbered in order of their smallest vertex id.
std::vector<long> unbounded_components(const MetricGraph& g, unsigned radius, std::size_t& count) {
  std::size_t raw = 0;
  const auto label = label_outside(g, radius, raw);
  std::vector<char> unbounded(raw, 0);
  for (VertexId v = 0; v < g.vertex_count(); ++v)
    if (label[v] >= 0 && g.is_boundary(v)) unbounded[label[v]] = 1;
  std::vector<long> renumber(raw, -1);
  count = 0;
  for (std::size_t c = 0; c < raw; ++c)
    if (unbounded[c]) renumber[c] = static_cast<long>(count++);
  std::vector<long> out(g.vertex_count(), -1);
  for (VertexId v = 0; v < g.vertex_count(); ++v)
    if (label[v] >= 0) out[v] = renumber[label[v]];
  return out;
}

ComponentLevel level_of(const MetricGraph& g, unsigned radius) {
  ComponentLevel out;
  out.radius = radius;
  std::size_t n_parent = 0;
  const auto here = unbounded_components(g, radius, out.count);
  const auto up = unbounded_components(g, radius == 0 ? 0 : radius - 1, n_parent);
  out.parent.assign(out.count, 0);
  out.sizes.assign(out.count, 0);
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (here[v] < 0) continue;
    ++out.sizes[here[v]];
    out.parent[here[v]] = static_cast<std::size_t>(up[v]);
  }
  return out;
}

}  // namespace

ComponentLevel truncation_components(const GraphFamilySpec& spec, unsigned radius) {
  return level_of(truncate(spec, radius + 2 + finite_margin(spec)), radius);
}

std::vector<ComponentLevel> component_levels(const GraphFamilySpec& spec, unsigned max_radius) {
  const MetricGraph g = truncate(spec, max_radius + 2 + finite_margin(spec));
  std::vector<ComponentLevel> out(max_radius);
  parallel_for(max_radius, [&](std::size_t i) { out[i] = level_of(g, static_cast<unsigned>(i + 1)); });
  return out;
}

std::string_view to_string(VolumeClass c) {
  return c == VolumeClass::FiniteVolume ? "FiniteVolume" : "InfiniteVolume";
}

std::string_view to_string(Freeness f) { return f == Freeness::Free ? "Free" : "NonFree"; }

nlohmann::json to_json(const EndSummary& s) {
  nlohmann::json ds = nlohmann::json::array();
  for (const auto& d : s.descriptors) {
    nlohmann::json j = {{"id", d.id},
                        {"ray", d.ray},
                        {"volume_class", to_string(d.volume_class)},
                        {"freeness", to_string(d.freeness)},
                        {"multiplicity", d.multiplicity.to_string()}};
    if (d.tail_volume.is_finite()) {
      j["tail_volume"] = d.tail_volume.value().to_string();
      j["tail_volume_value"] = d.tail_volume.as_double();
    }
    ds.push_back(std::move(j));
  }
  return {{"total", s.total.to_string()},
          {"finite_volume", s.finite_volume.to_string()},
          {"free_finite_volume", s.free_finite_volume.to_string()},
          {"has_nonfree_finite_volume", s.has_nonfree_finite_volume},
          {"descriptors", ds}};
}

std::string components_to_csv(const std::vector<ComponentLevel>& levels) {
  std::ostringstream out;
  out << "radius,components,parents\n";
  for (const auto& lv : levels) {
    out << lv.radius << ',' << lv.count << ',';
    for (std::size_t i = 0; i < lv.parent.size(); ++i) out << (i ? " " : "") << lv.parent[i];
    out << '\n';
  }
  return out.str();
}

}  // namespace qgends
