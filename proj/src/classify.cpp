#include "qgends/classify.hpp"

#include "qgends/error.hpp"
#include "qgends/metric_graph.hpp"

#include <iomanip>
#include <sstream>

namespace qgends {

namespace {

struct Rule {
  const char* id;
  const char* citation;
};

constexpr Rule kNoFiniteVolumeEnds{"gaffney.no-finite-volume-ends", "Lemma 3.4"};
constexpr Rule kFinitelyMany{"gaffney.finitely-many-finite-volume-ends", "Theorem 3.10(i); Theorem 3.9"};
constexpr Rule kNonFree{"gaffney.non-free-finite-volume-end", "Theorem 3.10(ii)"};
constexpr Rule kSubgraphs{"gaffney.shrinking-subgraphs", "Proposition 4.1"};
constexpr Rule kSubgraphsDiameter{"gaffney.shrinking-subgraphs-diameter", "Remark 4.2"};
constexpr Rule kFiniteVolume{"gaffney.finite-total-volume", "Corollary 3.11"};
constexpr Rule kCayley{"gaffney.cayley", "Corollary 3.12"};
constexpr Rule kNone{"gaffney.none", "no applicable rule"};
constexpr Rule kStarMetric{"kirchhoff.star-metric-complete", "Theorem 2.5"};
constexpr Rule kRadialVolume{"kirchhoff.radial-infinite-volume", "Lemma 4.2(i)"};
constexpr Rule kDeficiencyBound{"kirchhoff.deficiency-lower-bound", "Remark 3.14(i)"};
constexpr Rule kKirchhoffNone{"kirchhoff.none", "no applicable rule"};
constexpr Rule kMarkov{"markovian.uniqueness", "Lemma 3.4"};
constexpr Rule kDeficiency{"deficiency.finite-volume-ends", "Theorem 3.9"};

RuleApplication apply(const Rule& r, bool fired, std::map<std::string, std::string> inputs) {
  return {r.id, r.citation, fired, std::move(inputs)};
}

void record(std::vector<RuleApplication>* trace, RuleApplication a) {
  if (trace) trace->push_back(std::move(a));
}

std::string sum_string(const SeriesSum& s) { return s.is_finite() ? s.value().to_string() : "divergent"; }

bool divergent(const TermSequence& t) { return t.sum_from(0).is_divergent(); }

}  // namespace

bool star_sums_diverge(const GraphFamilySpec& spec) {
  if (const auto* h = spec.get_if<HalfLinePathSpec>()) return seq_series_sum(h->ell).is_divergent();
  if (const auto* f = spec.get_if<FullLinePathSpec>()) {
    return seq_series_sum(f->ell_pos).is_divergent() && seq_series_sum(f->ell_neg).is_divergent();
  }
  if (const auto* t = spec.get_if<RadialTreeSpec>()) {
    // m(v) = ell_{n-1} + b_n ell_n on generation n.
    const TermSequence ell = TermSequence::from_spec(t->ell);
    return divergent(ell) || divergent(TermSequence::from_spec(t->b) * ell);
  }
  if (const auto* s = spec.get_if<SphereSymmetricSpec>()) {
    const TermSequence size = TermSequence::from_spec(s->sphere_sizes);
    const TermSequence ell = TermSequence::from_spec(s->ell);
    if (s->ends == DeclaredEnds::Cantor) {
      return divergent(ell) || divergent(size.shifted(1) * size.reciprocal() * ell);
    }
    // Every vertex of S_n sees the whole (half) sphere above and below it.
    return divergent(size * ell) || divergent(size.shifted(1) * ell);
  }
  if (const auto* c = spec.get_if<ChainWithAttachmentsSpec>()) {
    const bool chain = seq_series_sum(c->ell).is_divergent() || seq_series_sum(c->scaling).is_divergent();
    return chain && star_sums_diverge(*c->attachment);
  }
  return true;
}

KirchhoffDecision kirchhoff_selfadjoint_test(const GraphFamilySpec& spec, std::vector<RuleApplication>* trace) {
  const bool complete = star_sums_diverge(spec);
  record(trace, apply(kStarMetric, complete, {{"star_weight_sums_diverge_on_all_rays", complete ? "true" : "false"}}));
  if (complete) return {Verdict::Yes, kStarMetric.id, kStarMetric.citation};

  if (spec.get_if<RadialTreeSpec>()) {
    const SeriesSum v = volume_family(spec);
    record(trace, apply(kRadialVolume, v.is_divergent(), {{"volume", sum_string(v)}}));
    if (v.is_divergent()) return {Verdict::Yes, kRadialVolume.id, kRadialVolume.citation};
  }

  const ExtendedCount c0 = count_finite_volume(spec);
  record(trace, apply(kDeficiencyBound, !c0.is_zero(), {{"finite_volume_ends", c0.to_string()}}));
  if (!c0.is_zero()) return {Verdict::No, kDeficiencyBound.id, kDeficiencyBound.citation};

  record(trace, apply(kKirchhoffNone, true, {}));
  return {Verdict::Inconclusive, kKirchhoffNone.id, kKirchhoffNone.citation};
}

GaffneyDecision gaffney_status(const GraphFamilySpec& spec, std::vector<RuleApplication>* trace) {
  const EndSummary ends = enumerate_ends(spec);
  const ExtendedCount c0 = ends.finite_volume;
  const std::string c0s = c0.to_string();

  const bool none = c0.is_zero();
  record(trace, apply(kNoFiniteVolumeEnds, none, {{"finite_volume_ends", c0s}}));
  if (none) return {GaffneyStatus::SelfAdjoint, kNoFiniteVolumeEnds.id, kNoFiniteVolumeEnds.citation};

  const bool finitely_many = c0.is_finite();
  record(trace, apply(kFinitelyMany, finitely_many, {{"finite_volume_ends", c0s}}));
  if (finitely_many) return {GaffneyStatus::ClosedNotSelfAdjoint, kFinitelyMany.id, kFinitelyMany.citation};

  record(trace, apply(kNonFree, ends.has_nonfree_finite_volume,
                      {{"has_nonfree_finite_volume", ends.has_nonfree_finite_volume ? "true" : "false"}}));
  if (ends.has_nonfree_finite_volume) return {GaffneyStatus::NotClosed, kNonFree.id, kNonFree.citation};

  try {
    const SubgraphSequenceReport seq = subgraph_sequence(spec, 8);
    std::map<std::string, std::string> in = {
        {"subgraphs", seq.description},
        {"volume_tends_to_zero", seq.volume_tends_to_zero ? "true" : "false"},
        {"boundary_below_end_count", seq.boundary_below_ends ? "true" : "false"}};
    record(trace, apply(kSubgraphs, seq.qualifies_by_volume(), in));
    if (seq.qualifies_by_volume()) return {GaffneyStatus::NotClosed, kSubgraphs.id, kSubgraphs.citation};
    in["volume_bounded"] = seq.volume_bounded ? "true" : "false";
    in["diameter_tends_to_zero"] = seq.diameter_tends_to_zero ? "true" : "false";
    record(trace, apply(kSubgraphsDiameter, seq.qualifies(), in));
    if (seq.qualifies()) return {GaffneyStatus::NotClosed, kSubgraphsDiameter.id, kSubgraphsDiameter.citation};
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::UnsupportedFamily) throw;
    record(trace, apply(kSubgraphs, false, {{"subgraphs", "none (no tail decomposition)"}}));
  }

  const SeriesSum vol = volume_family(spec);
  record(trace, apply(kFiniteVolume, vol.is_finite(), {{"volume", sum_string(vol)}, {"ends", ends.total.to_string()}}));
  if (vol.is_finite()) {
    // With finite volume every end has finite volume, so the end count decides.
    return {ends.total.is_finite() ? GaffneyStatus::ClosedNotSelfAdjoint : GaffneyStatus::NotClosed,
            kFiniteVolume.id, kFiniteVolume.citation};
  }

  const auto* sphere = spec.get_if<SphereSymmetricSpec>();
  const bool cayley = sphere && sphere->cayley;
  record(trace, apply(kCayley, cayley, {{"cayley", cayley ? "true" : "false"}, {"ends", ends.total.to_string()}}));
  if (cayley) {
    const bool not_closed = ends.total.is_infinite() && !c0.is_zero();
    return {not_closed ? GaffneyStatus::NotClosed : GaffneyStatus::ClosedNotSelfAdjoint, kCayley.id,
            kCayley.citation};
  }

  record(trace, apply(kNone, true, {}));
  return {GaffneyStatus::Unknown, kNone.id, kNone.citation};
}

DeficiencyRecord deficiency_indices(const GraphFamilySpec& spec) {
  DeficiencyRecord d;
  d.gaffney_min = count_finite_volume(spec);
  d.kirchhoff_min_lower_bound = d.gaffney_min;
  if (d.gaffney_min.is_infinite()) {
    d.kirchhoff_min_exact = d.gaffney_min;
  } else {
    d.kirchhoff_condition = "requires dom(H) ⊂ H¹";
  }
  return d;
}

ClassificationReport classify(const GraphFamilySpec& spec) {
  ClassificationReport r;
  r.spec_name = spec.name;
  r.variant = std::string(spec.variant_name());
  r.ends = enumerate_ends(spec);
  r.volume = volume_family(spec);
  r.gaffney = gaffney_status(spec, &r.rule_trace);
  r.kirchhoff_selfadjoint = kirchhoff_selfadjoint_test(spec, &r.rule_trace);
  r.markovian = {r.gaffney.status == GaffneyStatus::SelfAdjoint, kMarkov.id, kMarkov.citation};
  r.rule_trace.push_back(apply(kMarkov, true, {{"gaffney_status", std::string(to_string(r.gaffney.status))}}));
  r.deficiency = deficiency_indices(spec);
  r.rule_trace.push_back(apply(kDeficiency, true, {{"finite_volume_ends", r.deficiency.gaffney_min.to_string()}}));
  return r;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Yes: return "Yes";
    case Verdict::No: return "No";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "";
}

std::string_view to_string(GaffneyStatus s) {
  switch (s) {
    case GaffneyStatus::SelfAdjoint: return "SelfAdjoint";
    case GaffneyStatus::ClosedNotSelfAdjoint: return "ClosedNotSelfAdjoint";
    case GaffneyStatus::NotClosed: return "NotClosed";
    case GaffneyStatus::Unknown: return "Unknown";
  }
  return "";
}

nlohmann::json to_json(const ClassificationReport& r) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& a : r.rule_trace) {
    trace.push_back({{"rule", a.rule_id}, {"citation", a.citation}, {"fired", a.fired}, {"inputs", a.inputs}});
  }
  nlohmann::json deficiency = {{"gaffney_min", r.deficiency.gaffney_min.to_string()},
                               {"kirchhoff_min_lower_bound", r.deficiency.kirchhoff_min_lower_bound.to_string()},
                               {"kirchhoff_min_exact", nullptr}};
  if (r.deficiency.kirchhoff_min_exact) {
    deficiency["kirchhoff_min_exact"] = r.deficiency.kirchhoff_min_exact->to_string();
  } else {
    deficiency["kirchhoff_min_exact_condition"] = r.deficiency.kirchhoff_condition;
  }
  return {{"schema", "qgends-report/1"},
          {"spec", r.spec_name},
          {"variant", r.variant},
          {"volume", sum_string(r.volume)},
          {"ends", to_json(r.ends)},
          {"gaffney_status", {{"value", to_string(r.gaffney.status)}, {"rule", r.gaffney.rule_id}, {"citation", r.gaffney.citation}}},
          {"kirchhoff_selfadjoint",
           {{"value", to_string(r.kirchhoff_selfadjoint.verdict)},
            {"rule", r.kirchhoff_selfadjoint.rule_id},
            {"citation", r.kirchhoff_selfadjoint.citation}}},
          {"markovian_unique", {{"value", r.markovian.unique}, {"rule", r.markovian.rule_id}, {"citation", r.markovian.citation}}},
          {"deficiency", deficiency},
          {"rule_trace", trace}};
}

std::string to_table(const ClassificationReport& r) {
  std::ostringstream out;
  auto row = [&](const std::string& k, const std::string& v, const std::string& c) {
    out << std::left << std::setw(28) << k << std::setw(24) << v << c << '\n';
  };
  row("quantity", "value", "rule");
  row("variant", r.variant, "");
  row("volume", sum_string(r.volume), "");
  row("ends", r.ends.total.to_string(), "");
  row("finite volume ends", r.ends.finite_volume.to_string(), "");
  row("gaffney status", std::string(to_string(r.gaffney.status)), r.gaffney.citation);
  row("kirchhoff self-adjoint", std::string(to_string(r.kirchhoff_selfadjoint.verdict)),
      r.kirchhoff_selfadjoint.citation);
  row("markovian unique", r.markovian.unique ? "true" : "false", r.markovian.citation);
  row("deficiency (gaffney min)", r.deficiency.gaffney_min.to_string(), kDeficiency.citation);
  row("deficiency (kirchhoff min)",
      r.deficiency.kirchhoff_min_exact ? r.deficiency.kirchhoff_min_exact->to_string()
                                       : ">= " + r.deficiency.kirchhoff_min_lower_bound.to_string(),
      r.deficiency.kirchhoff_min_exact ? "" : r.deficiency.kirchhoff_condition);
  return out.str();
}

}  // namespace qgends
