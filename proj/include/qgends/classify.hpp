#pragma once

#include "qgends/ends.hpp"
#include "qgends/extended_count.hpp"
#include "qgends/graphspec.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qgends {

enum class Verdict { Yes, No, Inconclusive };
enum class GaffneyStatus { SelfAdjoint, ClosedNotSelfAdjoint, NotClosed, Unknown };

struct RuleApplication {
  std::string rule_id;
  std::string citation;
  bool fired = false;
  std::map<std::string, std::string> inputs;
};

struct KirchhoffDecision {
  Verdict verdict = Verdict::Inconclusive;
  std::string rule_id;
  std::string citation;
};

struct GaffneyDecision {
  GaffneyStatus status = GaffneyStatus::Unknown;
  std::string rule_id;
  std::string citation;
};

struct MarkovianDecision {
  bool unique = false;
  std::string rule_id;
  std::string citation;
};

struct DeficiencyRecord {
  ExtendedCount gaffney_min;
  ExtendedCount kirchhoff_min_lower_bound;
  std::optional<ExtendedCount> kirchhoff_min_exact;
  /// Set when the exact Kirchhoff value is left open.
  std::string kirchhoff_condition;
};

struct ClassificationReport {
  std::string spec_name;
  std::string variant;
  EndSummary ends;
  SeriesSum volume = SeriesSum::divergent();
  KirchhoffDecision kirchhoff_selfadjoint;
  GaffneyDecision gaffney;
  MarkovianDecision markovian;
  DeficiencyRecord deficiency;
  std::vector<RuleApplication> rule_trace;
};

/// First matching rule of the fixed decision list wins. Evaluated rules are
/// appended to `trace` when given.
GaffneyDecision gaffney_status(const GraphFamilySpec& spec, std::vector<RuleApplication>* trace = nullptr);
DeficiencyRecord deficiency_indices(const GraphFamilySpec& spec);
KirchhoffDecision kirchhoff_selfadjoint_test(const GraphFamilySpec& spec,
                                             std::vector<RuleApplication>* trace = nullptr);
/// Sum of star weights along every ray class diverges (sufficient for
/// completeness of the star path metric).
bool star_sums_diverge(const GraphFamilySpec& spec);

ClassificationReport classify(const GraphFamilySpec& spec);

std::string_view to_string(Verdict v);
std::string_view to_string(GaffneyStatus s);
nlohmann::json to_json(const ClassificationReport& report);
std::string to_table(const ClassificationReport& report);

}  // namespace qgends
