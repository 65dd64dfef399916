#include "qgends/graphspec.hpp"

#include "qgends/error.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <utility>

namespace qgends {

using nlohmann::json;

namespace {

// "1.25e-3" -> 125/100000, exactly.
Rational decimal_to_rational(const std::string& text) {
  std::string mantissa = text;
  long exponent = 0;
  if (const auto e = text.find_first_of("eE"); e != std::string::npos) {
    mantissa = text.substr(0, e);
    exponent = std::stol(text.substr(e + 1));
  }
  bool negative = false;
  if (!mantissa.empty() && (mantissa[0] == '-' || mantissa[0] == '+')) {
    negative = mantissa[0] == '-';
    mantissa.erase(0, 1);
  }
  std::string digits;
  for (char c : mantissa) {
    if (c == '.') {
      continue;
    }
    if (c < '0' || c > '9') fail(ErrorKind::SchemaError, "malformed decimal '" + text + "'");
    digits.push_back(c);
  }
  if (digits.empty()) fail(ErrorKind::SchemaError, "malformed decimal '" + text + "'");
  digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));
  if (const auto dot = mantissa.find('.'); dot != std::string::npos) {
    exponent -= static_cast<long>(mantissa.size() - dot - 1);
  }
  Rational q{boost::multiprecision::cpp_int(digits)};
  const Rational ten = 10;
  for (long i = 0; i < std::abs(exponent); ++i) {
    if (exponent > 0) {
      q *= ten;
    } else {
      q /= ten;
    }
  }
  return negative ? Rational(-q) : q;
}

std::string shortest_decimal(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void require_object(const json& doc, std::string_view what) {
  if (!doc.is_object()) fail(ErrorKind::SchemaError, std::string(what) + " must be a JSON object");
}

void require_keys(const json& doc, const std::set<std::string>& allowed,
                  const std::set<std::string>& required, std::string_view what) {
  for (const auto& [key, value] : doc.items()) {
    if (!allowed.contains(key)) {
      fail(ErrorKind::SchemaError, "unknown field '" + key + "' in " + std::string(what));
    }
  }
  for (const auto& key : required) {
    if (!doc.contains(key)) {
      fail(ErrorKind::SchemaError, "missing field '" + key + "' in " + std::string(what));
    }
  }
}

enum class SequenceRole { Length, Branching, Size, Scaling };

void check_positive(const SequenceSpec& s, SequenceRole role, std::string_view what) {
  const auto complain = [&](const std::string& detail) {
    const ErrorKind kind =
        role == SequenceRole::Length ? ErrorKind::NonPositiveLength : ErrorKind::InvariantError;
    fail(kind, std::string(what) + ": " + detail);
  };
  const auto positive_finite = [](const Number& n) {
    return n.certainly_positive() && std::isfinite(n.value());
  };
  switch (s.kind) {
    case SequenceSpec::Kind::Constant:
      if (!positive_finite(s.a)) complain("value " + s.a.to_string() + " is not positive");
      break;
    case SequenceSpec::Kind::Geometric:
      if (!positive_finite(s.a)) complain("coefficient " + s.a.to_string() + " is not positive");
      if (!positive_finite(s.r)) complain("ratio " + s.r.to_string() + " is not positive");
      break;
    case SequenceSpec::Kind::Power:
      if (!positive_finite(s.a)) complain("coefficient " + s.a.to_string() + " is not positive");
      if (!std::isfinite(s.p.value())) complain("exponent is not finite");
      break;
    case SequenceSpec::Kind::Explicit:
      for (const auto& v : s.prefix) {
        if (!positive_finite(v)) complain("term " + v.to_string() + " is not positive");
      }
      check_positive(*s.tail, role, what);
      break;
  }
}

void validate_branching(const SequenceSpec& b) {
  check_positive(b, SequenceRole::Branching, "branching numbers");
  const TermSequence t = TermSequence::from_spec(b);
  for (const auto& v : t.prefix()) {
    if (!v.is_exact() || !v.is_integer() || v.rational() < 2) {
      fail(ErrorKind::InvariantError, "branching number " + v.to_string() + " is not an integer >= 2");
    }
  }
  if (!t.constant_tail()) {
    fail(ErrorKind::InvariantError, "branching numbers must have a constant tail");
  }
  const Number& c = t.coefficient();
  if (!c.is_exact() || !c.is_integer() || c.rational() < 2) {
    fail(ErrorKind::InvariantError, "branching number " + c.to_string() + " is not an integer >= 2");
  }
}

void validate_sphere(const SphereSymmetricSpec& s) {
  check_positive(s.sphere_sizes, SequenceRole::Size, "sphere sizes");
  check_positive(s.ell, SequenceRole::Length, "sphere edge lengths");
  const TermSequence sizes = TermSequence::from_spec(s.sphere_sizes);
  if (!sizes.integer_valued()) {
    fail(ErrorKind::InvariantError, "sphere sizes must be integer valued");
  }
  if (sizes.eval(0) != Number(1)) {
    fail(ErrorKind::InvariantError, "the root sphere must contain exactly one vertex");
  }
  constexpr std::size_t kChecked = 64;
  const std::size_t horizon = sizes.prefix_size() + kChecked;
  switch (s.ends) {
    case DeclaredEnds::One:
      break;
    case DeclaredEnds::Two:
      for (std::size_t n = 1; n < horizon; ++n) {
        const Number v = sizes.eval(n);
        if (!v.is_exact() || !v.is_integer() ||
            boost::multiprecision::numerator(v.rational()) % 2 != 0) {
          fail(ErrorKind::InvariantError, "two-ended sphere model needs even sphere sizes");
        }
      }
      break;
    case DeclaredEnds::Cantor: {
      const TermSequence ratio = sizes.shifted(1) * sizes.reciprocal();
      for (std::size_t n = 0; n < horizon; ++n) {
        const Number q = ratio.eval(n);
        if (!q.is_exact() || !q.is_integer() || q.rational() < 2) {
          fail(ErrorKind::InvariantError,
               "Cantor sphere model needs |S_{n+1}| / |S_n| to be an integer >= 2");
        }
      }
      if (ratio.tends_to_zero() || ratio.total_exponent().certainly_positive()) {
        fail(ErrorKind::InvariantError, "sphere growth ratio must stay >= 2");
      }
      break;
    }
  }
}

void validate_finite(const FiniteGraphSpec& g) {
  if (g.vertex_count == 0) fail(ErrorKind::InvariantError, "finite graph without vertices");
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  std::vector<std::uint32_t> parent(g.vertex_count);
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : g.edges) {
    if (e.u >= g.vertex_count || e.v >= g.vertex_count) {
      fail(ErrorKind::InvariantError, "edge endpoint out of range");
    }
    if (e.u == e.v) fail(ErrorKind::InvariantError, "loops are not allowed");
    const auto key = std::minmax(e.u, e.v);
    if (!seen.insert(key).second) fail(ErrorKind::InvariantError, "multi-edges are not allowed");
    if (!e.length.certainly_positive() || !std::isfinite(e.length.value())) {
      fail(ErrorKind::NonPositiveLength, "edge length " + e.length.to_string() + " is not positive");
    }
    parent[find(e.u)] = find(e.v);
  }
  for (std::uint32_t v = 0; v < g.vertex_count; ++v) {
    if (find(v) != find(0)) fail(ErrorKind::InvariantError, "finite graph is not connected");
  }
}

SequenceSpec scale_sequence(const SequenceSpec& s, const Number& c) {
  SequenceSpec out = s;
  switch (s.kind) {
    case SequenceSpec::Kind::Constant:
    case SequenceSpec::Kind::Geometric:
    case SequenceSpec::Kind::Power:
      out.a = s.a * c;
      break;
    case SequenceSpec::Kind::Explicit:
      for (auto& v : out.prefix) v = v * c;
      out.tail = std::make_shared<const SequenceSpec>(scale_sequence(*s.tail, c));
      break;
  }
  return out;
}

const char* ends_name(DeclaredEnds e) {
  switch (e) {
    case DeclaredEnds::One: return "one";
    case DeclaredEnds::Two: return "two";
    case DeclaredEnds::Cantor: return "cantor";
  }
  return "one";
}

}  // namespace

std::string_view GraphFamilySpec::variant_name() const {
  struct Namer {
    std::string_view operator()(const RadialTreeSpec&) const { return "RadialTree"; }
    std::string_view operator()(const HalfLinePathSpec&) const { return "HalfLinePath"; }
    std::string_view operator()(const FullLinePathSpec&) const { return "FullLinePath"; }
    std::string_view operator()(const ChainWithAttachmentsSpec&) const { return "ChainWithAttachments"; }
    std::string_view operator()(const SphereSymmetricSpec&) const { return "SphereSymmetric"; }
    std::string_view operator()(const FiniteGraphSpec&) const { return "FiniteGraph"; }
  };
  return std::visit(Namer{}, variant);
}

Number number_from_json(const json& value, bool exact) {
  Number n;
  if (value.is_number_integer()) {
    n = value.is_number_unsigned() ? Number::exact(Rational(value.get<std::uint64_t>()))
                                   : Number::exact(Rational(value.get<std::int64_t>()));
  } else if (value.is_number_float()) {
    const double v = value.get<double>();
    if (!std::isfinite(v)) fail(ErrorKind::SchemaError, "non-finite number");
    n = Number::exact(decimal_to_rational(shortest_decimal(v)));
  } else if (value.is_string()) {
    const auto text = value.get<std::string>();
    if (text.find('/') != std::string::npos || text.find_first_of(".eE") == std::string::npos) {
      n = Number::parse(text);
    } else {
      n = Number::exact(decimal_to_rational(text));
    }
  } else {
    fail(ErrorKind::SchemaError, "expected a number or a \"p/q\" string");
  }
  if (!exact) {
    const double v = n.value();
    return Number::approx(v, std::abs(v) * std::numeric_limits<double>::epsilon());
  }
  return n;
}

json number_to_json(const Number& n) {
  if (n.is_exact()) {
    const Rational& q = n.rational();
    if (boost::multiprecision::denominator(q) == 1) {
      const auto num = boost::multiprecision::numerator(q);
      if (num <= std::numeric_limits<std::int64_t>::max() &&
          num >= std::numeric_limits<std::int64_t>::min()) {
        return static_cast<std::int64_t>(num);
      }
    }
    return q.str();
  }
  return n.value();
}

SequenceSpec sequence_from_json(const json& doc) {
  require_object(doc, "sequence");
  if (!doc.contains("kind") || !doc["kind"].is_string()) {
    fail(ErrorKind::SchemaError, "sequence needs a string 'kind'");
  }
  bool exact = true;
  if (doc.contains("exact")) {
    if (!doc["exact"].is_boolean()) fail(ErrorKind::SchemaError, "'exact' must be a boolean");
    exact = doc["exact"].get<bool>();
  }
  const auto kind = doc["kind"].get<std::string>();
  SequenceSpec s;
  if (kind == "constant") {
    require_keys(doc, {"kind", "c", "exact"}, {"c"}, "constant sequence");
    s = SequenceSpec::constant(number_from_json(doc["c"], exact));
  } else if (kind == "geometric") {
    require_keys(doc, {"kind", "a", "r", "exact"}, {"a", "r"}, "geometric sequence");
    s = SequenceSpec::geometric(number_from_json(doc["a"], exact), number_from_json(doc["r"], exact));
  } else if (kind == "power") {
    require_keys(doc, {"kind", "a", "p", "exact"}, {"a", "p"}, "power sequence");
    s = SequenceSpec::power(number_from_json(doc["a"], exact), number_from_json(doc["p"], exact));
  } else if (kind == "explicit") {
    require_keys(doc, {"kind", "prefix", "tail", "exact"}, {"prefix", "tail"}, "explicit sequence");
    if (!doc["prefix"].is_array()) fail(ErrorKind::SchemaError, "'prefix' must be an array");
    std::vector<Number> prefix;
    for (const auto& v : doc["prefix"]) prefix.push_back(number_from_json(v, exact));
    s = SequenceSpec::explicit_terms(std::move(prefix), sequence_from_json(doc["tail"]));
  } else {
    fail(ErrorKind::SchemaError, "unknown sequence kind '" + kind + "'");
  }
  s.exact = exact;
  return s;
}

json sequence_to_json(const SequenceSpec& s) {
  json doc;
  switch (s.kind) {
    case SequenceSpec::Kind::Constant:
      doc = {{"kind", "constant"}, {"c", number_to_json(s.a)}};
      break;
    case SequenceSpec::Kind::Geometric:
      doc = {{"kind", "geometric"}, {"a", number_to_json(s.a)}, {"r", number_to_json(s.r)}};
      break;
    case SequenceSpec::Kind::Power:
      doc = {{"kind", "power"}, {"a", number_to_json(s.a)}, {"p", number_to_json(s.p)}};
      break;
    case SequenceSpec::Kind::Explicit: {
      json prefix = json::array();
      for (const auto& v : s.prefix) prefix.push_back(number_to_json(v));
      doc = {{"kind", "explicit"}, {"prefix", prefix}, {"tail", sequence_to_json(*s.tail)}};
      break;
    }
  }
  if (!s.exact) doc["exact"] = false;
  return doc;
}

namespace {

GraphFamilySpec spec_from_json_impl(const json& doc, bool top_level) {
  require_object(doc, "spec");
  if (!doc.contains("variant") || !doc["variant"].is_string()) {
    fail(ErrorKind::SchemaError, "spec needs a string 'variant'");
  }
  if (doc.contains("schema")) {
    if (!doc["schema"].is_string() || doc["schema"].get<std::string>() != kSpecSchema) {
      fail(ErrorKind::SchemaError, "unsupported schema version (expected " + std::string(kSpecSchema) + ")");
    }
  }
  GraphFamilySpec spec;
  const auto variant = doc["variant"].get<std::string>();
  const std::set<std::string> common = {"variant", "schema", "name", "notes"};
  auto allowed = [&](std::initializer_list<std::string> extra) {
    std::set<std::string> keys = common;
    keys.insert(extra.begin(), extra.end());
    return keys;
  };
  if (variant == "RadialTree") {
    require_keys(doc, allowed({"b", "ell"}), {"b", "ell"}, "RadialTree");
    spec.variant = RadialTreeSpec{sequence_from_json(doc["b"]), sequence_from_json(doc["ell"])};
  } else if (variant == "HalfLinePath") {
    require_keys(doc, allowed({"ell"}), {"ell"}, "HalfLinePath");
    spec.variant = HalfLinePathSpec{sequence_from_json(doc["ell"])};
  } else if (variant == "FullLinePath") {
    require_keys(doc, allowed({"ell_pos", "ell_neg"}), {"ell_pos", "ell_neg"}, "FullLinePath");
    spec.variant = FullLinePathSpec{sequence_from_json(doc["ell_pos"]), sequence_from_json(doc["ell_neg"])};
  } else if (variant == "ChainWithAttachments") {
    require_keys(doc, allowed({"ell", "attachment", "scaling"}), {"ell", "attachment", "scaling"},
                 "ChainWithAttachments");
    ChainWithAttachmentsSpec chain;
    chain.ell = sequence_from_json(doc["ell"]);
    chain.attachment = std::make_shared<const GraphFamilySpec>(spec_from_json_impl(doc["attachment"], false));
    chain.scaling = sequence_from_json(doc["scaling"]);
    spec.variant = std::move(chain);
  } else if (variant == "SphereSymmetric") {
    require_keys(doc, allowed({"sphere_sizes", "ell", "ends", "cayley"}), {"sphere_sizes", "ell", "ends"},
                 "SphereSymmetric");
    SphereSymmetricSpec sphere;
    sphere.sphere_sizes = sequence_from_json(doc["sphere_sizes"]);
    sphere.ell = sequence_from_json(doc["ell"]);
    const auto& ends = doc["ends"];
    if (ends == "one" || ends == 1) {
      sphere.ends = DeclaredEnds::One;
    } else if (ends == "two" || ends == 2) {
      sphere.ends = DeclaredEnds::Two;
    } else if (ends == "cantor") {
      sphere.ends = DeclaredEnds::Cantor;
    } else {
      fail(ErrorKind::SchemaError, "'ends' must be one of \"one\", \"two\", \"cantor\"");
    }
    if (doc.contains("cayley")) {
      if (!doc["cayley"].is_boolean()) fail(ErrorKind::SchemaError, "'cayley' must be a boolean");
      sphere.cayley = doc["cayley"].get<bool>();
    }
    spec.variant = std::move(sphere);
  } else if (variant == "FiniteGraph") {
    require_keys(doc, allowed({"vertex_count", "edges"}), {"vertex_count", "edges"}, "FiniteGraph");
    if (!doc["vertex_count"].is_number_unsigned()) {
      fail(ErrorKind::SchemaError, "'vertex_count' must be a non-negative integer");
    }
    if (!doc["edges"].is_array()) fail(ErrorKind::SchemaError, "'edges' must be an array");
    FiniteGraphSpec g;
    g.vertex_count = doc["vertex_count"].get<std::uint32_t>();
    for (const auto& e : doc["edges"]) {
      require_object(e, "edge");
      require_keys(e, {"u", "v", "length"}, {"u", "v", "length"}, "edge");
      if (!e["u"].is_number_unsigned() || !e["v"].is_number_unsigned()) {
        fail(ErrorKind::SchemaError, "edge endpoints must be non-negative integers");
      }
      g.edges.push_back({e["u"].get<std::uint32_t>(), e["v"].get<std::uint32_t>(),
                         number_from_json(e["length"])});
    }
    spec.variant = std::move(g);
  } else {
    fail(ErrorKind::SchemaError, "unknown variant '" + variant + "'");
  }
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) fail(ErrorKind::SchemaError, "'name' must be a string");
    spec.name = doc["name"].get<std::string>();
  }
  if (doc.contains("notes")) {
    if (!doc["notes"].is_string()) fail(ErrorKind::SchemaError, "'notes' must be a string");
    spec.notes = doc["notes"].get<std::string>();
  }
  (void)top_level;
  return spec;
}

json spec_to_json_impl(const GraphFamilySpec& spec, bool top_level) {
  json doc;
  if (top_level) doc["schema"] = kSpecSchema;
  doc["variant"] = spec.variant_name();
  if (!spec.name.empty()) doc["name"] = spec.name;
  if (!spec.notes.empty()) doc["notes"] = spec.notes;
  if (const auto* t = spec.get_if<RadialTreeSpec>()) {
    doc["b"] = sequence_to_json(t->b);
    doc["ell"] = sequence_to_json(t->ell);
  } else if (const auto* h = spec.get_if<HalfLinePathSpec>()) {
    doc["ell"] = sequence_to_json(h->ell);
  } else if (const auto* f = spec.get_if<FullLinePathSpec>()) {
    doc["ell_pos"] = sequence_to_json(f->ell_pos);
    doc["ell_neg"] = sequence_to_json(f->ell_neg);
  } else if (const auto* c = spec.get_if<ChainWithAttachmentsSpec>()) {
    doc["ell"] = sequence_to_json(c->ell);
    doc["attachment"] = spec_to_json_impl(*c->attachment, false);
    doc["scaling"] = sequence_to_json(c->scaling);
  } else if (const auto* s = spec.get_if<SphereSymmetricSpec>()) {
    doc["sphere_sizes"] = sequence_to_json(s->sphere_sizes);
    doc["ell"] = sequence_to_json(s->ell);
    doc["ends"] = ends_name(s->ends);
    if (s->cayley) doc["cayley"] = true;
  } else if (const auto* g = spec.get_if<FiniteGraphSpec>()) {
    doc["vertex_count"] = g->vertex_count;
    json edges = json::array();
    for (const auto& e : g->edges) {
      edges.push_back({{"u", e.u}, {"v", e.v}, {"length", number_to_json(e.length)}});
    }
    doc["edges"] = edges;
  }
  return doc;
}

}  // namespace

void validate(const GraphFamilySpec& spec) {
  if (const auto* t = spec.get_if<RadialTreeSpec>()) {
    validate_branching(t->b);
    check_positive(t->ell, SequenceRole::Length, "edge lengths");
  } else if (const auto* h = spec.get_if<HalfLinePathSpec>()) {
    check_positive(h->ell, SequenceRole::Length, "edge lengths");
  } else if (const auto* f = spec.get_if<FullLinePathSpec>()) {
    check_positive(f->ell_pos, SequenceRole::Length, "positive-side edge lengths");
    check_positive(f->ell_neg, SequenceRole::Length, "negative-side edge lengths");
  } else if (const auto* c = spec.get_if<ChainWithAttachmentsSpec>()) {
    check_positive(c->ell, SequenceRole::Length, "chain edge lengths");
    check_positive(c->scaling, SequenceRole::Scaling, "attachment scaling");
    if (!c->attachment) fail(ErrorKind::SchemaError, "chain without attachment template");
    const auto* sphere = c->attachment->get_if<SphereSymmetricSpec>();
    if (c->attachment->get_if<ChainWithAttachmentsSpec>() || (sphere && sphere->ends == DeclaredEnds::One)) {
      fail(ErrorKind::InvariantError,
           "attachment template must be a RadialTree, HalfLinePath, FullLinePath, FiniteGraph or a "
           "two-ended/Cantor SphereSymmetric model");
    }
    validate(*c->attachment);
  } else if (const auto* s = spec.get_if<SphereSymmetricSpec>()) {
    validate_sphere(*s);
  } else if (const auto* g = spec.get_if<FiniteGraphSpec>()) {
    validate_finite(*g);
  }
}

GraphFamilySpec spec_from_json(const json& doc) {
  GraphFamilySpec spec = spec_from_json_impl(doc, true);
  validate(spec);
  return spec;
}

GraphFamilySpec parse_spec(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::SchemaError, std::string("malformed JSON: ") + e.what());
  }
  try {
    return spec_from_json(doc);
  } catch (const json::exception& e) {
    fail(ErrorKind::SchemaError, std::string("schema mismatch: ") + e.what());
  }
}

json spec_to_json(const GraphFamilySpec& spec) { return spec_to_json_impl(spec, true); }

std::string serialize_spec(const GraphFamilySpec& spec) { return spec_to_json(spec).dump(2); }

GraphFamilySpec scale_lengths(const GraphFamilySpec& spec, const Number& factor) {
  GraphFamilySpec out = spec;
  if (auto* t = std::get_if<RadialTreeSpec>(&out.variant)) {
    t->ell = scale_sequence(t->ell, factor);
  } else if (auto* h = std::get_if<HalfLinePathSpec>(&out.variant)) {
    h->ell = scale_sequence(h->ell, factor);
  } else if (auto* f = std::get_if<FullLinePathSpec>(&out.variant)) {
    f->ell_pos = scale_sequence(f->ell_pos, factor);
    f->ell_neg = scale_sequence(f->ell_neg, factor);
  } else if (auto* c = std::get_if<ChainWithAttachmentsSpec>(&out.variant)) {
    c->ell = scale_sequence(c->ell, factor);
    c->attachment = std::make_shared<const GraphFamilySpec>(scale_lengths(*c->attachment, factor));
  } else if (auto* s = std::get_if<SphereSymmetricSpec>(&out.variant)) {
    s->ell = scale_sequence(s->ell, factor);
  } else if (auto* g = std::get_if<FiniteGraphSpec>(&out.variant)) {
    for (auto& e : g->edges) e.length = e.length * factor;
  }
  return out;
}

}  // namespace qgends
