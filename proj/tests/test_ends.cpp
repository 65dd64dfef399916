#include "qgends/ends.hpp"
#include "qgends/error.hpp"
#include "qgends/graphspec.hpp"
#include "qgends/metric_graph.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

using namespace qgends;

namespace {

GraphFamilySpec spec(const std::string& text) { return parse_spec(text); }

std::string tree(const std::string& b, const std::string& r) {
  return R"({"variant":"RadialTree","b":{"kind":"constant","c":)" + b +
         R"(},"ell":{"kind":"geometric","a":1,"r":")" + r + R"("}})";
}
std::string half_line(const std::string& ell) { return R"({"variant":"HalfLinePath","ell":)" + ell + "}"; }
std::string full_line(const std::string& pos, const std::string& neg) {
  return R"({"variant":"FullLinePath","ell_pos":)" + pos + R"(,"ell_neg":)" + neg + "}";
}
const std::string kHalf = R"({"kind":"geometric","a":1,"r":"1/2"})";
const std::string kUnit = R"({"kind":"constant","c":1})";

std::string chain(const std::string& ell, const std::string& attachment, const std::string& scaling) {
  return R"({"variant":"ChainWithAttachments","ell":)" + ell + R"(,"attachment":)" + attachment +
         R"(,"scaling":)" + scaling + "}";
}

const EndDescriptor& find(const EndSummary& s, const std::string& id) {
  for (const auto& d : s.descriptors)
    if (d.id == id) return d;
  FAIL("missing end " << id);
  return s.descriptors.front();
}

// Binary tree built directly (no truncate) and the ball complement counted by union-find.
std::size_t binary_tree_components(unsigned radius) {
  const unsigned depth = radius + 2;
  const std::size_t n = (std::size_t(1) << (depth + 1)) - 1;  // heap layout, root 0
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto level = [](std::size_t v) { return unsigned(std::floor(std::log2(double(v + 1)))); };
  for (std::size_t v = 1; v < n; ++v) {
    const std::size_t p = (v - 1) / 2;
    if (level(p) >= radius && level(v) >= radius) parent[root(v)] = root(p);
  }
  std::size_t count = 0;
  for (std::size_t v = 0; v < n; ++v)
    if (level(v) >= radius && root(v) == v) ++count;
  return count;
}

}  // namespace

TEST_CASE("enumerate_ends examples") {
  CHECK(enumerate_ends(spec(half_line(kUnit))).total == ExtendedCount::finite(1));
  CHECK(enumerate_ends(spec(tree("2", "1/3"))).total == ExtendedCount::uncountable());
  // Two-ended attachments along an infinite-volume chain.
  const auto fig1 = spec(chain(kUnit, full_line(kHalf, kHalf), kHalf));
  const EndSummary s = enumerate_ends(fig1);
  CHECK(s.total == ExtendedCount::countable());
  CHECK(find(s, "chain").volume_class == VolumeClass::InfiniteVolume);
  CHECK(find(s, "site/+").multiplicity == ExtendedCount::countable());
  CHECK(s.finite_volume == ExtendedCount::countable());
  CHECK(enumerate_ends(spec(R"({"variant":"FiniteGraph","vertex_count":2,"edges":[{"u":0,"v":1,"length":1}]})"))
            .total == ExtendedCount::finite(0));
}

TEST_CASE("classify_volume examples") {
  const auto h = spec(half_line(kHalf));
  const EndDescriptor end = enumerate_ends(h).descriptors.front();
  const VolumeClassification v = classify_volume(h, end);
  CHECK(v.volume_class == VolumeClass::FiniteVolume);
  for (std::size_t n = 0; n < 6; ++n) {
    double oracle = 0.0;
    for (std::size_t k = n; k < n + 80; ++k) oracle += std::pow(2.0, -double(k));
    CHECK(end_neighbourhood_volume(h, end, n).as_double() == doctest::Approx(oracle).epsilon(1e-15));
  }
  CHECK(v.tail_volume.value() == Number(2));

  const auto u = spec(half_line(kUnit));
  CHECK(classify_volume(u, enumerate_ends(u).descriptors.front()).volume_class == VolumeClass::InfiniteVolume);

  const auto t = spec(tree("2", "1/4"));
  const EndSummary ts = enumerate_ends(t);
  for (const auto& d : ts.descriptors) CHECK(d.volume_class == VolumeClass::FiniteVolume);
  CHECK(ts.finite_volume == ts.total);
}

TEST_CASE("tree end neighbourhoods carry whole subtrees") {
  const auto t = spec(tree("2", "1/2"));
  const EndDescriptor d = enumerate_ends(t).descriptors.front();
  // Along a single ray the lengths are summable, but every subtree has infinite volume.
  CHECK(seq_series_sum(t.get_if<RadialTreeSpec>()->ell).is_finite());
  for (std::size_t n = 0; n < 5; ++n) CHECK(end_neighbourhood_volume(t, d, n).is_divergent());
}

TEST_CASE("count_finite_volume examples") {
  CHECK(count_finite_volume(spec(tree("2", "1/2"))) == ExtendedCount::finite(0));
  CHECK(count_finite_volume(spec(tree("2", "1/4"))) == ExtendedCount::uncountable());
  CHECK(count_finite_volume(spec(full_line(kHalf, kHalf))) == ExtendedCount::finite(2));
  CHECK(count_finite_volume(spec(full_line(kHalf, kUnit))) == ExtendedCount::finite(1));
}

TEST_CASE("detect_free examples") {
  const auto h = spec(half_line(kUnit));
  CHECK(detect_free(h, enumerate_ends(h).descriptors.front()) == Freeness::Free);
  const auto t = spec(tree("2", "1/4"));
  CHECK(detect_free(t, enumerate_ends(t).descriptors.front()) == Freeness::NonFree);
  CHECK(has_nonfree_finite_volume(t));
  CHECK_FALSE(has_nonfree_finite_volume(spec(tree("2", "1/2"))));
  CHECK_FALSE(has_nonfree_finite_volume(h));
}

TEST_CASE("census invariants over a corpus") {
  const std::vector<std::string> corpus = {
      half_line(kUnit),
      half_line(kHalf),
      full_line(kHalf, kHalf),
      full_line(kUnit, kHalf),
      tree("2", "1/2"),
      tree("2", "1/4"),
      tree("3", "1/8"),
      chain(kUnit, full_line(kHalf, kHalf), kHalf),
      chain(kHalf, full_line(kHalf, kHalf), kHalf),
      chain(kHalf, tree("2", "1/4"), kHalf),
      chain(kHalf, R"({"variant":"FiniteGraph","vertex_count":3,"edges":[{"u":0,"v":1,"length":1},{"u":1,"v":2,"length":1}]})", kHalf),
      chain(kUnit, half_line(kHalf), kUnit),
      R"({"variant":"SphereSymmetric","sphere_sizes":{"kind":"explicit","prefix":[1],"tail":{"kind":"constant","c":3}},"ell":{"kind":"geometric","a":1,"r":"1/4"},"ends":"one"})",
      R"({"variant":"SphereSymmetric","sphere_sizes":{"kind":"geometric","a":1,"r":2},"ell":{"kind":"geometric","a":1,"r":"1/8"},"ends":"cantor"})",
  };
  for (const auto& text : corpus) {
    CAPTURE(text);
    const auto f = spec(text);
    const EndSummary s = enumerate_ends(f);
    CHECK(s.finite_volume <= s.total);
    CHECK(s.free_finite_volume <= s.finite_volume);
    if (s.has_nonfree_finite_volume) CHECK_FALSE(s.finite_volume.is_zero());
    if (volume_family(f).is_finite()) CHECK(s.finite_volume == s.total);
    if (s.total.is_infinite()) {
      bool all_free = true;
      for (const auto& d : s.descriptors) all_free = all_free && d.freeness == Freeness::Free;
      CHECK_FALSE(all_free);
    }
    for (const auto& d : s.descriptors) {
      // Finite volume is decided on U_0 and must agree with every later neighbourhood.
      for (std::size_t n = 1; n < 4; ++n)
        CHECK(end_neighbourhood_volume(f, d, n).is_finite() == (d.volume_class == VolumeClass::FiniteVolume));
    }
  }
}

TEST_CASE("truncation component counts") {
  for (unsigned r = 1; r <= 12; ++r) {
    CHECK(truncation_components(spec(half_line(kUnit)), r).count == 1);
    CHECK(truncation_components(spec(full_line(kUnit, kHalf)), r).count == 2);
  }
  const auto levels = component_levels(spec(tree("2", "1/2")), 12);
  for (unsigned r = 1; r <= 12; ++r) {
    CHECK(levels[r - 1].count == (std::size_t(1) << r));
    CHECK(levels[r - 1].count == binary_tree_components(r));
    CHECK(truncation_components(spec(tree("2", "1/2")), r).count == levels[r - 1].count);
  }
}

TEST_CASE("component levels form an inverse system") {
  for (const auto& text : {tree("3", "1/2"), chain(kUnit, full_line(kHalf, kHalf), kHalf), full_line(kUnit, kUnit)}) {
    const auto levels = component_levels(spec(text), 7);
    for (std::size_t i = 1; i < levels.size(); ++i) {
      CHECK(levels[i].count >= levels[i - 1].count);
      for (std::size_t p : levels[i].parent) CHECK(p < levels[i - 1].count);
      // Every component at the coarser level has a child (each continues to the cut).
      std::vector<char> hit(levels[i - 1].count, 0);
      for (std::size_t p : levels[i].parent) hit[p] = 1;
      CHECK(std::all_of(hit.begin(), hit.end(), [](char c) { return c != 0; }));
    }
  }
}

TEST_CASE("component counts reflect the census") {
  // chain end plus two rays of every attachment already cut by the ball.
  const auto fig1 = component_levels(spec(chain(kUnit, full_line(kHalf, kHalf), kHalf)), 8);
  for (unsigned r = 1; r <= 8; ++r) CHECK(fig1[r - 1].count == 1 + 2 * r);
  // Finite attachments never create components.
  const auto fin = component_levels(
      spec(chain(kUnit, R"({"variant":"FiniteGraph","vertex_count":3,"edges":[{"u":0,"v":1,"length":1},{"u":1,"v":2,"length":1}]})", kUnit)), 6);
  for (const auto& lv : fin) CHECK(lv.count == 1);
  const auto sphere_one = component_levels(
      spec(R"({"variant":"SphereSymmetric","sphere_sizes":{"kind":"explicit","prefix":[1],"tail":{"kind":"constant","c":3}},"ell":{"kind":"constant","c":1},"ends":"one"})"), 6);
  for (const auto& lv : sphere_one) CHECK(lv.count == 1);
  const auto sphere_two = component_levels(
      spec(R"({"variant":"SphereSymmetric","sphere_sizes":{"kind":"explicit","prefix":[1],"tail":{"kind":"constant","c":4}},"ell":{"kind":"constant","c":1},"ends":"two"})"), 6);
  for (const auto& lv : sphere_two) CHECK(lv.count == 2);
  const auto cantor = component_levels(
      spec(R"({"variant":"SphereSymmetric","sphere_sizes":{"kind":"geometric","a":1,"r":3},"ell":{"kind":"constant","c":1},"ends":"cantor"})"), 6);
  for (unsigned r = 1; r <= 6; ++r) CHECK(cantor[r - 1].count == std::size_t(std::pow(3, r)));
  const auto finite = truncation_components(
      spec(R"({"variant":"FiniteGraph","vertex_count":3,"edges":[{"u":0,"v":1,"length":1},{"u":1,"v":2,"length":1}]})"), 1);
  CHECK(finite.count == 0);
}

TEST_CASE("end summary serialises") {
  const auto j = to_json(enumerate_ends(spec(half_line(kHalf))));
  CHECK(j["total"] == "1");
  CHECK(j["descriptors"][0]["tail_volume"] == "2");
  CHECK(j["descriptors"][0]["freeness"] == "Free");
}
