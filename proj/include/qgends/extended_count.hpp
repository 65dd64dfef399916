#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace qgends {

/// Cardinality of an end set: a finite count, countably infinite or
/// uncountable.
class ExtendedCount {
 public:
  enum class Kind { Finite, CountablyInfinite, Uncountable };

  constexpr ExtendedCount() = default;
  static constexpr ExtendedCount finite(std::uint64_t k) { return ExtendedCount(Kind::Finite, k); }
  static constexpr ExtendedCount countable() { return ExtendedCount(Kind::CountablyInfinite, 0); }
  static constexpr ExtendedCount uncountable() { return ExtendedCount(Kind::Uncountable, 0); }

  constexpr Kind kind() const noexcept { return kind_; }
  constexpr bool is_finite() const noexcept { return kind_ == Kind::Finite; }
  constexpr bool is_infinite() const noexcept { return kind_ != Kind::Finite; }
  constexpr bool is_zero() const noexcept { return is_finite() && k_ == 0; }
  /// Only meaningful for finite counts.
  constexpr std::uint64_t count() const noexcept { return k_; }

  friend constexpr std::strong_ordering operator<=>(ExtendedCount a, ExtendedCount b) {
    if (a.kind_ != b.kind_) return a.kind_ <=> b.kind_;
    return a.k_ <=> b.k_;
  }
  friend constexpr bool operator==(ExtendedCount a, ExtendedCount b) = default;

  /// Cardinal sum.
  friend constexpr ExtendedCount operator+(ExtendedCount a, ExtendedCount b) {
    if (a.is_finite() && b.is_finite()) return finite(a.k_ + b.k_);
    return a.kind_ > b.kind_ ? ExtendedCount(a.kind_, 0) : ExtendedCount(b.kind_, 0);
  }

  /// Cardinality of countably many disjoint copies of a set of size `per_copy`.
  static constexpr ExtendedCount countably_many(ExtendedCount per_copy) {
    if (per_copy.is_zero()) return finite(0);
    if (per_copy.kind_ == Kind::Uncountable) return uncountable();
    return countable();
  }

  /// "0", "3", "countably-infinite", "uncountable"
  std::string to_string() const {
    switch (kind_) {
      case Kind::Finite: return std::to_string(k_);
      case Kind::CountablyInfinite: return "countably-infinite";
      case Kind::Uncountable: return "uncountable";
    }
    return "";
  }

 private:
  constexpr ExtendedCount(Kind kind, std::uint64_t k) : kind_(kind), k_(k) {}
  Kind kind_ = Kind::Finite;
  std::uint64_t k_ = 0;
};

}  // namespace qgends
