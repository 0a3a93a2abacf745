#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "defilab/error.hpp"

namespace defilab {

/// A subset of a universe 0..n-1 with n <= 64, stored as a bit vector.
/// Ordering is numeric on the underlying mask, which is the canonical
/// subset enumeration order everywhere in the library.
class ElementSet {
 public:
  static constexpr int kMaxUniverse = 64;

  constexpr ElementSet() = default;
  constexpr explicit ElementSet(std::uint64_t mask) : mask_(mask) {}

  static ElementSet full(int n) {
    check_universe(n);
    return ElementSet(n == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1));
  }
  static ElementSet of(const std::vector<int>& elements) {
    ElementSet s;
    for (int e : elements) s.insert(e);
    return s;
  }
  static ElementSet singleton(int e) {
    ElementSet s;
    s.insert(e);
    return s;
  }

  static void check_universe(int n) {
    if (n < 0 || n > kMaxUniverse)
      throw CapExceeded("subset operations need a universe of at most 64 elements, got " +
                        std::to_string(n));
  }

  constexpr std::uint64_t mask() const { return mask_; }
  constexpr bool contains(int e) const { return (mask_ >> e) & 1U; }
  constexpr bool empty() const { return mask_ == 0; }
  int size() const { return std::popcount(mask_); }
  void insert(int e) { mask_ |= std::uint64_t{1} << e; }
  void erase(int e) { mask_ &= ~(std::uint64_t{1} << e); }

  /// Least element; undefined on the empty set.
  int min() const { return std::countr_zero(mask_); }

  std::vector<int> elements() const {
    std::vector<int> out;
    for (std::uint64_t m = mask_; m != 0; m &= m - 1) out.push_back(std::countr_zero(m));
    return out;
  }

  constexpr ElementSet operator|(ElementSet o) const { return ElementSet(mask_ | o.mask_); }
  constexpr ElementSet operator&(ElementSet o) const { return ElementSet(mask_ & o.mask_); }
  constexpr ElementSet operator^(ElementSet o) const { return ElementSet(mask_ ^ o.mask_); }
  constexpr bool subset_of(ElementSet o) const { return (mask_ & ~o.mask_) == 0; }

  constexpr auto operator<=>(const ElementSet&) const = default;

  /// "{0,2,3}"
  std::string to_string() const {
    std::string s = "{";
    bool first = true;
    for (int e : elements()) {
      if (!first) s += ",";
      s += std::to_string(e);
      first = false;
    }
    return s + "}";
  }

 private:
  std::uint64_t mask_ = 0;
};

/// A partition of the universe into blocks ordered by least element.
using Partition = std::vector<ElementSet>;

}  // namespace defilab
