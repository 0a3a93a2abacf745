#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace defilab {

/// A hereditarily finite set. Values are hash-consed, so equality is identity
/// and copies are a pointer. Members are kept in ascending Ackermann order:
/// x < y iff the largest element of the symmetric difference lies in y, which
/// is exactly the order of Ackermann codes code({a1..ak}) = sum 2^code(ai).
class HFSet {
 public:
  /// The empty set.
  HFSet();

  /// Canonical set with the given members (duplicates removed).
  static HFSet of(std::vector<HFSet> members);

  /// Inverse of ackermann_code().
  static HFSet decode(std::uint64_t code);

  const std::vector<HFSet>& members() const;
  std::size_t cardinality() const { return members().size(); }
  bool empty() const { return members().empty(); }
  bool contains(const HFSet& x) const;

  /// Ackermann code when it fits in 64 bits.
  std::optional<std::uint64_t> code() const;

  /// Ackermann code; throws CapExceeded when it does not fit in 64 bits.
  std::uint64_t ackermann_code() const;

  /// Brace notation: {} for the empty set, {{},{{}}} for 2, and so on.
  std::string to_string() const;

  /// The transitive closure of {x}, ascending.
  std::vector<HFSet> closure() const;

  /// Stable per-process identifier of this value.
  std::size_t id() const;

  friend bool operator==(const HFSet& a, const HFSet& b) { return a.node_ == b.node_; }
  friend std::strong_ordering operator<=>(const HFSet& a, const HFSet& b);

  struct Node;

 private:
  explicit HFSet(const Node* node) : node_(node) {}
  const Node* node_;
};

/// V_n as an ascending list: V_0 = {}, V_{n+1} = P(V_n). Throws CapExceeded for n > 5.
std::vector<HFSet> von_neumann_level(int n);

}  // namespace defilab
