#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "defilab/element_set.hpp"
#include "defilab/hfset.hpp"

namespace defilab {

using Tuple = std::vector<int>;

struct SymbolInfo {
  std::string name;
  int arity = 0;
  bool operator==(const SymbolInfo&) const = default;
};

/// Finite vocabulary: relation symbols (arity >= 1) and function symbols
/// (arity >= 0, arity 0 being a constant). Names are unique across kinds.
class Signature {
 public:
  void add_relation(std::string name, int arity);
  void add_function(std::string name, int arity);

  const std::vector<SymbolInfo>& relations() const { return relations_; }
  const std::vector<SymbolInfo>& functions() const { return functions_; }

  std::optional<int> relation_index(std::string_view name) const;
  std::optional<int> function_index(std::string_view name) const;
  bool contains(std::string_view name) const;
  bool relational() const { return functions_.empty(); }

  bool operator==(const Signature&) const = default;

 private:
  std::vector<SymbolInfo> relations_;
  std::vector<SymbolInfo> functions_;
};

/// Extension of a relation symbol: a sorted duplicate-free tuple list with a
/// constant-time membership index.
class Relation {
 public:
  Relation(int arity, int universe, std::vector<Tuple> tuples);

  int arity() const { return arity_; }
  const std::vector<Tuple>& tuples() const { return tuples_; }
  bool contains(std::span<const int> tuple) const;

  bool operator==(const Relation& o) const { return arity_ == o.arity_ && tuples_ == o.tuples_; }

 private:
  std::uint64_t encode(std::span<const int> tuple) const;

  int arity_;
  int universe_;
  std::vector<Tuple> tuples_;
  std::vector<bool> dense_;             // used when universe^arity is small
  std::vector<std::uint64_t> sparse_;   // sorted codes otherwise
};

/// Total function table over universe^arity, indexed in mixed radix with the
/// first argument most significant.
class FunctionTable {
 public:
  FunctionTable(int arity, int universe, std::vector<int> values);

  int arity() const { return arity_; }
  int apply(std::span<const int> args) const;
  const std::vector<int>& values() const { return values_; }

  bool operator==(const FunctionTable& o) const { return arity_ == o.arity_ && values_ == o.values_; }

 private:
  int arity_;
  int universe_;
  std::vector<int> values_;
};

/// An immutable finite structure over the universe 0..n-1. Copies share
/// storage and the identity used as a memoization key.
class Structure {
 public:
  const std::string& name() const;
  int size() const;
  const Signature& signature() const;
  const Relation& relation(int index) const;
  const FunctionTable& function(int index) const;
  /// Display label, or the index as text.
  std::string label(int element) const;
  bool has_labels() const;
  std::uint64_t id() const;

  /// Content equality (name and labels excluded).
  bool same_interpretation(const Structure& o) const;
  /// Content equality including name and labels.
  bool operator==(const Structure& o) const;

  struct Data;

 private:
  friend class StructureBuilder;
  explicit Structure(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
  std::shared_ptr<const Data> data_;
};

/// Validating builder for Structure.
class StructureBuilder {
 public:
  StructureBuilder(std::string name, int universe);

  StructureBuilder& relation(std::string name, int arity, std::vector<Tuple> tuples);
  /// `table` maps each argument tuple to its value; it must be total and single-valued.
  StructureBuilder& function(std::string name, int arity, const std::vector<std::pair<Tuple, int>>& table);
  /// Dense table in mixed radix order (first argument most significant).
  StructureBuilder& function_dense(std::string name, int arity, std::vector<int> values);
  StructureBuilder& constant(std::string name, int value);
  StructureBuilder& label(int element, std::string text);

  Structure build() const;

 private:
  std::string name_;
  int universe_;
  Signature signature_;
  std::vector<Relation> relations_;
  std::vector<FunctionTable> functions_;
  std::map<int, std::string> labels_;
};

struct NamedSubset {
  std::string name;
  ElementSet members;
};

struct NamedParameter {
  std::string name;
  int element = 0;
};

/// A structure together with added subset predicates and parameter constants.
class ExpandedStructure {
 public:
  ExpandedStructure(Structure base);  // NOLINT(google-explicit-constructor): every structure is its own trivial expansion
  ExpandedStructure(Structure base, std::vector<NamedSubset> subsets, std::vector<NamedParameter> params);

  const Structure& base() const { return base_; }
  int size() const { return base_.size(); }
  const std::vector<NamedSubset>& subsets() const { return subsets_; }
  const std::vector<NamedParameter>& parameters() const { return params_; }
  std::optional<int> subset_index(std::string_view name) const;
  std::optional<int> parameter_element(std::string_view name) const;

 private:
  Structure base_;
  std::vector<NamedSubset> subsets_;
  std::vector<NamedParameter> params_;
};

// ---- file format -------------------------------------------------------

/// Parses the line-oriented structure format. Throws ParseError (with line and
/// column) or SemanticError (naming the offending symbol).
Structure load_structure(std::string_view text);

/// Canonical text; load_structure(print_structure(S)) == S.
std::string print_structure(const Structure& s);

// ---- generators --------------------------------------------------------

/// 0 < 1 < ... < n-1 under relation "<".
Structure gen_linear_order(int n);

/// Directed n-cycle under relation "E": i -> i+1 mod n.
Structure gen_directed_cycle(int n);

/// GF(p^d) with functions "+", "*" and constants "0", "1". Element i encodes
/// the polynomial sum c_j x^j with i = sum c_j p^j. The modulus defaults to
/// the least monic irreducible polynomial of degree d (tail coefficients read
/// as a base-p number); an explicit modulus is given by its tail coefficients
/// c_0..c_{d-1}.
Structure gen_finite_field(int p, int d, std::optional<std::vector<int>> modulus_tail = std::nullopt);

/// Tail coefficients c_0..c_{d-1} of the least monic irreducible polynomial of degree d over GF(p).
std::vector<int> least_irreducible_tail(int p, int d);

/// Membership digraph on the transitive closure of {code}, relation "in"
/// (x in y), universe in ascending Ackermann order.
Structure gen_membership_digraph(const HFSet& code);

/// Membership digraph of an arbitrary transitive set given in ascending order.
Structure membership_structure(const std::vector<HFSet>& transitive_set, std::string name);

/// Replaces every function symbol of arity n by its graph relation of arity
/// n+1 and every constant by a singleton unary relation. Relational inputs
/// are returned unchanged (same identity).
Structure relationalize(const Structure& s);

/// Name the graph relation of function symbol `fn` receives under relationalize.
std::string graph_relation_name(const Signature& sig, const std::string& fn);

/// Adds subset predicates and parameter constants; throws SemanticError on
/// name collisions or invalid indices.
ExpandedStructure expand(const Structure& s, std::vector<NamedSubset> subsets,
                         std::vector<NamedParameter> params = {});

}  // namespace defilab
