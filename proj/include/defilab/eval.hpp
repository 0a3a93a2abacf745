#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "defilab/element_set.hpp"
#include "defilab/formula.hpp"
#include "defilab/structure.hpp"

namespace defilab {

/// Partial map from variable names to universe elements.
using Assignment = std::map<std::string, int>;

/// Compiled, memoizing evaluator for one formula over one expansion.
///
/// Quantified subformulas cache their truth value keyed by the values of
/// their free variables, so shared (DAG) subformulas and repeated queries are
/// evaluated once. Extra subset predicates declared at construction start
/// empty and can be rebound with set_predicate(); cached values of
/// subformulas that mention a rebound predicate are dropped.
class Evaluator {
 public:
  Evaluator(const ExpandedStructure& e, const Formula& f, std::vector<std::string> extra_predicates = {});
  ~Evaluator();
  Evaluator(Evaluator&&) noexcept;
  Evaluator& operator=(Evaluator&&) noexcept;

  /// Free variables of the formula in ascending name order.
  const std::vector<std::string>& free_variables() const;

  /// Truth value with free variables bound positionally (free_variables() order).
  bool eval(std::span<const int> values);
  bool eval(const Assignment& a);

  /// Rebinds an extra predicate declared at construction.
  void set_predicate(const std::string& name, ElementSet members);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// M |= f[a]. Throws SemanticError for uncovered free variables or unknown symbols.
bool sat(const ExpandedStructure& e, const Formula& f, const Assignment& a = {});

/// {b : M |= f[b]} for a formula with at most one free variable.
ElementSet solution_set(const ExpandedStructure& e, const Formula& f);

/// All B with <M,B> |= psi(B), in increasing numeric order. `predicate` names
/// the free subset predicate of psi. When `allowed_params` is given, every @i
/// in psi must be one of them. Throws CapExceeded above caps().subset_enumeration.
std::vector<ElementSet> subset_solutions(const ExpandedStructure& e, const Formula& psi,
                                         const std::string& predicate = "A",
                                         const std::optional<std::vector<int>>& allowed_params = std::nullopt);

// ---- quantifier-rank types --------------------------------------------

/// Concurrent intern table shared by every type computed in one family
/// (one base structure and parameter set, any subset predicates).
class TypeInterner {
 public:
  std::uint32_t intern(const std::vector<std::uint32_t>& key);
  std::size_t size() const;

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<std::uint32_t>& v) const;
  };
  static constexpr std::size_t kShards = 16;
  struct Shard {
    mutable std::mutex mutex;
    std::unordered_map<std::vector<std::uint32_t>, std::uint32_t, KeyHash> map;
  };
  Shard shards_[kShards];
  std::atomic<std::uint32_t> next_{0};
};

/// Canonical rank-k type: equal values (same family) iff no formula of
/// quantifier rank <= k, with the family's parameters, separates the tuples.
struct RankKType {
  std::shared_ptr<TypeInterner> family;
  std::uint32_t id = 0;
  int rank = 0;

  bool operator==(const RankKType& o) const { return family == o.family && id == o.id && rank == o.rank; }
};

/// Computes rank-k types of tuples over a relational expansion, treating
/// `params` (and the expansion's parameter constants) as extra constants.
///
/// A tuple is reduced to its distinct non-parameter elements plus an equality
/// pattern; the type of the reduced tuple r at rank j is interned from its
/// atomic diagram, its rank j-1 type and the set of rank j-1 types of r.a for
/// fresh a. Extensions by repeated elements or parameters carry no further
/// information, so only injective tuples are ever expanded.
class TypeEngine {
 public:
  TypeEngine(const ExpandedStructure& e, std::vector<int> params,
             std::shared_ptr<TypeInterner> interner = std::make_shared<TypeInterner>());
  ~TypeEngine();

  std::uint32_t type_of(std::span<const int> tuple, int k);
  /// Type of the empty tuple (the sentence type of the expansion).
  std::uint32_t sentence_type(int k);
  Partition element_partition(int k);

  const std::shared_ptr<TypeInterner>& interner() const;
  const std::vector<int>& params() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Memoized engine for (structure identity, predicates, parameter set).
std::shared_ptr<TypeEngine> type_engine(const ExpandedStructure& e, const std::vector<int>& params);

RankKType type_k(const ExpandedStructure& e, std::span<const int> tuple, int k, const std::vector<int>& params = {});

/// Fibers of type_k on 1-tuples, blocks ordered by least element.
Partition element_partition(const ExpandedStructure& e, int k, const std::vector<int>& params = {});

/// Rank-k sentence types of <M, B, P> for every B, indexed by B's mask.
struct SubsetTypeMap {
  int universe = 0;
  int rank = 0;
  std::shared_ptr<TypeInterner> family;
  std::vector<std::uint32_t> types;  // size 2^universe

  RankKType type_of(ElementSet b) const { return {family, types[b.mask()], rank}; }
  /// Subsets sharing b's type, ascending.
  std::vector<ElementSet> fiber(ElementSet b) const;
  /// All fibers, each ascending, ordered by least member.
  std::vector<std::vector<ElementSet>> fibers() const;
  std::size_t fiber_size(ElementSet b) const { return counts.at(types[b.mask()]); }

  std::unordered_map<std::uint32_t, std::size_t> counts;  // type id -> fiber size
};

/// Throws CapExceeded above caps().subset_types elements.
SubsetTypeMap subset_type_map(const ExpandedStructure& e, int k, const std::vector<int>& params = {});

/// The expansion with its base structure relationalized.
ExpandedStructure relationalized(const ExpandedStructure& e);

/// Normalises a parameter list: sorted, duplicates removed, range checked.
std::vector<int> normalize_params(std::vector<int> params, int universe);

}  // namespace defilab
