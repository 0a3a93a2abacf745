#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "defilab/element_set.hpp"
#include "defilab/formula.hpp"
#include "defilab/structure.hpp"

namespace defilab {

enum class ParamsMode { None, All, List };

/// Resource budget of a classification query.
struct Budget {
  std::optional<int> rank;  // nullopt: unbounded (orbit criterion)
  ParamsMode params_mode = ParamsMode::None;
  std::vector<int> params;  // used with ParamsMode::List
  std::optional<int> max_degree;  // defaults to |M|

  static Budget unbounded(ParamsMode mode = ParamsMode::None) { return {std::nullopt, mode, {}, std::nullopt}; }
  static Budget at_rank(int k, ParamsMode mode = ParamsMode::None) { return {k, mode, {}, std::nullopt}; }
  static Budget with_params(std::optional<int> rank, std::vector<int> params) {
    return {rank, ParamsMode::List, std::move(params), std::nullopt};
  }

  /// Parameter elements for a universe of size n, ascending.
  std::vector<int> resolve_params(int n) const;
  int degree_cap(int n) const;
  /// The rank actually used: the bound, or k* = n+1 when unbounded.
  int effective_rank(int n) const { return rank ? *rank : n + 1; }
  void validate(int n) const;

  /// "none", "all" or "1,2"
  std::string params_text() const;
  /// "3" or "unbounded"
  std::string rank_text() const;
};

struct ElementReport {
  int element = 0;
  int degree = 1;
  bool definable = true;
  bool algebraic = true;  // degree <= degree cap
  std::optional<Formula> witness;
  std::optional<int> witness_rank;
};

struct ElementClassification {
  std::vector<ElementReport> reports;
  /// Unbounded budgets: least rank at which the type partition equals the
  /// orbit partition (certifying the orbit answer at k*); nullopt when not
  /// certified or not applicable.
  std::optional<int> certified_rank;
};

ElementClassification classify_elements(const ExpandedStructure& e, const Budget& b, bool witnesses = false);

/// Elements of degree 1.
ElementSet dcl(const ExpandedStructure& e, const Budget& b);
int acl_degree(const ExpandedStructure& e, const Budget& b, int element);

struct SubsetReport {
  ElementSet subset;
  bool explicit_definable = false;
  bool implicit_definable = false;
  std::size_t alg_degree = 1;
  bool algebraic = true;  // alg_degree <= degree cap
  std::optional<Formula> explicit_witness;
  std::optional<Formula> implicit_witness;  // sentence over predicate "A"
};

/// One report per subset, ascending. Throws CapExceeded above
/// caps().subset_types (finite rank) or caps().subset_enumeration (unbounded).
std::vector<SubsetReport> classify_subsets(const ExpandedStructure& e, const Budget& b, bool witnesses = false);

/// Report for a single subset (same semantics as classify_subsets).
SubsetReport classify_subset(const ExpandedStructure& e, const Budget& b, ElementSet subset, bool witnesses = false);

struct Conversion {
  Formula sentence;
  std::vector<int> added_params;  // separating parameters, ascending
  std::vector<ElementSet> original_solutions;
};

/// Conjoins to psi literals A(@a) / ~A(@a), with a the least element of the
/// symmetric difference between the target and each rival solution, so that
/// the target becomes the unique solution.
Conversion alg_to_imp(const ExpandedStructure& e, const Formula& psi, const Budget& b, ElementSet target,
                      const std::string& predicate = "A");

/// Defining formula for each element of A = solution_set(set_def), listed in
/// the order given by order_def (whose name-smaller free variable is the left
/// argument of the strict order).
std::vector<std::pair<int, Formula>> pin_elements(const ExpandedStructure& e, const Formula& set_def,
                                                  const Formula& order_def, const std::vector<int>& params = {});

struct StructureClassification {
  bool pointwise_definable = true;
  int pointwise_algebraic_degree = 1;
  ElementClassification elements;
};

StructureClassification classify_structure(const ExpandedStructure& e, const Budget& b);

enum class GapDirection { ImplicitNotExplicit, ExplicitNotImplicit };

struct GapEntry {
  std::string structure;
  ElementSet subset;
  std::size_t alg_degree = 1;
};

struct GapReport {
  int rank = 0;
  GapDirection direction = GapDirection::ImplicitNotExplicit;
  std::vector<GapEntry> entries;
  std::vector<std::string> searched;
  std::vector<std::string> skipped;  // structures over the subset cap
};

/// Parameter-free search for subsets that are implicit but not explicit at
/// rank k (or the converse).
GapReport search_gap(const std::vector<Structure>& corpus, int k,
                     GapDirection direction = GapDirection::ImplicitNotExplicit);

}  // namespace defilab
