#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "defilab/structure.hpp"

namespace defilab {

/// Term of the object language.
struct Term {
  enum class Kind { Variable, Constant, Parameter, Apply };

  Kind kind = Kind::Variable;
  std::string name;    // variable, constant or function name; empty for parameters
  int parameter = -1;  // element index of an @i parameter
  std::vector<Term> args;

  static Term variable(std::string name) { return {Kind::Variable, std::move(name), -1, {}}; }
  static Term constant(std::string name) { return {Kind::Constant, std::move(name), -1, {}}; }
  static Term param(int element) { return {Kind::Parameter, {}, element, {}}; }
  static Term apply(std::string fn, std::vector<Term> args) {
    return {Kind::Apply, std::move(fn), -1, std::move(args)};
  }

  bool operator==(const Term&) const = default;
};

enum class FormulaKind { True, False, Equals, Relation, Predicate, Not, And, Or, Implies, Forall, Exists };

/// Immutable first-order formula. Nodes are shared, so synthesized formulas
/// are DAGs; tree_size() measures the unshared size.
class Formula {
 public:
  struct Node;

  FormulaKind kind() const;
  /// Relation or subset-predicate name.
  const std::string& symbol() const;
  const std::vector<Term>& terms() const;
  /// Operands of Not/And/Or/Implies; the body of a quantifier is children()[0].
  const std::vector<Formula>& children() const;
  /// Variable bound by a quantifier.
  const std::string& variable() const;
  const Formula& body() const { return children()[0]; }
  const Node* node() const { return node_.get(); }
  std::size_t hash() const;

  static Formula truth();
  static Formula falsity();
  static Formula equals(Term lhs, Term rhs);
  static Formula relation(std::string name, std::vector<Term> args);
  static Formula predicate(std::string name, Term arg);
  static Formula negation(Formula f);
  /// Empty conjunction is `true`, singleton is the operand itself.
  static Formula conjunction(std::vector<Formula> operands);
  /// Empty disjunction is `false`, singleton is the operand itself.
  static Formula disjunction(std::vector<Formula> operands);
  static Formula implication(Formula lhs, Formula rhs);
  static Formula forall(std::string var, Formula body);
  static Formula exists(std::string var, Formula body);

 private:
  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static Formula make(Node node);
  std::shared_ptr<const Node> node_;
};

/// Hash-consing factory: structurally equal formulas built through the same
/// factory share one node. Used by the synthesizers.
class FormulaFactory {
 public:
  Formula intern(const Formula& f);

 private:
  std::map<std::size_t, std::vector<Formula>> table_;
};

int quantifier_rank(const Formula& f);
/// Free variables in ascending name order.
std::vector<std::string> free_variables(const Formula& f);
/// Every variable name occurring free or bound.
std::set<std::string> all_variables(const Formula& f);
std::set<std::string> predicate_symbols(const Formula& f);
/// Elements named by @i parameter terms.
std::set<int> parameters_used(const Formula& f);
/// Size of the formula as a tree (shared nodes counted once per use), saturating.
std::size_t tree_size(const Formula& f);

/// Structural equality with bound variables compared up to renaming.
bool alpha_equivalent(const Formula& a, const Formula& b);

/// Capture-avoiding substitution of terms for free variables.
Formula substitute(const Formula& f, const std::map<std::string, Term>& replacement);

/// The well-ordered variable supply: x1, x2, x3, ...
std::string supply_variable(int index);
/// First supply variable not in `used`.
std::string fresh_variable(const std::set<std::string>& used);

/// Symbols visible to the parser besides the signature.
struct SymbolContext {
  Signature signature;
  std::vector<std::string> predicates;
  std::vector<std::string> parameters;  // named parameter constants

  static SymbolContext of(const ExpandedStructure& e, std::vector<std::string> extra_predicates = {});
};

/// Parses the concrete syntax. Precedence ~ > & > | > ->, -> is right
/// associative and quantifiers extend as far right as possible. Throws
/// ParseError on syntax errors, unknown symbols and arity mismatches.
Formula parse_formula(std::string_view text, const SymbolContext& context);

/// ASCII concrete syntax; parse_formula(print_formula(f)) is alpha-equivalent
/// to f. Throws SizeGuardExceeded when the tree exceeds the formula cap.
std::string print_formula(const Formula& f);
std::string print_term(const Term& t);

}  // namespace defilab
