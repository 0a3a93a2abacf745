#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "defilab/element_set.hpp"
#include "defilab/formula.hpp"
#include "defilab/structure.hpp"

// Independent reference implementations used as test oracles. None of these
// share code with the library beyond the Structure and Formula containers.
namespace oracle {

using defilab::ElementSet;
using defilab::Formula;
using defilab::Structure;

using Perm = std::vector<int>;

/// Every permutation preserving all relations, functions and the given unary
/// predicates and fixing each parameter, by exhaustive search.
std::vector<Perm> brute_automorphisms(const Structure& s, const std::vector<int>& params = {},
                                      const std::vector<ElementSet>& predicates = {});

/// Orbit partition induced by a permutation list, blocks by least element.
std::vector<ElementSet> orbit_partition(int n, const std::vector<Perm>& group);

ElementSet image(const Perm& p, ElementSet s);

/// Naive rank-k types over a relational structure: full tuples, no reduction,
/// type_k(t) = (atomic diagram of t, {type_{k-1}(t a) : a}).
class NaiveTypes {
 public:
  NaiveTypes(const Structure& relational, std::vector<ElementSet> predicates, std::vector<int> params);
  int type(std::vector<int>& tuple, int k);
  std::vector<ElementSet> element_partition(int k);

 private:
  int atomic(const std::vector<int>& tuple);
  int intern(std::vector<int> key);

  const Structure& s_;
  std::vector<ElementSet> predicates_;
  std::vector<int> params_;
  std::map<std::vector<int>, int> ids_;
  std::map<std::pair<std::vector<int>, int>, int> memo_;
};

/// Sentence-type fiber size of every subset, indexed by mask.
std::vector<std::size_t> naive_subset_fibers(const Structure& relational, int k, const std::vector<int>& params);

/// Tarskian evaluation straight off the syntax tree, no memoization.
bool reference_sat(const Structure& s, const Formula& f, std::map<std::string, int> env,
                   const std::map<std::string, ElementSet>& predicates = {});

/// Canonical text with bound variables replaced by binder depth.
std::string alpha_canonical(const Formula& f);

/// Random formulas over a signature, for round-trip and evaluator checks.
class FormulaGenerator {
 public:
  FormulaGenerator(const defilab::Signature& sig, std::vector<std::string> predicates, int universe,
                   std::uint32_t seed);
  Formula formula(int max_rank, int max_depth);

 private:
  defilab::Term term(int depth, const std::vector<std::string>& scope);
  Formula atom(const std::vector<std::string>& scope);
  Formula gen(int rank, int depth, std::vector<std::string>& scope);

  defilab::Signature sig_;
  std::vector<std::string> predicates_;
  int universe_;
  std::mt19937 rng_;
};

/// Polynomial multiplication in GF(p)[x] modulo a monic modulus, coefficient
/// vectors little-endian.
std::vector<int> poly_mulmod(const std::vector<int>& a, const std::vector<int>& b, const std::vector<int>& modulus, int p);

/// Labeled acyclic extensional digraphs on n vertices up to isomorphism, by
/// brute force over upper-triangular adjacency and all relabelings.
std::size_t count_extensional_wf(int n);

}  // namespace oracle
