#include "defilab/definability.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "defilab/aut.hpp"
#include "defilab/caps.hpp"
#include "defilab/error.hpp"
#include "defilab/eval.hpp"
#include "defilab/parallel.hpp"
#include "defilab/synthesis.hpp"

namespace defilab {

std::vector<int> Budget::resolve_params(int n) const {
  switch (params_mode) {
    case ParamsMode::None: return {};
    case ParamsMode::All: {
      std::vector<int> all(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
      return all;
    }
    case ParamsMode::List: return normalize_params(params, n);
  }
  return {};
}

int Budget::degree_cap(int n) const { return max_degree ? *max_degree : n; }

void Budget::validate(int n) const {
  if (rank && *rank < 0) throw SemanticError("rank must be non-negative");
  if (max_degree && *max_degree < 1) throw SemanticError("degree cap must be at least 1");
  if (params_mode == ParamsMode::List) normalize_params(params, n);
}

std::string Budget::params_text() const {
  switch (params_mode) {
    case ParamsMode::None: return "none";
    case ParamsMode::All: return "all";
    case ParamsMode::List: {
      std::string s;
      for (std::size_t i = 0; i < params.size(); ++i) s += (i ? "," : "") + std::to_string(params[i]);
      return s.empty() ? "none" : s;
    }
  }
  return "none";
}

std::string Budget::rank_text() const { return rank ? std::to_string(*rank) : "unbounded"; }

namespace {

// Parameters of the budget together with the expansion's named constants.
std::vector<int> all_params(const ExpandedStructure& e, const Budget& b) {
  std::vector<int> ps = b.resolve_params(e.size());
  for (const auto& p : e.parameters()) ps.push_back(p.element);
  return normalize_params(std::move(ps), e.size());
}

// The expansion as a plain structure, subset predicates becoming unary relations.
Structure flatten(const ExpandedStructure& e) {
  if (e.subsets().empty()) return e.base();
  const Structure& s = e.base();
  const Signature& sig = s.signature();
  StructureBuilder b(s.name(), s.size());
  for (std::size_t r = 0; r < sig.relations().size(); ++r)
    b.relation(sig.relations()[r].name, sig.relations()[r].arity, s.relation(static_cast<int>(r)).tuples());
  for (std::size_t f = 0; f < sig.functions().size(); ++f)
    b.function_dense(sig.functions()[f].name, sig.functions()[f].arity, s.function(static_cast<int>(f)).values());
  for (const auto& sub : e.subsets()) {
    std::vector<Tuple> tuples;
    for (int x : sub.members.elements()) tuples.push_back({x});
    b.relation(sub.name, 1, std::move(tuples));
  }
  return b.build();
}

std::string fresh_predicate(const ExpandedStructure& e) {
  std::string name = "A";
  while (e.subset_index(name) || e.base().signature().contains(name) || e.parameter_element(name)) name += "'";
  return name;
}

// Least rank at which the type partition equals the orbit partition, searched
// while the injective-tuple trie stays small.
std::optional<int> certify(const ExpandedStructure& rel, const std::vector<int>& params, const Partition& orbit_blocks) {
  const int n = rel.size();
  const int free_elements = n - static_cast<int>(params.size());
  double nodes = 1;
  double level = 1;
  for (int j = 0; j <= n + 1; ++j) {
    if (j > 0) {
      level *= std::max(free_elements - (j - 1), 0);
      nodes += level;
    }
    if (nodes > 2e6) return std::nullopt;
    if (element_partition(rel, j, params) == orbit_blocks) return j;
  }
  return std::nullopt;
}

Formula parameter_equation(int a) { return Formula::equals(Term::variable(supply_variable(0)), Term::param(a)); }

Formula iff(const Formula& a, const Formula& b) {
  return Formula::conjunction({Formula::implication(a, b), Formula::implication(b, a)});
}

struct Context {
  ExpandedStructure e;
  ExpandedStructure rel;
  Budget budget;
  std::vector<int> params;
  int n;
  int cap;
  Partition blocks;
  std::optional<int> certified_rank;
  std::optional<PermutationSet> group;

  Context(const ExpandedStructure& ex, const Budget& b)
      : e(ex), rel(relationalized(ex)), budget(b), params(all_params(ex, b)), n(ex.size()), cap(b.degree_cap(ex.size())) {
    b.validate(n);
    ElementSet::check_universe(n);
    if (b.rank) {
      blocks = element_partition(rel, *b.rank, params);
    } else {
      group = automorphisms(flatten(e), params);
      blocks = orbits(*group);
      certified_rank = certify(rel, params, blocks);
    }
  }

  ElementSet block_of(int a) const {
    for (auto blk : blocks)
      if (blk.contains(a)) return blk;
    return {};
  }

  bool all_params_mode() const { return static_cast<int>(params.size()) == n; }

  std::optional<int> witness_rank() const { return budget.rank ? budget.rank : certified_rank; }
};

std::optional<Formula> element_witness(const Context& c, int a) {
  if (std::binary_search(c.params.begin(), c.params.end(), a)) return parameter_equation(a);
  const ElementSet block = c.block_of(a);
  std::optional<int> k = c.budget.rank;
  if (!k) {
    // least rank whose class of a is the orbit of a
    for (int j = 0; j <= c.n + 1 && !k; ++j) {
      if (c.certified_rank && j > *c.certified_rank) break;
      if (j > 6 && !c.certified_rank) break;
      for (auto blk : element_partition(c.rel, j, c.params))
        if (blk.contains(a) && blk == block) k = j;
    }
    if (!k) return std::nullopt;
  }
  try {
    const int t[1] = {a};
    return hintikka(c.rel, t, *k, c.params);
  } catch (const SizeGuardExceeded&) {
    return std::nullopt;
  }
}

std::optional<int> element_witness_rank(const Formula& f) { return quantifier_rank(f); }

std::optional<Formula> subset_explicit_witness(const Context& c, ElementSet a) {
  if (c.all_params_mode()) {
    std::vector<Formula> parts;
    for (int x : a.elements()) parts.push_back(parameter_equation(x));
    if (parts.empty()) return Formula::negation(Formula::equals(Term::variable("x1"), Term::variable("x1")));
    return Formula::disjunction(parts);
  }
  auto k = c.witness_rank();
  if (!k) return std::nullopt;
  std::vector<ElementSet> chosen;
  for (auto blk : c.blocks)
    if (blk.subset_of(a)) chosen.push_back(blk);
  try {
    return build_union_definition(c.rel, chosen, *k, c.params);
  } catch (const SizeGuardExceeded&) {
    return std::nullopt;
  }
}

std::optional<Formula> implicit_witness_unchecked(const Context& c, ElementSet a, const std::optional<Formula>& expl,
                                                  const std::string& pred) {
  if (c.budget.rank) {
    auto subsets = c.rel.subsets();
    subsets.push_back({pred, a});
    ExpandedStructure ex(c.rel.base(), std::move(subsets), c.rel.parameters());
    try {
      return hintikka(ex, std::span<const int>{}, *c.budget.rank, c.params);
    } catch (const SizeGuardExceeded&) {
      return std::nullopt;
    }
  }
  if (!expl) return std::nullopt;
  const Term x = Term::variable(fresh_variable(all_variables(*expl)));
  Formula phi = substitute(*expl, {{"x1", x}});
  return Formula::forall(x.name, iff(Formula::predicate(pred, x), phi));
}

std::optional<Formula> subset_implicit_witness(const Context& c, ElementSet a, const std::optional<Formula>& expl,
                                               const std::string& pred) {
  auto psi = implicit_witness_unchecked(c, a, expl, pred);
  if (psi && c.n <= caps().subset_enumeration) {
    const auto sols = subset_solutions(c.rel, *psi, pred);
    if (sols.size() != 1 || sols.front() != a) throw AnalysisError("implicit witness does not single out " + a.to_string());
  }
  return psi;
}

}  // namespace

ElementClassification classify_elements(const ExpandedStructure& e, const Budget& b, bool witnesses) {
  Context c(e, b);
  ElementClassification out;
  out.certified_rank = c.certified_rank;
  out.reports.resize(static_cast<std::size_t>(c.n));
  parallel_for(static_cast<std::size_t>(c.n), [&](std::size_t i) {
    const int a = static_cast<int>(i);
    ElementReport& r = out.reports[i];
    r.element = a;
    r.degree = c.block_of(a).size();
    r.definable = r.degree == 1;
    r.algebraic = r.degree <= c.cap;
    if (witnesses) {
      r.witness = element_witness(c, a);
      if (r.witness) r.witness_rank = element_witness_rank(*r.witness);
    }
  });
  return out;
}

ElementSet dcl(const ExpandedStructure& e, const Budget& b) {
  ElementSet out;
  for (const auto& r : classify_elements(e, b).reports)
    if (r.definable) out.insert(r.element);
  return out;
}

int acl_degree(const ExpandedStructure& e, const Budget& b, int element) {
  if (element < 0 || element >= e.size()) throw SemanticError("element out of range");
  return classify_elements(e, b).reports[static_cast<std::size_t>(element)].degree;
}

std::vector<SubsetReport> classify_subsets(const ExpandedStructure& e, const Budget& b, bool witnesses) {
  const int n = e.size();
  if (b.rank) {
    if (n > caps().subset_types)
      throw CapExceeded("subset classification at finite rank over " + std::to_string(n) +
                        " elements exceeds the cap of " + std::to_string(caps().subset_types));
  } else if (n > caps().subset_enumeration) {
    throw CapExceeded("subset classification over " + std::to_string(n) + " elements exceeds the cap of " +
                      std::to_string(caps().subset_enumeration));
  }
  Context c(e, b);
  std::optional<SubsetTypeMap> stm;
  if (b.rank) stm = subset_type_map(c.rel, *b.rank, c.params);
  const std::string pred = fresh_predicate(c.rel);

  const std::size_t total = std::size_t{1} << n;
  std::vector<SubsetReport> out(total);
  parallel_for(total, [&](std::size_t mask) {
    SubsetReport& r = out[mask];
    r.subset = ElementSet(mask);
    bool expl = true;
    for (auto blk : c.blocks) {
      const ElementSet meet = blk & r.subset;
      if (!meet.empty() && meet != blk) {
        expl = false;
        break;
      }
    }
    r.explicit_definable = expl;
    if (stm) {
      r.alg_degree = stm->fiber_size(r.subset);
    } else {
      r.alg_degree = orbit_of_subset(*c.group, r.subset).size();
    }
    r.implicit_definable = r.alg_degree == 1;
    r.algebraic = r.alg_degree <= static_cast<std::size_t>(c.cap);
    if (witnesses) {
      if (r.explicit_definable) r.explicit_witness = subset_explicit_witness(c, r.subset);
      if (r.implicit_definable) r.implicit_witness = subset_implicit_witness(c, r.subset, r.explicit_witness, pred);
    }
  });
  return out;
}

SubsetReport classify_subset(const ExpandedStructure& e, const Budget& b, ElementSet subset, bool witnesses) {
  ElementSet::check_universe(e.size());
  if (!subset.subset_of(ElementSet::full(e.size()))) throw SemanticError("subset is not contained in the universe");
  auto all = classify_subsets(e, b, false);
  SubsetReport r = all[subset.mask()];
  if (witnesses) {
    Context c(e, b);
    const std::string pred = fresh_predicate(c.rel);
    if (r.explicit_definable) r.explicit_witness = subset_explicit_witness(c, subset);
    if (r.implicit_definable) r.implicit_witness = subset_implicit_witness(c, subset, r.explicit_witness, pred);
  }
  return r;
}

Conversion alg_to_imp(const ExpandedStructure& e, const Formula& psi, const Budget& b, ElementSet target,
                      const std::string& predicate) {
  b.validate(e.size());
  const std::vector<int> allowed = b.resolve_params(e.size());
  const auto solutions = subset_solutions(e, psi, predicate, allowed);
  if (std::find(solutions.begin(), solutions.end(), target) == solutions.end())
    throw AnalysisError("target " + target.to_string() + " is not a solution of the implicit definition");
  if (static_cast<int>(solutions.size()) > b.degree_cap(e.size()))
    throw AnalysisError("the definition has " + std::to_string(solutions.size()) +
                        " solutions, more than the degree cap of " + std::to_string(b.degree_cap(e.size())));
  std::set<int> separators;
  for (ElementSet rival : solutions)
    if (rival != target) separators.insert((rival ^ target).min());
  std::vector<Formula> parts{psi};
  for (int a : separators) {
    Formula lit = Formula::predicate(predicate, Term::param(a));
    parts.push_back(target.contains(a) ? lit : Formula::negation(lit));
  }
  Conversion out{separators.empty() ? psi : Formula::conjunction(parts),
                 std::vector<int>(separators.begin(), separators.end()), solutions};
  std::vector<int> widened = allowed;
  widened.insert(widened.end(), separators.begin(), separators.end());
  const auto check = subset_solutions(e, out.sentence, predicate, normalize_params(widened, e.size()));
  if (check.size() != 1 || check.front() != target)
    throw AnalysisError("converted sentence does not single out the target");
  return out;
}

std::vector<std::pair<int, Formula>> pin_elements(const ExpandedStructure& e, const Formula& set_def,
                                                  const Formula& order_def, const std::vector<int>& params) {
  const auto set_vars = free_variables(set_def);
  const auto order_vars = free_variables(order_def);
  if (set_vars.size() != 1) throw SemanticError("the set definition needs exactly one free variable");
  if (order_vars.size() != 2) throw SemanticError("the order definition needs exactly two free variables");
  const std::vector<int> allowed = normalize_params(params, e.size());
  for (const Formula* f : {&set_def, &order_def})
    for (int p : parameters_used(*f))
      if (!std::binary_search(allowed.begin(), allowed.end(), p))
        throw SemanticError("parameter @" + std::to_string(p) + " is not in the permitted parameter set");

  const ElementSet a_set = solution_set(e, set_def);
  if (a_set.empty()) throw AnalysisError("the defined set is empty");
  const std::vector<int> members = a_set.elements();

  Evaluator order(e, order_def);
  auto before = [&](int u, int v) {
    const int vals[2] = {u, v};
    return order.eval(vals);
  };
  for (int u : members) {
    if (before(u, u)) throw AnalysisError("order is not irreflexive on the defined set");
    for (int v : members) {
      if (u != v && before(u, v) == before(v, u)) throw AnalysisError("order is not a strict linear order on the defined set");
      for (int w : members)
        if (before(u, v) && before(v, w) && !before(u, w)) throw AnalysisError("order is not transitive on the defined set");
    }
  }
  std::vector<int> ordered = members;
  std::sort(ordered.begin(), ordered.end(), [&](int u, int v) { return before(u, v); });
  if (ordered.size() == 1) return {{ordered.front(), set_def}};

  std::set<std::string> used = all_variables(set_def);
  for (const auto& v : all_variables(order_def)) used.insert(v);
  auto fresh = [&]() {
    std::string v = fresh_variable(used);
    used.insert(v);
    return v;
  };
  const Term x = Term::variable(set_vars.front());
  auto phi = [&](const Term& t) { return substitute(set_def, {{set_vars.front(), t}}); };
  auto prec = [&](const Term& s, const Term& t) {
    return substitute(order_def, {{order_vars[0], s}, {order_vars[1], t}});
  };
  const std::string z_name = fresh();
  const Term z = Term::variable(z_name);

  std::vector<std::pair<int, Formula>> out;
  std::vector<std::string> ys;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    Formula f = Formula::truth();
    if (i == 0) {
      f = Formula::conjunction(
          {phi(x), Formula::forall(z_name, Formula::implication(phi(z), Formula::negation(prec(z, x))))});
    } else {
      ys.push_back(fresh());
      std::vector<Formula> body;
      for (std::size_t j = 0; j < ys.size(); ++j)
        for (std::size_t l = j + 1; l < ys.size(); ++l)
          body.push_back(Formula::negation(Formula::equals(Term::variable(ys[j]), Term::variable(ys[l]))));
      std::vector<Formula> cover;
      for (const auto& y : ys) {
        body.push_back(phi(Term::variable(y)));
        body.push_back(prec(Term::variable(y), x));
        cover.push_back(Formula::equals(z, Term::variable(y)));
      }
      body.push_back(Formula::forall(
          z_name, Formula::implication(Formula::conjunction({phi(z), prec(z, x)}), Formula::disjunction(cover))));
      Formula inner = Formula::conjunction(body);
      for (auto it = ys.rbegin(); it != ys.rend(); ++it) inner = Formula::exists(*it, inner);
      f = Formula::conjunction({phi(x), inner});
    }
    if (solution_set(e, f) != ElementSet::singleton(ordered[i]))
      throw AnalysisError("pinning formula does not define element " + std::to_string(ordered[i]));
    out.emplace_back(ordered[i], f);
  }
  return out;
}

StructureClassification classify_structure(const ExpandedStructure& e, const Budget& b) {
  StructureClassification out;
  out.elements = classify_elements(e, b);
  for (const auto& r : out.elements.reports) {
    out.pointwise_definable = out.pointwise_definable && r.definable;
    out.pointwise_algebraic_degree = std::max(out.pointwise_algebraic_degree, r.degree);
  }
  return out;
}

GapReport search_gap(const std::vector<Structure>& corpus, int k, GapDirection direction) {
  GapReport out;
  out.rank = k;
  out.direction = direction;
  for (const auto& s : corpus) {
    if (s.size() > caps().subset_types) {
      out.skipped.push_back(s.name());
      continue;
    }
    out.searched.push_back(s.name());
    for (const auto& r : classify_subsets(s, Budget::at_rank(k))) {
      const bool hit = direction == GapDirection::ImplicitNotExplicit ? (r.implicit_definable && !r.explicit_definable)
                                                                      : (r.explicit_definable && !r.implicit_definable);
      if (hit) out.entries.push_back({s.name(), r.subset, r.alg_degree});
    }
  }
  return out;
}

}  // namespace defilab
