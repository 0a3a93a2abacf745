#include "oracles.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace oracle {

using defilab::FormulaKind;
using defilab::Term;

namespace {

bool preserves(const Structure& s, const Perm& p, const std::vector<ElementSet>& predicates) {
  const auto& sig = s.signature();
  for (std::size_t r = 0; r < sig.relations().size(); ++r)
    for (const auto& t : s.relation(static_cast<int>(r)).tuples()) {
      std::vector<int> u;
      for (int x : t) u.push_back(p[static_cast<std::size_t>(x)]);
      if (!s.relation(static_cast<int>(r)).contains(u)) return false;
    }
  const int n = s.size();
  for (std::size_t f = 0; f < sig.functions().size(); ++f) {
    const auto& table = s.function(static_cast<int>(f));
    const int arity = sig.functions()[f].arity;
    std::vector<int> args(static_cast<std::size_t>(arity), 0);
    while (true) {
      std::vector<int> mapped;
      for (int a : args) mapped.push_back(p[static_cast<std::size_t>(a)]);
      if (p[static_cast<std::size_t>(table.apply(args))] != table.apply(mapped)) return false;
      int pos = arity - 1;
      while (pos >= 0 && ++args[static_cast<std::size_t>(pos)] == n) args[static_cast<std::size_t>(pos--)] = 0;
      if (pos < 0) break;
    }
  }
  for (auto pred : predicates)
    if (image(p, pred) != pred) return false;
  return true;
}

}  // namespace

ElementSet image(const Perm& p, ElementSet s) {
  ElementSet out;
  for (int x : s.elements()) out.insert(p[static_cast<std::size_t>(x)]);
  return out;
}

std::vector<Perm> brute_automorphisms(const Structure& s, const std::vector<int>& params,
                                      const std::vector<ElementSet>& predicates) {
  Perm p(static_cast<std::size_t>(s.size()));
  std::iota(p.begin(), p.end(), 0);
  std::vector<Perm> out;
  do {
    bool fixes = true;
    for (int a : params) fixes = fixes && p[static_cast<std::size_t>(a)] == a;
    if (fixes && preserves(s, p, predicates)) out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

std::vector<ElementSet> orbit_partition(int n, const std::vector<Perm>& group) {
  std::vector<ElementSet> out;
  ElementSet seen;
  for (int x = 0; x < n; ++x) {
    if (seen.contains(x)) continue;
    ElementSet orbit;
    for (const auto& g : group) orbit.insert(g[static_cast<std::size_t>(x)]);
    seen = seen | orbit;
    out.push_back(orbit);
  }
  return out;
}

NaiveTypes::NaiveTypes(const Structure& relational, std::vector<ElementSet> predicates, std::vector<int> params)
    : s_(relational), predicates_(std::move(predicates)), params_(std::move(params)) {}

int NaiveTypes::intern(std::vector<int> key) { return ids_.emplace(std::move(key), static_cast<int>(ids_.size())).first->second; }

int NaiveTypes::atomic(const std::vector<int>& tuple) {
  std::vector<int> terms = tuple;
  terms.insert(terms.end(), params_.begin(), params_.end());
  const int t = static_cast<int>(terms.size());
  std::vector<int> key{-1};
  for (int i = 0; i < t; ++i)
    for (int j = i + 1; j < t; ++j) key.push_back(terms[static_cast<std::size_t>(i)] == terms[static_cast<std::size_t>(j)]);
  const auto& sig = s_.signature();
  for (std::size_t r = 0; r < sig.relations().size(); ++r) {
    const int arity = sig.relations()[r].arity;
    std::vector<int> idx(static_cast<std::size_t>(arity), 0);
    if (t == 0) continue;
    while (true) {
      std::vector<int> args;
      for (int i : idx) args.push_back(terms[static_cast<std::size_t>(i)]);
      key.push_back(s_.relation(static_cast<int>(r)).contains(args));
      int pos = arity - 1;
      while (pos >= 0 && ++idx[static_cast<std::size_t>(pos)] == t) idx[static_cast<std::size_t>(pos--)] = 0;
      if (pos < 0) break;
    }
  }
  for (auto pred : predicates_)
    for (int x : terms) key.push_back(pred.contains(x));
  return intern(std::move(key));
}

int NaiveTypes::type(std::vector<int>& tuple, int k) {
  auto memo_key = std::make_pair(tuple, k);
  if (auto it = memo_.find(memo_key); it != memo_.end()) return it->second;
  std::vector<int> key{-2, k, atomic(tuple)};
  if (k > 0) {
    std::set<int> ext;
    for (int a = 0; a < s_.size(); ++a) {
      tuple.push_back(a);
      ext.insert(type(tuple, k - 1));
      tuple.pop_back();
    }
    key.insert(key.end(), ext.begin(), ext.end());
  }
  const int id = intern(std::move(key));
  memo_.emplace(std::move(memo_key), id);
  return id;
}

std::vector<ElementSet> NaiveTypes::element_partition(int k) {
  std::map<int, ElementSet> blocks;
  for (int a = 0; a < s_.size(); ++a) {
    std::vector<int> t{a};
    blocks[type(t, k)].insert(a);
  }
  std::vector<ElementSet> out;
  for (const auto& [id, b] : blocks) out.push_back(b);
  std::sort(out.begin(), out.end(), [](ElementSet a, ElementSet b) { return a.min() < b.min(); });
  return out;
}

std::vector<std::size_t> naive_subset_fibers(const Structure& relational, int k, const std::vector<int>& params) {
  const std::size_t total = std::size_t{1} << relational.size();
  // sentence types of different expansions are compared as serialised type trees
  std::vector<std::string> keys(total);
  for (std::size_t mask = 0; mask < total; ++mask) {
    // serialise the type tree of the empty tuple
    std::function<std::string(std::vector<int>&, int)> text = [&](std::vector<int>& t, int j) -> std::string {
      std::string atoms;
      {
        std::vector<int> terms = t;
        terms.insert(terms.end(), params.begin(), params.end());
        const int m = static_cast<int>(terms.size());
        for (int a = 0; a < m; ++a)
          for (int b = a + 1; b < m; ++b) atoms += terms[static_cast<std::size_t>(a)] == terms[static_cast<std::size_t>(b)] ? '1' : '0';
        const auto& sig = relational.signature();
        for (std::size_t r = 0; r < sig.relations().size() && m > 0; ++r) {
          const int arity = sig.relations()[r].arity;
          std::vector<int> idx(static_cast<std::size_t>(arity), 0);
          while (true) {
            std::vector<int> args;
            for (int i : idx) args.push_back(terms[static_cast<std::size_t>(i)]);
            atoms += relational.relation(static_cast<int>(r)).contains(args) ? '1' : '0';
            int pos = arity - 1;
            while (pos >= 0 && ++idx[static_cast<std::size_t>(pos)] == m) idx[static_cast<std::size_t>(pos--)] = 0;
            if (pos < 0) break;
          }
        }
        for (int x : terms) atoms += ElementSet(mask).contains(x) ? '1' : '0';
      }
      if (j == 0) return "(" + atoms + ")";
      std::set<std::string> ext;
      for (int a = 0; a < relational.size(); ++a) {
        t.push_back(a);
        ext.insert(text(t, j - 1));
        t.pop_back();
      }
      std::string out = "(" + atoms;
      for (const auto& e : ext) out += e;
      return out + ")";
    };
    std::vector<int> empty;
    keys[mask] = text(empty, k);
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& key : keys) ++counts[key];
  std::vector<std::size_t> out(total);
  for (std::size_t mask = 0; mask < total; ++mask) out[mask] = counts[keys[mask]];
  return out;
}

namespace {

int reference_term(const Structure& s, const Term& t, const std::map<std::string, int>& env) {
  switch (t.kind) {
    case Term::Kind::Variable: return env.at(t.name);
    case Term::Kind::Parameter: return t.parameter;
    case Term::Kind::Constant: {
      auto idx = s.signature().function_index(t.name);
      return s.function(*idx).apply(std::vector<int>{});
    }
    case Term::Kind::Apply: {
      std::vector<int> args;
      for (const auto& a : t.args) args.push_back(reference_term(s, a, env));
      return s.function(*s.signature().function_index(t.name)).apply(args);
    }
  }
  return 0;
}

}  // namespace

bool reference_sat(const Structure& s, const Formula& f, std::map<std::string, int> env,
                   const std::map<std::string, ElementSet>& predicates) {
  switch (f.kind()) {
    case FormulaKind::True: return true;
    case FormulaKind::False: return false;
    case FormulaKind::Equals: return reference_term(s, f.terms()[0], env) == reference_term(s, f.terms()[1], env);
    case FormulaKind::Relation: {
      std::vector<int> args;
      for (const auto& t : f.terms()) args.push_back(reference_term(s, t, env));
      return s.relation(*s.signature().relation_index(f.symbol())).contains(args);
    }
    case FormulaKind::Predicate: return predicates.at(f.symbol()).contains(reference_term(s, f.terms()[0], env));
    case FormulaKind::Not: return !reference_sat(s, f.children()[0], env, predicates);
    case FormulaKind::And:
      for (const auto& c : f.children())
        if (!reference_sat(s, c, env, predicates)) return false;
      return true;
    case FormulaKind::Or:
      for (const auto& c : f.children())
        if (reference_sat(s, c, env, predicates)) return true;
      return false;
    case FormulaKind::Implies:
      return !reference_sat(s, f.children()[0], env, predicates) || reference_sat(s, f.children()[1], env, predicates);
    case FormulaKind::Forall:
    case FormulaKind::Exists: {
      const bool universal = f.kind() == FormulaKind::Forall;
      for (int a = 0; a < s.size(); ++a) {
        env[f.variable()] = a;
        if (reference_sat(s, f.children()[0], env, predicates) != universal) return !universal;
      }
      return universal;
    }
  }
  return false;
}

namespace {

std::string canonical_term(const Term& t, const std::map<std::string, std::string>& bound) {
  switch (t.kind) {
    case Term::Kind::Variable: {
      auto it = bound.find(t.name);
      return it == bound.end() ? "free:" + t.name : it->second;
    }
    case Term::Kind::Parameter: return "@" + std::to_string(t.parameter);
    case Term::Kind::Constant: return "c:" + t.name;
    case Term::Kind::Apply: {
      std::string s = "f:" + t.name + "(";
      for (const auto& a : t.args) s += canonical_term(a, bound) + ",";
      return s + ")";
    }
  }
  return {};
}

std::string canonical(const Formula& f, std::map<std::string, std::string> bound, int depth) {
  std::string s = std::to_string(static_cast<int>(f.kind())) + "[" + f.symbol();
  for (const auto& t : f.terms()) s += " " + canonical_term(t, bound);
  if (f.kind() == FormulaKind::Forall || f.kind() == FormulaKind::Exists) {
    bound[f.variable()] = "b" + std::to_string(depth);
    return s + " " + canonical(f.children()[0], bound, depth + 1) + "]";
  }
  // n-ary connectives are flattened so that grouping does not matter
  std::function<void(const Formula&, std::vector<std::string>&)> flat = [&](const Formula& g, std::vector<std::string>& out) {
    if (g.kind() == f.kind() && (f.kind() == FormulaKind::And || f.kind() == FormulaKind::Or)) {
      for (const auto& c : g.children()) flat(c, out);
    } else {
      out.push_back(canonical(g, bound, depth));
    }
  };
  std::vector<std::string> parts;
  if (f.kind() == FormulaKind::And || f.kind() == FormulaKind::Or) {
    for (const auto& c : f.children()) flat(c, parts);
  } else {
    for (const auto& c : f.children()) parts.push_back(canonical(c, bound, depth));
  }
  for (const auto& p : parts) s += " " + p;
  return s + "]";
}

}  // namespace

std::string alpha_canonical(const Formula& f) { return canonical(f, {}, 0); }

FormulaGenerator::FormulaGenerator(const defilab::Signature& sig, std::vector<std::string> predicates, int universe,
                                   std::uint32_t seed)
    : sig_(sig), predicates_(std::move(predicates)), universe_(universe), rng_(seed) {}

Term FormulaGenerator::term(int depth, const std::vector<std::string>& scope) {
  std::uniform_int_distribution<int> pick(0, 9);
  const int r = pick(rng_);
  if (depth > 0 && r < 3 && !sig_.functions().empty()) {
    std::uniform_int_distribution<std::size_t> fn(0, sig_.functions().size() - 1);
    const auto& sym = sig_.functions()[fn(rng_)];
    if (sym.arity == 0) return Term::constant(sym.name);
    std::vector<Term> args;
    for (int i = 0; i < sym.arity; ++i) args.push_back(term(depth - 1, scope));
    return Term::apply(sym.name, std::move(args));
  }
  if (r == 3) {
    std::uniform_int_distribution<int> el(0, universe_ - 1);
    return Term::param(el(rng_));
  }
  static const std::vector<std::string> free_pool{"x", "y", "z"};
  const auto& pool = scope.empty() || r == 4 ? free_pool : scope;
  std::uniform_int_distribution<std::size_t> v(0, pool.size() - 1);
  return Term::variable(pool[v(rng_)]);
}

Formula FormulaGenerator::atom(const std::vector<std::string>& scope) {
  std::uniform_int_distribution<int> pick(0, 9);
  const int r = pick(rng_);
  if (r < 2) return r == 0 ? Formula::truth() : Formula::falsity();
  if (r < 4) return Formula::equals(term(1, scope), term(1, scope));
  if (r < 6 && !predicates_.empty()) {
    std::uniform_int_distribution<std::size_t> p(0, predicates_.size() - 1);
    return Formula::predicate(predicates_[p(rng_)], term(1, scope));
  }
  if (!sig_.relations().empty()) {
    std::uniform_int_distribution<std::size_t> rel(0, sig_.relations().size() - 1);
    const auto& sym = sig_.relations()[rel(rng_)];
    std::vector<Term> args;
    for (int i = 0; i < sym.arity; ++i) args.push_back(term(1, scope));
    return Formula::relation(sym.name, std::move(args));
  }
  return Formula::equals(term(1, scope), term(1, scope));
}

Formula FormulaGenerator::gen(int rank, int depth, std::vector<std::string>& scope) {
  std::uniform_int_distribution<int> pick(0, 9);
  if (depth == 0) return atom(scope);
  const int r = pick(rng_);
  if (r < 2) return atom(scope);
  if (r < 3) return Formula::negation(gen(rank, depth - 1, scope));
  if (r < 5) {
    std::uniform_int_distribution<int> width(2, 3);
    std::vector<Formula> parts;
    const int w = width(rng_);
    for (int i = 0; i < w; ++i) parts.push_back(gen(rank, depth - 1, scope));
    return r == 3 ? Formula::conjunction(parts) : Formula::disjunction(parts);
  }
  if (r < 6) {
    Formula a = gen(rank, depth - 1, scope);
    return Formula::implication(a, gen(rank, depth - 1, scope));
  }
  if (rank == 0) return atom(scope);
  static const std::vector<std::string> names{"x", "y", "z", "u", "v"};
  std::uniform_int_distribution<std::size_t> nm(0, names.size() - 1);
  const std::string var = names[nm(rng_)];
  scope.push_back(var);
  Formula body = gen(rank - 1, depth - 1, scope);
  scope.pop_back();
  return r < 8 ? Formula::exists(var, body) : Formula::forall(var, body);
}

Formula FormulaGenerator::formula(int max_rank, int max_depth) {
  std::vector<std::string> scope;
  return gen(max_rank, max_depth, scope);
}

std::vector<int> poly_mulmod(const std::vector<int>& a, const std::vector<int>& b, const std::vector<int>& modulus,
                             int p) {
  std::vector<int> prod(a.size() + b.size(), 0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) prod[i + j] = (prod[i + j] + a[i] * b[j]) % p;
  const std::size_t d = modulus.size() - 1;  // modulus is monic of degree d
  for (std::size_t i = prod.size(); i-- > d;) {
    const int c = prod[i];
    if (c == 0) continue;
    for (std::size_t j = 0; j <= d; ++j) prod[i - d + j] = ((prod[i - d + j] - c * modulus[j]) % p + p) % p;
  }
  prod.resize(d);
  return prod;
}

std::size_t count_extensional_wf(int n) {
  // vertex i may only have members j < i (a topological labelling exists for
  // every acyclic digraph)
  std::vector<std::pair<int, int>> slots;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) slots.emplace_back(j, i);
  std::set<std::vector<std::uint64_t>> canon;
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << slots.size()); ++mask) {
    std::vector<std::uint64_t> members(static_cast<std::size_t>(n), 0);
    for (std::size_t k = 0; k < slots.size(); ++k)
      if ((mask >> k) & 1U) members[static_cast<std::size_t>(slots[k].second)] |= std::uint64_t{1} << slots[k].first;
    std::set<std::uint64_t> distinct(members.begin(), members.end());
    if (static_cast<int>(distinct.size()) != n) continue;
    // canonical form: lexicographically least member-mask vector over relabelings
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::uint64_t> best;
    do {
      std::vector<std::uint64_t> relabeled(static_cast<std::size_t>(n), 0);
      for (int v = 0; v < n; ++v) {
        std::uint64_t m = 0;
        for (int u = 0; u < n; ++u)
          if ((members[static_cast<std::size_t>(v)] >> u) & 1U) m |= std::uint64_t{1} << perm[static_cast<std::size_t>(u)];
        relabeled[static_cast<std::size_t>(perm[static_cast<std::size_t>(v)])] = m;
      }
      if (best.empty() || relabeled < best) best = relabeled;
    } while (std::next_permutation(perm.begin(), perm.end()));
    canon.insert(best);
  }
  return canon.size();
}

}  // namespace oracle
