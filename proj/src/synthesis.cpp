#include "defilab/synthesis.hpp"

#include <algorithm>
#include <map>

#include "defilab/caps.hpp"
#include "defilab/error.hpp"
#include "defilab/eval.hpp"

namespace defilab {

namespace {

class HintikkaBuilder {
 public:
  HintikkaBuilder(const ExpandedStructure& e, const std::vector<int>& params)
      : e_(relationalized(e)), engine_(type_engine(e_, params)), params_(engine_->params()) {}

  Formula build(std::vector<int>& tuple, int k, bool full) {
    const std::uint32_t id = engine_->type_of(tuple, k);
    const auto key = std::make_tuple(id, full, tuple.size());
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    std::vector<Formula> parts = atoms(tuple, full);
    if (k > 0) {
      // one representative (the least element) per extension type
      std::map<std::uint32_t, int> reps;
      for (int a = 0; a < e_.size(); ++a) {
        tuple.push_back(a);
        reps.emplace(engine_->type_of(tuple, k - 1), a);
        tuple.pop_back();
      }
      std::vector<int> order;
      for (const auto& [t, a] : reps) order.push_back(a);
      std::sort(order.begin(), order.end());
      const std::string var = supply_variable(static_cast<int>(tuple.size()));
      std::vector<Formula> cover;
      for (int a : order) {
        tuple.push_back(a);
        Formula sub = build(tuple, k - 1, false);
        tuple.pop_back();
        parts.push_back(factory_.intern(Formula::exists(var, sub)));
        cover.push_back(sub);
      }
      parts.push_back(factory_.intern(Formula::forall(var, factory_.intern(Formula::disjunction(cover)))));
    }
    Formula out = factory_.intern(Formula::conjunction(parts));
    if (tree_size(out) > caps().formula_nodes)
      throw SizeGuardExceeded("Hintikka formula exceeds the size guard of " + std::to_string(caps().formula_nodes) +
                              " nodes");
    memo_.emplace(key, out);
    return out;
  }

  const ExpandedStructure& structure() const { return e_; }

 private:
  Formula literal(Formula atom, bool holds) {
    return factory_.intern(holds ? atom : Formula::negation(factory_.intern(atom)));
  }

  // Atomic diagram of the tuple. With full == false only the facts that
  // mention the last position are produced.
  std::vector<Formula> atoms(const std::vector<int>& tuple, bool full) {
    std::vector<Formula> out;
    const int m = static_cast<int>(tuple.size());
    std::vector<Term> terms;
    std::vector<int> values;
    for (int i = 0; i < m; ++i) {
      terms.push_back(Term::variable(supply_variable(i)));
      values.push_back(tuple[static_cast<std::size_t>(i)]);
    }
    for (int p : params_) {
      terms.push_back(Term::param(p));
      values.push_back(p);
    }
    const int t = static_cast<int>(terms.size());
    auto relevant = [&](int pos) { return m == 0 ? full : (full ? pos < m : pos == m - 1); };
    auto mentions = [&](const std::vector<int>& idx) {
      if (m == 0) return full;
      for (int i : idx)
        if (relevant(i)) return true;
      return false;
    };

    // equalities between a variable and an earlier term or parameter
    for (int i = 0; i < m; ++i) {
      if (!relevant(i)) continue;
      for (int j = 0; j < t; ++j) {
        if (j == i || (j < m && j > i && relevant(j))) continue;
        out.push_back(literal(Formula::equals(terms[static_cast<std::size_t>(i)], terms[static_cast<std::size_t>(j)]),
                              values[static_cast<std::size_t>(i)] == values[static_cast<std::size_t>(j)]));
      }
    }
    const Signature& sig = e_.base().signature();
    std::vector<int> idx;
    std::vector<int> args;
    for (std::size_t r = 0; r < sig.relations().size() && t > 0; ++r) {
      const int arity = sig.relations()[r].arity;
      const Relation& rel = e_.base().relation(static_cast<int>(r));
      idx.assign(static_cast<std::size_t>(arity), 0);
      args.assign(static_cast<std::size_t>(arity), 0);
      while (true) {
        if (mentions(idx)) {
          std::vector<Term> ts;
          for (int a = 0; a < arity; ++a) {
            ts.push_back(terms[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])]);
            args[static_cast<std::size_t>(a)] = values[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])];
          }
          out.push_back(literal(Formula::relation(sig.relations()[r].name, std::move(ts)), rel.contains(args)));
        }
        int pos = arity - 1;
        while (pos >= 0 && ++idx[static_cast<std::size_t>(pos)] == t) idx[static_cast<std::size_t>(pos--)] = 0;
        if (pos < 0) break;
      }
    }
    for (const auto& pred : e_.subsets())
      for (int i = 0; i < t; ++i)
        if (mentions({i}))
          out.push_back(literal(Formula::predicate(pred.name, terms[static_cast<std::size_t>(i)]),
                                pred.members.contains(values[static_cast<std::size_t>(i)])));
    // over an empty diagram a variable would otherwise drop out of the formula
    const auto present = free_variables(Formula::conjunction(out));
    for (int i = 0; i < m; ++i) {
      const auto& name = terms[static_cast<std::size_t>(i)].name;
      if (relevant(i) && !std::binary_search(present.begin(), present.end(), name))
        out.push_back(factory_.intern(Formula::equals(terms[static_cast<std::size_t>(i)], terms[static_cast<std::size_t>(i)])));
    }
    return out;
  }

  ExpandedStructure e_;
  std::shared_ptr<TypeEngine> engine_;
  std::vector<int> params_;
  FormulaFactory factory_;
  std::map<std::tuple<std::uint32_t, bool, std::size_t>, Formula> memo_;
};

}  // namespace

Formula hintikka(const ExpandedStructure& e, std::span<const int> tuple, int k, const std::vector<int>& params) {
  if (k < 0) throw SemanticError("rank must be non-negative");
  HintikkaBuilder builder(e, params);
  std::vector<int> t(tuple.begin(), tuple.end());
  Formula h = builder.build(t, k, true);

  const ExpandedStructure& rel = builder.structure();
  Evaluator ev(rel, h);
  std::vector<int> values(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) values[i] = t[i];
  // free_variables() is name-sorted; map back to positions
  std::vector<int> ordered;
  for (const auto& v : ev.free_variables()) ordered.push_back(values[static_cast<std::size_t>(std::stoi(v.substr(1)) - 1)]);
  if (!ev.eval(ordered)) throw AnalysisError("synthesized Hintikka formula fails at its own tuple");
  if (t.size() == 1) {
    const std::uint32_t own = type_engine(rel, params)->type_of(t, k);
    for (int b = 0; b < rel.size(); ++b) {
      const int bt[1] = {b};
      const bool same = type_engine(rel, params)->type_of(bt, k) == own;
      if (ev.eval(bt) != same) throw AnalysisError("synthesized Hintikka formula does not isolate the type class");
    }
  }
  return h;
}

Formula build_union_definition(const ExpandedStructure& e, const std::vector<ElementSet>& blocks, int k,
                               const std::vector<int>& params) {
  const std::string x = supply_variable(0);
  ElementSet target;
  std::vector<Formula> parts;
  for (const auto& block : blocks) {
    if (block.empty()) continue;
    target = target | block;
    const int rep[1] = {block.min()};
    parts.push_back(hintikka(e, rep, k, params));
  }
  Formula out = parts.empty() ? Formula::negation(Formula::equals(Term::variable(x), Term::variable(x)))
                              : Formula::disjunction(parts);
  if (solution_set(relationalized(e), out) != target)
    throw AnalysisError("blocks are not unions of rank-" + std::to_string(k) + " type classes");
  return out;
}

}  // namespace defilab
