#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <random>
#include <set>
#include <thread>

#include "defilab/aut.hpp"
#include "defilab/caps.hpp"
#include "defilab/corpus.hpp"
#include "defilab/error.hpp"
#include "defilab/eval.hpp"
#include "defilab/formula.hpp"
#include "oracles.hpp"

using namespace defilab;

namespace {

Formula parse(const ExpandedStructure& e, const std::string& text, std::vector<std::string> preds = {}) {
  return parse_formula(text, SymbolContext::of(e, std::move(preds)));
}

std::vector<std::vector<ElementSet>> brute_subset_orbits(const Structure& s, const std::vector<int>& params) {
  const auto group = oracle::brute_automorphisms(s, params);
  const int n = s.size();
  std::vector<bool> seen(std::size_t{1} << n, false);
  std::vector<std::vector<ElementSet>> out;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) {
    if (seen[m]) continue;
    std::set<ElementSet> orbit;
    for (const auto& g : group) orbit.insert(oracle::image(g, ElementSet(m)));
    for (auto b : orbit) seen[b.mask()] = true;
    out.emplace_back(orbit.begin(), orbit.end());
  }
  return out;
}

// Substitutes x for every other free variable so the formula is unary.
Formula unary(const Formula& f) {
  std::map<std::string, Term> repl;
  for (const auto& v : free_variables(f))
    if (v != "x") repl.emplace(v, Term::variable("x"));
  return substitute(f, repl);
}

}  // namespace

TEST_CASE("sat examples") {
  const Structure l2 = gen_linear_order(2);
  const Formula f = parse(l2, "exists y. x < y");
  CHECK(sat(l2, f, {{"x", 0}}));
  CHECK_FALSE(sat(l2, f, {{"x", 1}}));
  CHECK_THROWS_AS(sat(l2, f, {}), SemanticError);

  const Structure gf4 = gen_finite_field(2, 2);
  const Formula prim = parse(gf4, "x*x + x + 1 = 0");
  for (int a = 0; a < 4; ++a) CHECK(sat(gf4, prim, {{"x", a}}) == (a >= 2));

  for (const auto& s : small_corpus(4)) {
    const Formula id = parse(s, "x = x");
    for (int a = 0; a < s.size(); ++a) CHECK(sat(s, id, {{"x", a}}));
  }
}

TEST_CASE("solution_set examples") {
  const Structure l3 = gen_linear_order(3);
  CHECK(solution_set(l3, parse(l3, "exists y. x < y")) == ElementSet::of({0, 1}));
  CHECK(solution_set(l3, parse(l3, "~(x = x)")).empty());
  const Structure gf4 = gen_finite_field(2, 2);
  CHECK(solution_set(gf4, parse(gf4, "x*x + x + 1 = 0")) == ElementSet::of({2, 3}));
  CHECK_THROWS_AS(solution_set(l3, parse(l3, "x < y")), SemanticError);
}

TEST_CASE("subset_solutions examples") {
  const Structure l2 = gen_linear_order(2);
  const auto singleton = parse(l2, "exists x. A(x) & forall y. (A(y) -> y = x)", {"A"});
  CHECK(subset_solutions(l2, singleton) == std::vector<ElementSet>{ElementSet::of({0}), ElementSet::of({1})});
  CHECK(subset_solutions(l2, parse(l2, "forall x. A(x)", {"A"})) == std::vector<ElementSet>{ElementSet::full(2)});
  CHECK(subset_solutions(l2, parse(l2, "exists x. A(x) & ~A(x)", {"A"})).empty());

  const auto with_param = parse(l2, "A(@1) & forall x. (A(x) -> x = @1)", {"A"});
  CHECK(subset_solutions(l2, with_param, "A", std::vector<int>{1}) == std::vector<ElementSet>{ElementSet::of({1})});
  CHECK_THROWS_AS(subset_solutions(l2, with_param, "A", std::vector<int>{}), SemanticError);

  Caps small = caps();
  const Caps saved = small;
  small.subset_enumeration = 3;
  set_caps(small);
  CHECK_THROWS_AS(subset_solutions(gen_linear_order(4), parse(gen_linear_order(4), "forall x. A(x)", {"A"})),
                  CapExceeded);
  set_caps(saved);
}

TEST_CASE("subset_solutions matches sequential evaluation") {
  const Structure s = gen_directed_cycle(6);
  const auto psi = parse(s, "forall x. (A(x) -> exists y. (E(x, y) & ~A(y)))", {"A"});
  std::vector<ElementSet> expected;
  for (std::uint64_t m = 0; m < 64; ++m) {
    bool ok = true;
    for (int x = 0; x < 6; ++x)
      if (((m >> x) & 1U) && ((m >> ((x + 1) % 6)) & 1U)) ok = false;
    if (ok) expected.emplace_back(m);
  }
  CHECK(subset_solutions(s, psi) == expected);
}

TEST_CASE("type_k examples") {
  const Structure l2 = gen_linear_order(2);
  const std::vector<int> a{0}, b{1};
  CHECK(type_k(l2, a, 0) == type_k(l2, b, 0));
  CHECK_FALSE(type_k(l2, a, 1) == type_k(l2, b, 1));
  for (const auto& s : small_corpus(4)) {
    const Structure r = relationalize(s);
    for (int k = 0; k < 3; ++k)
      for (int x = 0; x < r.size(); ++x) {
        const std::vector<int> t{x, x};
        CHECK(type_k(r, t, k) == type_k(r, t, k));
      }
  }
  CHECK_THROWS_AS(type_k(gen_finite_field(2, 2), a, 1), SemanticError);
}

TEST_CASE("element_partition examples") {
  const Structure l3 = gen_linear_order(3);
  CHECK(element_partition(l3, 0) == Partition{ElementSet::full(3)});
  CHECK(element_partition(l3, 1) == Partition{ElementSet::of({0}), ElementSet::of({1}), ElementSet::of({2})});
  const Structure gf4 = relationalize(gen_finite_field(2, 2));
  CHECK(element_partition(gf4, 5) == Partition{ElementSet::of({0}), ElementSet::of({1}), ElementSet::of({2, 3})});
  CHECK(element_partition(gf4, 5, {2}) ==
        Partition{ElementSet::of({0}), ElementSet::of({1}), ElementSet::of({2}), ElementSet::of({3})});
}

TEST_CASE("subset_type_map examples") {
  const Structure l2 = gen_linear_order(2);
  const auto m1 = subset_type_map(l2, 1);
  const std::vector<std::vector<ElementSet>> expected{
      {ElementSet()}, {ElementSet::of({0}), ElementSet::of({1})}, {ElementSet::of({0, 1})}};
  auto fibers = m1.fibers();
  std::sort(fibers.begin(), fibers.end());
  auto want = expected;
  std::sort(want.begin(), want.end());
  CHECK(fibers == want);
  CHECK(m1.fiber_size(ElementSet::of({0})) == 2);

  for (const auto& s : {gen_linear_order(3), gen_directed_cycle(3), gen_linear_order(1)}) {
    const auto m0 = subset_type_map(s, 0);
    CHECK(m0.fibers().size() == 1);
  }
  const auto single = subset_type_map(gen_linear_order(1), 1);
  CHECK(single.fibers().size() == 2);

  Caps small = caps();
  const Caps saved = small;
  small.subset_types = 3;
  set_caps(small);
  CHECK_THROWS_AS(subset_type_map(gen_linear_order(4), 1), CapExceeded);
  set_caps(saved);
}

TEST_CASE("type partitions refine with rank") {
  for (const auto& s : small_corpus(5)) {
    const Structure r = relationalize(s);
    Partition prev = element_partition(r, 0);
    for (int k = 1; k <= r.size() + 1; ++k) {
      const Partition cur = element_partition(r, k);
      for (auto block : cur)
        CHECK(std::any_of(prev.begin(), prev.end(), [&](ElementSet p) { return block.subset_of(p); }));
      prev = cur;
    }
    if (r.size() > 4) continue;
    auto prev_map = subset_type_map(r, 0);
    for (int k = 1; k <= 3; ++k) {
      auto cur_map = subset_type_map(r, k);
      for (std::uint64_t a = 0; a < prev_map.types.size(); ++a)
        for (std::uint64_t b = 0; b < a; ++b)
          if (cur_map.types[a] == cur_map.types[b]) CHECK(prev_map.types[a] == prev_map.types[b]);
      prev_map = std::move(cur_map);
    }
  }
}

TEST_CASE("rank k* fibers coincide with orbits") {
  for (const auto& s : small_corpus(6)) {
    const Structure r = relationalize(s);
    const int kstar = r.size() + 1;
    std::vector<std::vector<int>> param_sets{{}};
    if (r.size() > 0) param_sets.push_back({0});
    if (r.size() > 2) param_sets.push_back({r.size() - 1});
    for (const auto& params : param_sets) {
      CAPTURE(s.name());
      const auto group = oracle::brute_automorphisms(s, params);
      CHECK(element_partition(r, kstar, params) == oracle::orbit_partition(r.size(), group));
      if (r.size() > 5) continue;
      auto fibers = subset_type_map(r, kstar, params).fibers();
      auto orbits = brute_subset_orbits(s, params);
      std::sort(fibers.begin(), fibers.end());
      std::sort(orbits.begin(), orbits.end());
      CHECK(fibers == orbits);
    }
  }
}

TEST_CASE("types agree with the naive recursion") {
  for (const auto& s : small_corpus(5)) {
    const Structure r = relationalize(s);
    for (int k = 0; k <= 3; ++k) {
      std::vector<std::vector<int>> param_sets{{}};
      if (r.size() > 1) param_sets.push_back({1});
      for (const auto& params : param_sets) {
        CAPTURE(s.name());
        CAPTURE(k);
        oracle::NaiveTypes naive(r, {}, params);
        CHECK(element_partition(r, k, params) == naive.element_partition(k));
        if (r.size() <= 4 && k <= 2) {
          const auto fibers = oracle::naive_subset_fibers(r, k, params);
          const auto map = subset_type_map(r, k, params);
          for (std::uint64_t m = 0; m < fibers.size(); ++m) CHECK(map.fiber_size(ElementSet(m)) == fibers[m]);
        }
      }
    }
  }
}

TEST_CASE("pairs with equal types satisfy the same formulas") {
  // exhaustive at rank 1: existential closures of every conjunction of literals
  for (const auto& s : {gen_linear_order(4), gen_directed_cycle(4), all_digraphs(3)[5], all_digraphs(3)[11]}) {
    const std::string rel = s.signature().relations()[0].name;
    const auto fact = [&](const std::string& a, const std::string& b) {
      return std::isalpha(static_cast<unsigned char>(rel[0])) ? rel + "(" + a + ", " + b + ")" : a + " " + rel + " " + b;
    };
    const std::vector<std::string> atoms{fact("x", "x"), fact("x", "y"), fact("y", "x"), fact("y", "y"), "x = y"};
    const Partition p1 = element_partition(s, 1);
    std::vector<Formula> formulas;
    for (int code = 0; code < 243; ++code) {
      std::string body;
      int c = code;
      for (const auto& atom : atoms) {
        const int lit = c % 3;
        c /= 3;
        if (lit == 0) continue;
        if (!body.empty()) body += " & ";
        body += lit == 1 ? atom : "~" + atom;
      }
      if (body.empty()) body = "x = x";
      formulas.push_back(parse(s, "exists y. (" + body + ")"));
    }
    for (const auto& f : formulas) {
      const ElementSet sol = solution_set(s, f);
      for (auto block : p1) CHECK(((sol & block) == block || (sol & block).empty()));
    }
  }
  // random formulas up to rank 3
  const auto corpus = small_corpus(5);
  for (std::uint32_t seed = 0; seed < 600; ++seed) {
    const Structure r = relationalize(corpus[seed % corpus.size()]);
    oracle::FormulaGenerator gen(r.signature(), {}, r.size(), seed);
    const Formula f = unary(gen.formula(3, 5));
    if (!parameters_used(f).empty()) continue;
    const int k = quantifier_rank(f);
    const ElementSet sol = solution_set(r, f);
    for (auto block : element_partition(r, k)) CHECK(((sol & block) == block || (sol & block).empty()));
  }
}

TEST_CASE("sat agrees with the reference evaluator") {
  const auto corpus = small_corpus(5);
  std::mt19937 rng(7);
  for (std::uint32_t seed = 0; seed < 1000; ++seed) {
    const Structure& s = corpus[seed % corpus.size()];
    oracle::FormulaGenerator gen(s.signature(), {"A"}, s.size(), seed);
    const Formula f = gen.formula(3, 5);
    std::uniform_int_distribution<int> el(0, s.size() - 1);
    Assignment a;
    for (const auto& v : free_variables(f)) a[v] = el(rng);
    const ElementSet pred(rng() & ((std::uint64_t{1} << s.size()) - 1));
    const ExpandedStructure e = expand(s, {{"A", pred}});
    CHECK(sat(e, f, a) == oracle::reference_sat(s, f, a, {{"A", pred}}));
  }
}

TEST_CASE("evaluator rebinding drops stale cache entries") {
  const Structure c4 = gen_directed_cycle(4);
  const Formula f = parse(c4, "exists y. (E(x, y) & A(y))", {"A"});
  Evaluator ev(c4, f, {"A"});
  const std::vector<int> at0{0};
  CHECK_FALSE(ev.eval(at0));
  ev.set_predicate("A", ElementSet::of({1}));
  CHECK(ev.eval(at0));
  ev.set_predicate("A", ElementSet::of({2}));
  CHECK_FALSE(ev.eval(at0));
}

TEST_CASE("concurrent interning yields one logical map") {
  auto interner = std::make_shared<TypeInterner>();
  std::vector<std::uint32_t> ids(2000);
  std::vector<std::thread> workers;
  for (int t = 0; t < 4; ++t)
    workers.emplace_back([&, t] {
      for (std::uint32_t i = 0; i < 2000; ++i) {
        const auto id = interner->intern({i % 500, 7});
        if (static_cast<int>(i % 4) == t) ids[i] = id;
      }
    });
  for (auto& w : workers) w.join();
  CHECK(interner->size() == 500);
  for (std::uint32_t i = 0; i < 2000; ++i) CHECK(ids[i] == ids[i % 500]);
}
