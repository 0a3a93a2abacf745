#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "defilab/aut.hpp"
#include "defilab/caps.hpp"
#include "defilab/corpus.hpp"
#include "defilab/error.hpp"
#include "defilab/eval.hpp"
#include "defilab/hierarchy.hpp"
#include "defilab/structure.hpp"
#include "oracles.hpp"

using namespace defilab;

TEST_CASE("load_structure reads the two-element order") {
  const Structure s = load_structure("structure L\nuniverse 2\nrelation </2 = {(0,1)}\n");
  CHECK(s.size() == 2);
  CHECK(s.relation(0).contains(std::vector<int>{0, 1}));
  CHECK_FALSE(s.relation(0).contains(std::vector<int>{1, 0}));
  CHECK(s.same_interpretation(gen_linear_order(2)));
}

TEST_CASE("load_structure rejects partial function tables") {
  const char* text = "universe 2\nfunction f/1 = {(0)->1}\n";
  try {
    load_structure(text);
    FAIL("expected an error");
  } catch (const SemanticError& e) {
    CHECK(std::string(e.what()).find("not total") != std::string::npos);
  }
}

TEST_CASE("load_structure reports positions and bad indices") {
  CHECK_THROWS_AS(load_structure("universe 2\nrelation R/1 = {(5)}\n"), SemanticError);
  try {
    load_structure("universe 2\nrelation R/1 = {(0)\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() >= 2);
  }
  CHECK_THROWS_AS(load_structure("universe 2\nfunction f/1 = {(0)->1,(0)->0,(1)->1}\n"), SemanticError);
}

TEST_CASE("print/load round trip over the corpus") {
  auto corpus = small_corpus(6);
  for (auto& s : all_digraphs(3)) corpus.push_back(s);
  corpus.push_back(gen_finite_field(3, 2));
  for (const auto& s : corpus) {
    CAPTURE(s.name());
    const Structure back = load_structure(print_structure(s));
    CHECK(back == s);
  }
}

TEST_CASE("linear order generator") {
  CHECK(gen_linear_order(1).relation(0).tuples().empty());
  const Structure l3 = gen_linear_order(3);
  CHECK(l3.relation(0).tuples() == std::vector<Tuple>{{0, 1}, {0, 2}, {1, 2}});
  CHECK(oracle::brute_automorphisms(l3).size() == 1);
}

TEST_CASE("finite fields") {
  const Structure gf2 = gen_finite_field(2, 1);
  const int plus = *gf2.signature().function_index("+");
  CHECK(gf2.function(plus).apply(std::vector<int>{1, 1}) == 0);

  // GF(4): elements 2 and 3 are x and x+1; both satisfy x*x + x + 1 = 0
  const Structure gf4 = gen_finite_field(2, 2);
  const auto tail = least_irreducible_tail(2, 2);
  std::vector<int> modulus = tail;
  modulus.push_back(1);
  const int times = *gf4.signature().function_index("*");
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const std::vector<int> pa{a & 1, a >> 1};
      const std::vector<int> pb{b & 1, b >> 1};
      const auto prod = oracle::poly_mulmod(pa, pb, modulus, 2);
      CHECK(gf4.function(times).apply(std::vector<int>{a, b}) == prod[0] + 2 * prod[1]);
    }
  const Formula f = parse_formula("x*x + x + 1 = 0", SymbolContext::of(gf4));
  CHECK(solution_set(gf4, f) == ElementSet::of({2, 3}));

  // GF(9): the multiplicative group is cyclic of order 8
  const Structure gf9 = gen_finite_field(3, 2);
  const int mul9 = *gf9.signature().function_index("*");
  int max_order = 0;
  for (int a = 1; a < 9; ++a) {
    int x = a;
    int order = 1;
    while (x != 1) {
      x = gf9.function(mul9).apply(std::vector<int>{x, a});
      ++order;
    }
    max_order = std::max(max_order, order);
  }
  CHECK(max_order == 8);

  CHECK_THROWS_AS(gen_finite_field(4, 1), SemanticError);
  CHECK_THROWS_AS(gen_finite_field(2, 10), CapExceeded);
}

TEST_CASE("least irreducible polynomial search") {
  CHECK(least_irreducible_tail(2, 2) == std::vector<int>{1, 1});  // x^2+x+1
  CHECK(least_irreducible_tail(2, 3) == std::vector<int>{1, 1, 0});  // x^3+x+1
  CHECK(least_irreducible_tail(3, 2) == std::vector<int>{1, 0});  // x^2+1
}

TEST_CASE("membership digraphs") {
  const Structure empty = gen_membership_digraph(HFSet());
  CHECK(empty.size() == 1);
  CHECK(empty.relation(0).tuples().empty());
  const Structure two = gen_membership_digraph(HFSet::decode(3));
  CHECK(two.size() == 3);
  CHECK(two.relation(0).tuples() == std::vector<Tuple>{{0, 1}, {0, 2}, {1, 2}});
  for (std::uint64_t code = 0; code < 200; ++code) {
    const Structure s = gen_membership_digraph(HFSet::decode(code));
    CHECK(check_extensional_wf(s));
  }
}

TEST_CASE("relationalize") {
  const Structure gf2 = gen_finite_field(2, 1);
  const Structure r = relationalize(gf2);
  CHECK(r.signature().relational());
  CHECK(r.signature().relation_index("Add").has_value());
  CHECK(r.signature().relation_index("Mul").has_value());
  CHECK(r.signature().relation_index("Zero").has_value());
  CHECK(r.signature().relation_index("One").has_value());
  CHECK(r.relation(*r.signature().relation_index("Add")).contains(std::vector<int>{1, 1, 0}));
  const Structure l3 = gen_linear_order(3);
  CHECK(relationalize(l3).id() == l3.id());
  CHECK(relationalize(r).id() == r.id());
  for (const auto& s : small_corpus(6)) {
    CAPTURE(s.name());
    CHECK(oracle::brute_automorphisms(s) == oracle::brute_automorphisms(relationalize(s)));
  }
}

TEST_CASE("expand") {
  const Structure l2 = gen_linear_order(2);
  const auto e = expand(l2, {{"A", ElementSet::of({0})}});
  CHECK(sat(e, parse_formula("A(x)", SymbolContext::of(e)), {{"x", 0}}));
  CHECK_FALSE(sat(e, parse_formula("A(x)", SymbolContext::of(e)), {{"x", 1}}));
  const auto p = expand(l2, {}, {{"a", 1}});
  CHECK(sat(p, parse_formula("x = a", SymbolContext::of(p)), {{"x", 1}}));
  const auto full = expand(l2, {{"A", ElementSet::full(2)}});
  CHECK(sat(full, parse_formula("forall x. A(x)", SymbolContext::of(full))));
  CHECK_THROWS_AS(expand(l2, {{"<", ElementSet()}}), SemanticError);
  CHECK_THROWS_AS(expand(l2, {}, {{"a", 7}}), SemanticError);
}

TEST_CASE("iso_check") {
  const Structure l3 = gen_linear_order(3);
  const Structure relabeled = StructureBuilder("L3'", 3).relation("<", 2, {{2, 0}, {2, 1}, {0, 1}}).build();
  const auto iso = iso_check(l3, relabeled);
  REQUIRE(iso.has_value());
  CHECK(*iso == Permutation{2, 0, 1});

  const Structure c3 = StructureBuilder("C3", 3).relation("<", 2, {{0, 1}, {1, 2}, {2, 0}}).build();
  CHECK_FALSE(iso_check(l3, c3).has_value());
  CHECK_THROWS_AS(iso_check(l3, gen_directed_cycle(3)), SemanticError);

  // x^2+x+1 is the only irreducible quadratic over GF(2), so the second
  // GF(4) is a relabeled copy
  const Structure gf4 = gen_finite_field(2, 2);
  const Permutation sigma{1, 3, 0, 2};
  StructureBuilder b("GF(4)'", 4);
  for (std::size_t f = 0; f < gf4.signature().functions().size(); ++f) {
    const auto& sym = gf4.signature().functions()[f];
    std::vector<std::pair<Tuple, int>> table;
    const auto& values = gf4.function(static_cast<int>(f)).values();
    for (std::size_t code = 0; code < values.size(); ++code) {
      Tuple args;
      if (sym.arity == 2) args = {sigma[code / 4], sigma[code % 4]};
      table.emplace_back(args, sigma[static_cast<std::size_t>(values[code])]);
    }
    b.function(sym.name, sym.arity, table);
  }
  const Structure gf4b = b.build();
  CHECK_FALSE(gf4 == gf4b);
  const auto iso4 = iso_check(gf4, gf4b);
  REQUIRE(iso4.has_value());
  CHECK(oracle::brute_automorphisms(gf4).size() == 2);
  // GF(9) built from x^2+1 and from x^2+x+2
  const Structure gf9a = gen_finite_field(3, 2);
  const Structure gf9b = gen_finite_field(3, 2, std::vector<int>{2, 1});
  CHECK_FALSE(gf9a == gf9b);
  CHECK(iso_check(gf9a, gf9b).has_value());
}

TEST_CASE("iso_check agrees with exhaustive bijection search") {
  const auto graphs = all_digraphs(3);
  std::vector<Structure> labeled;
  for (std::uint64_t mask = 0; mask < 64; mask += 5) {
    std::vector<Tuple> edges;
    int bit = 0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        if (a != b && ((mask >> bit++) & 1U)) edges.push_back({a, b});
    labeled.push_back(StructureBuilder("G", 3).relation("E", 2, edges).build());
  }
  for (const auto& a : labeled)
    for (const auto& b : graphs) {
      bool brute = false;
      Permutation p{0, 1, 2};
      do {
        bool ok = a.relation(0).tuples().size() == b.relation(0).tuples().size();
        for (const auto& t : a.relation(0).tuples())
          ok = ok && b.relation(0).contains(std::vector<int>{p[static_cast<std::size_t>(t[0])], p[static_cast<std::size_t>(t[1])]});
        brute = brute || ok;
      } while (std::next_permutation(p.begin(), p.end()));
      CHECK(iso_check(a, b).has_value() == brute);
    }
  CHECK(graphs.size() == 16);
  CHECK(all_digraphs(4).size() == 218);
}

TEST_CASE("generators respect caps") {
  Caps c = caps();
  Caps small = c;
  small.universe = 4;
  set_caps(small);
  CHECK_THROWS_AS(gen_linear_order(5), CapExceeded);
  set_caps(c);
  CHECK(parse_caps("universe=30,types=12").subset_types == 12);
  CHECK_THROWS_AS(parse_caps("bogus=1"), SemanticError);
}
