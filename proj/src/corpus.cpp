#include "defilab/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "defilab/aut.hpp"
#include "defilab/error.hpp"

namespace defilab {

namespace {

Structure pure_set(int n) { return StructureBuilder("set" + std::to_string(n), n).build(); }

Structure two_classes() {
  std::vector<Tuple> eq;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      if (a / 2 == b / 2) eq.push_back({a, b});
  return StructureBuilder("eq2x2", 4).relation("E", 2, std::move(eq)).build();
}

Structure marked_path() {
  return StructureBuilder("path3P", 3).relation("E", 2, {{0, 1}, {1, 2}}).relation("P", 1, {{1}}).build();
}

int parse_int(std::string_view s, std::string_view what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw SemanticError("bad " + std::string(what) + ": " + std::string(s));
  return v;
}

std::uint64_t parse_u64(std::string_view s, std::string_view what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw SemanticError("bad " + std::string(what) + ": " + std::string(s));
  return v;
}

}  // namespace

std::vector<Structure> small_corpus(int max_size) {
  std::vector<Structure> out;
  auto add = [&](Structure s) {
    if (s.size() <= max_size) out.push_back(std::move(s));
  };
  for (int n = 1; n <= std::min(max_size, 6); ++n) add(gen_linear_order(n));
  for (int n = 1; n <= std::min(max_size, 6); ++n) add(gen_directed_cycle(n));
  for (int n = 1; n <= std::min(max_size, 3); ++n) add(pure_set(n));
  add(two_classes());
  add(marked_path());
  for (auto [p, d] : {std::pair{2, 1}, {3, 1}, {2, 2}, {5, 1}}) add(gen_finite_field(p, d));
  for (std::uint64_t code : {0U, 1U, 3U, 5U, 7U, 11U, 15U}) add(gen_membership_digraph(HFSet::decode(code)));
  return out;
}

std::vector<std::vector<HFSet>> transitive_sets(int size) {
  if (size < 0) throw SemanticError("size must be non-negative");
  std::set<std::vector<HFSet>> level{{}};
  for (int s = 0; s < size; ++s) {
    std::set<std::vector<HFSet>> next;
    for (const auto& t : level) {
      const std::size_t m = t.size();
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
        std::vector<HFSet> members;
        for (std::size_t i = 0; i < m; ++i)
          if ((mask >> i) & 1U) members.push_back(t[i]);
        HFSet x = HFSet::of(std::move(members));
        if (std::binary_search(t.begin(), t.end(), x)) continue;
        std::vector<HFSet> grown = t;
        grown.insert(std::upper_bound(grown.begin(), grown.end(), x), x);
        next.insert(std::move(grown));
      }
    }
    level = std::move(next);
  }
  return {level.begin(), level.end()};
}

std::vector<Structure> all_digraphs(int n) {
  if (n < 1 || n > 4) throw CapExceeded("digraph enumeration supports 1 to 4 vertices");
  std::vector<std::pair<int, int>> slots;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a != b) slots.emplace_back(a, b);
  // classes keyed by a cheap invariant (sorted in/out degree pairs)
  std::map<std::vector<std::pair<int, int>>, std::vector<Structure>> classes;
  std::vector<Structure> out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << slots.size()); ++mask) {
    std::vector<Tuple> edges;
    std::vector<std::pair<int, int>> degrees(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < slots.size(); ++i)
      if ((mask >> i) & 1U) {
        edges.push_back({slots[i].first, slots[i].second});
        ++degrees[static_cast<std::size_t>(slots[i].first)].second;
        ++degrees[static_cast<std::size_t>(slots[i].second)].first;
      }
    std::sort(degrees.begin(), degrees.end());
    Structure s = StructureBuilder("D" + std::to_string(n) + "_" + std::to_string(mask), n)
                      .relation("E", 2, std::move(edges))
                      .build();
    auto& bucket = classes[degrees];
    bool seen = false;
    for (const auto& rep : bucket)
      if (iso_check(rep, s)) {
        seen = true;
        break;
      }
    if (seen) continue;
    bucket.push_back(s);
    out.push_back(s);
  }
  return out;
}

std::vector<Structure> load_source(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon != std::string_view::npos) {
    const std::string_view kind = spec.substr(0, colon);
    const std::string_view arg = spec.substr(colon + 1);
    if (kind == "linord") return {gen_linear_order(parse_int(arg, "size"))};
    if (kind == "cycle") return {gen_directed_cycle(parse_int(arg, "size"))};
    if (kind == "set") {
      const int n = parse_int(arg, "size");
      if (n < 1) throw SemanticError("universe must be non-empty");
      return {pure_set(n)};
    }
    if (kind == "hf") return {gen_membership_digraph(HFSet::decode(parse_u64(arg, "Ackermann code")))};
    if (kind == "digraphs") return all_digraphs(parse_int(arg, "size"));
    if (kind == "corpus") return small_corpus(parse_int(arg, "size"));
    if (kind == "gf") {
      const auto comma = arg.find(',');
      if (comma == std::string_view::npos) return {gen_finite_field(parse_int(arg, "characteristic"), 1)};
      return {gen_finite_field(parse_int(arg.substr(0, comma), "characteristic"),
                               parse_int(arg.substr(comma + 1), "degree"))};
    }
  }
  std::ifstream in{std::string(spec)};
  if (!in) throw SemanticError("cannot read structure source " + std::string(spec));
  std::ostringstream text;
  text << in.rdbuf();
  return {load_structure(text.str())};
}

Structure load_single(std::string_view spec) {
  auto all = load_source(spec);
  if (all.size() != 1) throw SemanticError("source " + std::string(spec) + " names more than one structure");
  return all.front();
}

}  // namespace defilab
