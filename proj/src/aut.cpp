#include "defilab/aut.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>

#include "defilab/caps.hpp"
#include "defilab/eval.hpp"

namespace defilab {

bool PermutationSet::contains(const Permutation& p) const {
  return std::binary_search(perms.begin(), perms.end(), p);
}

Permutation identity_permutation(int n) {
  Permutation p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  return p;
}

Permutation compose(const Permutation& outer, const Permutation& inner) {
  Permutation out(inner.size());
  for (std::size_t i = 0; i < inner.size(); ++i) out[i] = outer[static_cast<std::size_t>(inner[i])];
  return out;
}

Permutation inverse(const Permutation& p) {
  Permutation out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(p[i])] = static_cast<int>(i);
  return out;
}

ElementSet apply(const Permutation& p, ElementSet s) {
  ElementSet out;
  for (int e : s.elements()) out.insert(p[static_cast<std::size_t>(e)]);
  return out;
}

namespace {

// Occurrence of an element at `position` of tuple `tuple` in relation `relation`.
struct Occurrence {
  int relation;
  int position;
  const Tuple* tuple;
};

struct Side {
  const Structure* s;
  std::vector<std::vector<Occurrence>> occurrences;

  explicit Side(const Structure& st) : s(&st), occurrences(static_cast<std::size_t>(st.size())) {
    for (std::size_t r = 0; r < st.signature().relations().size(); ++r)
      for (const Tuple& t : st.relation(static_cast<int>(r)).tuples())
        for (std::size_t i = 0; i < t.size(); ++i)
          occurrences[static_cast<std::size_t>(t[i])].push_back({static_cast<int>(r), static_cast<int>(i), &t});
  }

  std::vector<std::vector<int>> signatures(const std::vector<int>& colors) const {
    std::vector<std::vector<int>> out(occurrences.size());
    std::vector<std::vector<int>> entries;
    for (std::size_t x = 0; x < occurrences.size(); ++x) {
      entries.clear();
      for (const auto& occ : occurrences[x]) {
        std::vector<int> entry{occ.relation, occ.position};
        for (int y : *occ.tuple) entry.push_back(colors[static_cast<std::size_t>(y)]);
        entries.push_back(std::move(entry));
      }
      std::sort(entries.begin(), entries.end());
      auto& sig = out[x];
      sig.push_back(colors[x]);
      for (const auto& e : entries) sig.insert(sig.end(), e.begin(), e.end());
    }
    return out;
  }
};

int count_colors(const std::vector<int>& colors) {
  std::vector<int> c = colors;
  std::sort(c.begin(), c.end());
  return static_cast<int>(std::unique(c.begin(), c.end()) - c.begin());
}

// Equitable refinement applied to both sides with shared color names.
// Returns false when the color multisets diverge (no isomorphism extends).
bool refine(const Side& a, const Side& b, std::vector<int>& ca, std::vector<int>& cb) {
  int classes = count_colors(ca);
  while (true) {
    auto sa = a.signatures(ca);
    auto sb = b.signatures(cb);
    std::map<std::vector<int>, int> names;
    for (const auto& s : sa) names.emplace(s, 0);
    for (const auto& s : sb) names.emplace(s, 0);
    int next = 0;
    for (auto& [sig, id] : names) id = next++;
    std::vector<int> hist(static_cast<std::size_t>(next), 0);
    for (std::size_t x = 0; x < sa.size(); ++x) {
      ca[x] = names[sa[x]];
      ++hist[static_cast<std::size_t>(ca[x])];
    }
    for (std::size_t x = 0; x < sb.size(); ++x) {
      cb[x] = names[sb[x]];
      if (--hist[static_cast<std::size_t>(cb[x])] < 0) return false;
    }
    const int now = count_colors(ca);
    if (now == classes) return true;
    classes = now;
  }
}

bool verify(const Structure& a, const Structure& b, const Permutation& f) {
  Tuple image;
  for (std::size_t r = 0; r < a.signature().relations().size(); ++r) {
    const auto& tuples = a.relation(static_cast<int>(r)).tuples();
    const Relation& target = b.relation(static_cast<int>(r));
    if (tuples.size() != target.tuples().size()) return false;
    for (const Tuple& t : tuples) {
      image.resize(t.size());
      for (std::size_t i = 0; i < t.size(); ++i) image[i] = f[static_cast<std::size_t>(t[i])];
      if (!target.contains(image)) return false;
    }
  }
  return true;
}

// Individualization-refinement search. Collects every isomorphism (or stops
// at the first when `first_only`).
void search(const Side& a, const Side& b, std::vector<int> ca, std::vector<int> cb, bool first_only,
            std::vector<Permutation>& out) {
  if (!refine(a, b, ca, cb)) return;
  const std::size_t n = ca.size();
  // first non-singleton cell by color name
  std::vector<int> size(n + 1, 0);
  for (int c : ca) ++size[static_cast<std::size_t>(c)];
  int cell = -1;
  for (std::size_t c = 0; c < size.size(); ++c)
    if (size[c] > 1) {
      cell = static_cast<int>(c);
      break;
    }
  if (cell < 0) {
    Permutation f(n);
    std::vector<int> by_color(n + 1, -1);
    for (std::size_t y = 0; y < n; ++y) by_color[static_cast<std::size_t>(cb[y])] = static_cast<int>(y);
    for (std::size_t x = 0; x < n; ++x) f[x] = by_color[static_cast<std::size_t>(ca[x])];
    if (verify(*a.s, *b.s, f)) out.push_back(std::move(f));
    return;
  }
  std::size_t v = 0;
  while (ca[v] != cell) ++v;
  const int fresh = static_cast<int>(n) + 1;
  for (std::size_t w = 0; w < n; ++w) {
    if (cb[w] != cell) continue;
    std::vector<int> na = ca;
    std::vector<int> nb = cb;
    na[v] = fresh;
    nb[w] = fresh;
    search(a, b, std::move(na), std::move(nb), first_only, out);
    if (first_only && !out.empty()) return;
  }
}

std::vector<int> parameter_colors(int n, const std::vector<int>& params) {
  std::vector<int> colors(static_cast<std::size_t>(n), 0);
  for (std::size_t i = 0; i < params.size(); ++i) colors[static_cast<std::size_t>(params[i])] = static_cast<int>(i) + 1;
  return colors;
}

std::mutex g_aut_mutex;
std::map<std::pair<std::uint64_t, std::vector<int>>, PermutationSet> g_aut_cache;

}  // namespace

PermutationSet automorphisms(const Structure& s, const std::vector<int>& params) {
  std::vector<int> ps = normalize_params(params, s.size());
  auto key = std::make_pair(s.id(), ps);
  {
    std::lock_guard lock(g_aut_mutex);
    if (auto it = g_aut_cache.find(key); it != g_aut_cache.end()) return it->second;
  }
  if (s.size() > caps().universe)
    std::cerr << "warning: automorphism search on " << s.size() << " elements exceeds the advisory cap of "
              << caps().universe << "\n";
  const Structure rel = relationalize(s);
  Side side(rel);
  PermutationSet out;
  out.universe = s.size();
  out.params = ps;
  const auto colors = parameter_colors(s.size(), ps);
  search(side, side, colors, colors, false, out.perms);
  std::sort(out.perms.begin(), out.perms.end());
  std::lock_guard lock(g_aut_mutex);
  if (g_aut_cache.size() > 4096) g_aut_cache.clear();
  g_aut_cache.emplace(std::move(key), out);
  return out;
}

Partition orbits(const PermutationSet& group) {
  ElementSet::check_universe(group.universe);
  Partition out;
  ElementSet seen;
  for (int x = 0; x < group.universe; ++x) {
    if (seen.contains(x)) continue;
    ElementSet block;
    for (const auto& p : group.perms) block.insert(p[static_cast<std::size_t>(x)]);
    seen = seen | block;
    out.push_back(block);
  }
  return out;
}

Partition orbits_elements(const Structure& s, const std::vector<int>& params) {
  return orbits(automorphisms(s, params));
}

std::vector<ElementSet> orbit_of_subset(const PermutationSet& group, ElementSet a) {
  std::vector<ElementSet> out;
  out.reserve(group.perms.size());
  for (const auto& p : group.perms) out.push_back(apply(p, a));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<ElementSet> orbit_of_subset(const Structure& s, const std::vector<int>& params, ElementSet a) {
  ElementSet::check_universe(s.size());
  return orbit_of_subset(automorphisms(s, params), a);
}

bool is_rigid(const Structure& s) { return automorphisms(s).size() == 1; }

std::optional<Permutation> iso_check(const Structure& s, const Structure& t) {
  if (!(s.signature() == t.signature())) throw SemanticError("iso_check needs structures over the same signature");
  if (s.size() != t.size()) return std::nullopt;
  const Structure ra = relationalize(s);
  const Structure rb = relationalize(t);
  Side a(ra);
  Side b(rb);
  std::vector<Permutation> found;
  std::vector<int> zero(static_cast<std::size_t>(s.size()), 0);
  search(a, b, zero, zero, true, found);
  if (found.empty()) return std::nullopt;
  return found.front();
}

}  // namespace defilab
