#include "defilab/hierarchy.hpp"

#include <algorithm>
#include <set>

#include "defilab/caps.hpp"
#include "defilab/error.hpp"

namespace defilab {

std::string operator_name(StageOperator op) { return op == StageOperator::Def ? "def" : "imp"; }

std::vector<std::uint64_t> Stage::codes() const {
  std::vector<std::uint64_t> out;
  for (const auto& x : extent) out.push_back(x.ackermann_code());
  return out;
}

Stage make_stage(std::vector<HFSet> transitive_set, int index) {
  std::sort(transitive_set.begin(), transitive_set.end());
  transitive_set.erase(std::unique(transitive_set.begin(), transitive_set.end()), transitive_set.end());
  for (const auto& x : transitive_set)
    for (const auto& m : x.members())
      if (!std::binary_search(transitive_set.begin(), transitive_set.end(), m))
        throw SemanticError("stage extent is not transitive: " + x.to_string());
  Structure s = membership_structure(transitive_set, "stage" + std::to_string(index));
  return Stage{std::move(transitive_set), std::move(s), std::nullopt, index};
}

Stage start_stage(const HFSet& x) { return make_stage(x.closure(), 0); }

Stage step(const Stage& st, const StageMode& mode) {
  const int n = static_cast<int>(st.extent.size());
  if (n > caps().stage_extent)
    throw CapExceeded("stage extent of " + std::to_string(n) + " elements exceeds the cap of " +
                      std::to_string(caps().stage_extent));
  const auto reports = classify_subsets(st.structure, mode.budget);
  std::vector<HFSet> next = st.extent;
  for (const auto& r : reports) {
    const bool qualifies = mode.op == StageOperator::Def ? r.explicit_definable : r.implicit_definable;
    if (!qualifies) continue;
    std::vector<HFSet> members;
    for (int i : r.subset.elements()) members.push_back(st.extent[static_cast<std::size_t>(i)]);
    next.push_back(HFSet::of(std::move(members)));
  }
  std::sort(next.begin(), next.end());
  next.erase(std::unique(next.begin(), next.end()), next.end());
  if (static_cast<int>(next.size()) > caps().stage_extent)
    throw CapExceeded("next stage would have " + std::to_string(next.size()) + " elements, over the cap of " +
                      std::to_string(caps().stage_extent));
  Stage out = make_stage(std::move(next), st.index + 1);
  out.mode = mode;
  if (!check_extensional_wf(out.structure)) throw AnalysisError("stage digraph is not extensional and well-founded");
  return out;
}

std::optional<int> least_level(const std::vector<HFSet>& sets) {
  for (int m = 0; m <= 5; ++m) {
    const auto level = von_neumann_level(m);
    bool all = true;
    for (const auto& x : sets) all = all && std::binary_search(level.begin(), level.end(), x);
    if (all) return m;
  }
  return std::nullopt;
}

namespace {

LevelComparison compare_level(const Stage& st, int level) {
  LevelComparison c{st.index, level, false, false};
  if (level > 5) return c;
  const auto v = von_neumann_level(level);
  c.within = std::includes(v.begin(), v.end(), st.extent.begin(), st.extent.end());
  c.equal = v == st.extent;
  return c;
}

}  // namespace

Iteration iterate(const Stage& start, const StageMode& mode, int steps) {
  if (steps < 0) throw SemanticError("step count must be non-negative");
  Iteration out;
  out.stages.push_back(start);
  const auto base = least_level(start.extent);
  for (int i = 0; i < steps; ++i) {
    try {
      out.stages.push_back(step(out.stages.back(), mode));
    } catch (const CapExceeded& e) {
      out.complete = false;
      out.stopped = e.what();
      break;
    }
  }
  if (base)
    for (const auto& st : out.stages) out.levels.push_back(compare_level(st, *base + st.index - start.index));
  return out;
}

std::optional<int> first_divergence(const Iteration& a, const Iteration& b) {
  const std::size_t common = std::min(a.stages.size(), b.stages.size());
  for (std::size_t i = 0; i < common; ++i)
    if (a.stages[i].extent != b.stages[i].extent) return static_cast<int>(i);
  return std::nullopt;
}

std::uint64_t hf_encode(const HFSet& x) { return x.ackermann_code(); }
HFSet hf_decode(std::uint64_t code) { return HFSet::decode(code); }

bool check_extensional_wf(const Structure& s) {
  const Signature& sig = s.signature();
  if (!sig.functions().empty() || sig.relations().size() != 1 || sig.relations()[0].arity != 2)
    throw SemanticError("expected a structure with a single binary relation");
  const int n = s.size();
  std::vector<std::vector<int>> members(static_cast<std::size_t>(n));
  for (const auto& t : s.relation(0).tuples()) members[static_cast<std::size_t>(t[1])].push_back(t[0]);
  std::set<std::vector<int>> distinct;
  for (auto& m : members) {
    std::sort(m.begin(), m.end());
    if (!distinct.insert(m).second) return false;
  }
  // acyclicity by repeatedly removing vertices with no remaining members
  std::vector<int> pending(static_cast<std::size_t>(n));
  std::vector<std::vector<int>> parents(static_cast<std::size_t>(n));
  for (int y = 0; y < n; ++y) {
    pending[static_cast<std::size_t>(y)] = static_cast<int>(members[static_cast<std::size_t>(y)].size());
    for (int x : members[static_cast<std::size_t>(y)]) parents[static_cast<std::size_t>(x)].push_back(y);
  }
  std::vector<int> ready;
  for (int y = 0; y < n; ++y)
    if (pending[static_cast<std::size_t>(y)] == 0) ready.push_back(y);
  int removed = 0;
  while (!ready.empty()) {
    const int x = ready.back();
    ready.pop_back();
    ++removed;
    for (int y : parents[static_cast<std::size_t>(x)])
      if (--pending[static_cast<std::size_t>(y)] == 0) ready.push_back(y);
  }
  return removed == n;
}

std::string dump_stage(const Stage& st) {
  std::string out;
  for (const auto& x : st.extent) out += std::to_string(x.ackermann_code()) + " " + x.to_string() + "\n";
  return out;
}

}  // namespace defilab
