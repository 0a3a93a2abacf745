#include "defilab/hfset.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <mutex>
#include <set>
#include <unordered_map>

#include "defilab/error.hpp"

namespace defilab {

struct HFSet::Node {
  std::size_t id;
  std::vector<HFSet> members;  // ascending Ackermann order
  std::optional<std::uint64_t> code;
};

namespace {

struct IdVectorHash {
  std::size_t operator()(const std::vector<std::size_t>& v) const {
    std::size_t h = v.size();
    for (std::size_t x : v) h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

struct Table {
  std::mutex mutex;
  std::deque<HFSet::Node> nodes;  // stable addresses
  std::unordered_map<std::vector<std::size_t>, const HFSet::Node*, IdVectorHash> index;
};

Table& table() {
  static Table t;
  return t;
}

}  // namespace

HFSet::HFSet() : HFSet(of({})) {}

HFSet HFSet::of(std::vector<HFSet> members) {
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  std::vector<std::size_t> key;
  key.reserve(members.size());
  for (const auto& m : members) key.push_back(m.id());
  std::sort(key.begin(), key.end());

  std::optional<std::uint64_t> code = std::uint64_t{0};
  for (const auto& m : members) {
    auto c = m.code();
    if (!c || *c >= 64) {
      code.reset();
      break;
    }
    *code |= std::uint64_t{1} << *c;
  }

  Table& t = table();
  std::lock_guard lock(t.mutex);
  if (auto it = t.index.find(key); it != t.index.end()) return HFSet(it->second);
  t.nodes.push_back(Node{t.nodes.size(), std::move(members), code});
  const Node* node = &t.nodes.back();
  t.index.emplace(std::move(key), node);
  return HFSet(node);
}

HFSet HFSet::decode(std::uint64_t code) {
  std::vector<HFSet> members;
  for (int bit = 0; bit < 64; ++bit)
    if ((code >> bit) & 1U) members.push_back(decode(static_cast<std::uint64_t>(bit)));
  return of(std::move(members));
}

const std::vector<HFSet>& HFSet::members() const { return node_->members; }

bool HFSet::contains(const HFSet& x) const {
  return std::binary_search(node_->members.begin(), node_->members.end(), x);
}

std::optional<std::uint64_t> HFSet::code() const { return node_->code; }

std::uint64_t HFSet::ackermann_code() const {
  if (!node_->code) throw CapExceeded("Ackermann code of " + to_string() + " exceeds 64 bits");
  return *node_->code;
}

std::size_t HFSet::id() const { return node_->id; }

std::string HFSet::to_string() const {
  std::string s = "{";
  bool first = true;
  for (const auto& m : node_->members) {
    if (!first) s += ",";
    s += m.to_string();
    first = false;
  }
  return s + "}";
}

std::vector<HFSet> HFSet::closure() const {
  std::set<HFSet> seen{*this};
  std::vector<HFSet> stack{*this};
  while (!stack.empty()) {
    HFSet x = stack.back();
    stack.pop_back();
    for (const auto& m : x.members())
      if (seen.insert(m).second) stack.push_back(m);
  }
  return {seen.begin(), seen.end()};
}

std::strong_ordering operator<=>(const HFSet& a, const HFSet& b) {
  if (a.node_ == b.node_) return std::strong_ordering::equal;
  if (a.node_->code && b.node_->code) return *a.node_->code <=> *b.node_->code;
  // Compare from the top: the first difference decides.
  const auto& ma = a.node_->members;
  const auto& mb = b.node_->members;
  auto ia = ma.rbegin();
  auto ib = mb.rbegin();
  for (; ia != ma.rend() && ib != mb.rend(); ++ia, ++ib) {
    if (*ia == *ib) continue;
    return *ia <=> *ib;
  }
  if (ia == ma.rend() && ib == mb.rend()) return std::strong_ordering::equal;
  return ia == ma.rend() ? std::strong_ordering::less : std::strong_ordering::greater;
}

std::vector<HFSet> von_neumann_level(int n) {
  if (n < 0) throw SemanticError("negative level");
  if (n > 5) throw CapExceeded("V_n is only tabulated for n <= 5");
  std::vector<HFSet> level;
  for (int i = 0; i < n; ++i) {
    const std::size_t size = level.size();
    std::vector<HFSet> next;
    next.reserve(std::size_t{1} << size);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << size); ++mask) {
      std::vector<HFSet> members;
      for (std::size_t b = 0; b < size; ++b)
        if ((mask >> b) & 1U) members.push_back(level[b]);
      next.push_back(HFSet::of(std::move(members)));
    }
    std::sort(next.begin(), next.end());
    level = std::move(next);
  }
  return level;
}

}  // namespace defilab
