#include "defilab/eval.hpp"

#include <algorithm>
#include <functional>
#include <unordered_set>

#include "defilab/caps.hpp"
#include "defilab/error.hpp"
#include "defilab/parallel.hpp"

namespace defilab {

// ---- Evaluator ---------------------------------------------------------

namespace {

struct CTerm {
  enum class Kind { Slot, Value, Apply };
  Kind kind = Kind::Value;
  int index = 0;  // slot, value or function index
  std::vector<CTerm> args;
};

struct CNode {
  FormulaKind kind = FormulaKind::True;
  int symbol = -1;  // relation index or predicate index
  std::vector<CTerm> terms;
  std::vector<int> kids;
  int slot = -1;  // bound variable
  std::vector<int> free_slots;
  bool rebindable = false;  // mentions a predicate that set_predicate may change
  bool memo = false;
  std::unordered_map<std::uint64_t, bool> cache;
};

}  // namespace

struct Evaluator::Impl {
  ExpandedStructure e;
  int n = 0;
  std::vector<ElementSet> predicates;
  std::vector<std::string> predicate_names;
  std::size_t first_extra = 0;
  std::map<std::string, int> slot_of;
  std::vector<int> slots;
  std::vector<CNode> nodes;
  int root = 0;
  std::vector<std::string> free_vars;
  std::vector<int> free_slots;

  Impl(const ExpandedStructure& ex, const Formula& f, std::vector<std::string> extra) : e(ex), n(ex.size()) {
    for (const auto& s : e.subsets()) {
      predicates.push_back(s.members);
      predicate_names.push_back(s.name);
    }
    first_extra = predicates.size();
    for (auto& name : extra) {
      if (e.subset_index(name) || e.base().signature().contains(name))
        throw SemanticError("predicate " + name + " is already interpreted");
      predicates.emplace_back();
      predicate_names.push_back(std::move(name));
    }
    if (predicates.size() > first_extra) ElementSet::check_universe(n);
    std::unordered_map<const Formula::Node*, int> compiled;
    root = compile(f, compiled);
    free_vars = defilab::free_variables(f);
    for (const auto& v : free_vars) free_slots.push_back(slot_of.at(v));
  }

  int slot(const std::string& var) {
    auto [it, inserted] = slot_of.emplace(var, static_cast<int>(slots.size()));
    if (inserted) slots.push_back(-1);
    return it->second;
  }

  CTerm compile_term(const Term& t) {
    const Signature& sig = e.base().signature();
    switch (t.kind) {
      case Term::Kind::Variable: return {CTerm::Kind::Slot, slot(t.name), {}};
      case Term::Kind::Parameter:
        if (t.parameter < 0 || t.parameter >= n)
          throw SemanticError("parameter @" + std::to_string(t.parameter) + " out of range");
        return {CTerm::Kind::Value, t.parameter, {}};
      case Term::Kind::Constant: {
        if (auto idx = sig.function_index(t.name)) {
          if (sig.functions()[static_cast<std::size_t>(*idx)].arity != 0)
            throw SemanticError("function " + t.name + " used as a constant");
          return {CTerm::Kind::Value, e.base().function(*idx).values()[0], {}};
        }
        if (auto el = e.parameter_element(t.name)) return {CTerm::Kind::Value, *el, {}};
        throw SemanticError("unknown constant " + t.name);
      }
      case Term::Kind::Apply: {
        auto idx = sig.function_index(t.name);
        if (!idx) throw SemanticError("unknown function symbol " + t.name);
        if (sig.functions()[static_cast<std::size_t>(*idx)].arity != static_cast<int>(t.args.size()))
          throw SemanticError("arity mismatch for function " + t.name);
        CTerm c{CTerm::Kind::Apply, *idx, {}};
        for (const auto& a : t.args) c.args.push_back(compile_term(a));
        return c;
      }
    }
    throw SemanticError("bad term");
  }

  int compile(const Formula& f, std::unordered_map<const Formula::Node*, int>& compiled) {
    if (auto it = compiled.find(f.node()); it != compiled.end()) return it->second;
    CNode node;
    node.kind = f.kind();
    const Signature& sig = e.base().signature();
    if (f.kind() == FormulaKind::Relation) {
      auto idx = sig.relation_index(f.symbol());
      if (!idx) throw SemanticError("unknown relation symbol " + f.symbol());
      if (sig.relations()[static_cast<std::size_t>(*idx)].arity != static_cast<int>(f.terms().size()))
        throw SemanticError("arity mismatch for relation " + f.symbol());
      node.symbol = *idx;
    } else if (f.kind() == FormulaKind::Predicate) {
      auto it = std::find(predicate_names.begin(), predicate_names.end(), f.symbol());
      if (it == predicate_names.end()) throw SemanticError("unknown subset predicate " + f.symbol());
      node.symbol = static_cast<int>(it - predicate_names.begin());
      node.rebindable = static_cast<std::size_t>(node.symbol) >= first_extra;
    }
    for (const auto& t : f.terms()) node.terms.push_back(compile_term(t));
    if (f.kind() == FormulaKind::Forall || f.kind() == FormulaKind::Exists) node.slot = slot(f.variable());
    for (const auto& c : f.children()) {
      int k = compile(c, compiled);
      node.kids.push_back(k);
      node.rebindable = node.rebindable || nodes[static_cast<std::size_t>(k)].rebindable;
    }
    if (node.kind == FormulaKind::Forall || node.kind == FormulaKind::Exists) {
      for (const auto& v : defilab::free_variables(f)) node.free_slots.push_back(slot(v));
      // mixed-radix key must fit in 64 bits
      double space = 1;
      for (std::size_t i = 0; i < node.free_slots.size(); ++i) space *= n;
      node.memo = space < 4e18;
    }
    nodes.push_back(std::move(node));
    const int id = static_cast<int>(nodes.size()) - 1;
    compiled.emplace(f.node(), id);
    return id;
  }

  int value(const CTerm& t) const {
    switch (t.kind) {
      case CTerm::Kind::Slot: return slots[static_cast<std::size_t>(t.index)];
      case CTerm::Kind::Value: return t.index;
      case CTerm::Kind::Apply: {
        int buf[16];
        std::vector<int> big;
        int* args = buf;
        if (t.args.size() > 16) {
          big.resize(t.args.size());
          args = big.data();
        }
        for (std::size_t i = 0; i < t.args.size(); ++i) args[i] = value(t.args[i]);
        return e.base().function(t.index).apply(std::span<const int>(args, t.args.size()));
      }
    }
    return 0;
  }

  bool eval(int id) {
    CNode& node = nodes[static_cast<std::size_t>(id)];
    switch (node.kind) {
      case FormulaKind::True: return true;
      case FormulaKind::False: return false;
      case FormulaKind::Equals: return value(node.terms[0]) == value(node.terms[1]);
      case FormulaKind::Relation: {
        int buf[16];
        std::vector<int> big;
        int* args = buf;
        if (node.terms.size() > 16) {
          big.resize(node.terms.size());
          args = big.data();
        }
        for (std::size_t i = 0; i < node.terms.size(); ++i) args[i] = value(node.terms[i]);
        return e.base().relation(node.symbol).contains(std::span<const int>(args, node.terms.size()));
      }
      case FormulaKind::Predicate:
        return predicates[static_cast<std::size_t>(node.symbol)].contains(value(node.terms[0]));
      case FormulaKind::Not: return !eval(node.kids[0]);
      case FormulaKind::And:
        for (int k : node.kids)
          if (!eval(k)) return false;
        return true;
      case FormulaKind::Or:
        for (int k : node.kids)
          if (eval(k)) return true;
        return false;
      case FormulaKind::Implies: return !eval(node.kids[0]) || eval(node.kids[1]);
      case FormulaKind::Forall:
      case FormulaKind::Exists: return eval_quantifier(id);
    }
    return false;
  }

  bool eval_quantifier(int id) {
    std::uint64_t key = 0;
    const bool memo = nodes[static_cast<std::size_t>(id)].memo;
    if (memo) {
      for (int s : nodes[static_cast<std::size_t>(id)].free_slots)
        key = key * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(slots[static_cast<std::size_t>(s)]);
      auto& cache = nodes[static_cast<std::size_t>(id)].cache;
      if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    const CNode& node = nodes[static_cast<std::size_t>(id)];
    const bool universal = node.kind == FormulaKind::Forall;
    const int slot_index = node.slot;
    const int body = node.kids[0];
    const int saved = slots[static_cast<std::size_t>(slot_index)];
    bool result = universal;
    for (int a = 0; a < n; ++a) {
      slots[static_cast<std::size_t>(slot_index)] = a;
      if (eval(body) != universal) {
        result = !universal;
        break;
      }
    }
    slots[static_cast<std::size_t>(slot_index)] = saved;
    if (memo) nodes[static_cast<std::size_t>(id)].cache.emplace(key, result);
    return result;
  }
};

Evaluator::Evaluator(const ExpandedStructure& e, const Formula& f, std::vector<std::string> extra_predicates)
    : impl_(std::make_unique<Impl>(e, f, std::move(extra_predicates))) {}
Evaluator::~Evaluator() = default;
Evaluator::Evaluator(Evaluator&&) noexcept = default;
Evaluator& Evaluator::operator=(Evaluator&&) noexcept = default;

const std::vector<std::string>& Evaluator::free_variables() const { return impl_->free_vars; }

bool Evaluator::eval(std::span<const int> values) {
  if (values.size() != impl_->free_slots.size())
    throw SemanticError("expected " + std::to_string(impl_->free_slots.size()) + " free-variable values");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0 || values[i] >= impl_->n) throw SemanticError("assigned element out of range");
    impl_->slots[static_cast<std::size_t>(impl_->free_slots[i])] = values[i];
  }
  return impl_->eval(impl_->root);
}

bool Evaluator::eval(const Assignment& a) {
  std::vector<int> values;
  for (const auto& v : impl_->free_vars) {
    auto it = a.find(v);
    if (it == a.end()) throw SemanticError("free variable " + v + " is not assigned");
    values.push_back(it->second);
  }
  return eval(values);
}

void Evaluator::set_predicate(const std::string& name, ElementSet members) {
  auto& names = impl_->predicate_names;
  auto it = std::find(names.begin() + static_cast<std::ptrdiff_t>(impl_->first_extra), names.end(), name);
  if (it == names.end()) throw SemanticError("predicate " + name + " was not declared as rebindable");
  impl_->predicates[static_cast<std::size_t>(it - names.begin())] = members;
  for (auto& node : impl_->nodes)
    if (node.rebindable) node.cache.clear();
}

bool sat(const ExpandedStructure& e, const Formula& f, const Assignment& a) {
  Evaluator ev(e, f);
  return ev.eval(a);
}

ElementSet solution_set(const ExpandedStructure& e, const Formula& f) {
  ElementSet::check_universe(e.size());
  Evaluator ev(e, f);
  if (ev.free_variables().size() > 1) throw SemanticError("solution_set needs a formula with one free variable");
  ElementSet out;
  if (ev.free_variables().empty()) return ev.eval(std::span<const int>{}) ? ElementSet::full(e.size()) : out;
  for (int b = 0; b < e.size(); ++b) {
    const int v[1] = {b};
    if (ev.eval(v)) out.insert(b);
  }
  return out;
}

std::vector<ElementSet> subset_solutions(const ExpandedStructure& e, const Formula& psi, const std::string& predicate,
                                         const std::optional<std::vector<int>>& allowed_params) {
  const int n = e.size();
  if (n > caps().subset_enumeration)
    throw CapExceeded("subset enumeration over " + std::to_string(n) + " elements exceeds the cap of " +
                      std::to_string(caps().subset_enumeration));
  if (!free_variables(psi).empty()) throw SemanticError("implicit definitions must be sentences");
  if (allowed_params) {
    for (int p : parameters_used(psi))
      if (std::find(allowed_params->begin(), allowed_params->end(), p) == allowed_params->end())
        throw SemanticError("parameter @" + std::to_string(p) + " is not in the permitted parameter set");
  }
  // compile once up front so symbol errors surface before the enumeration
  Evaluator probe(e, psi, {predicate});

  const std::uint64_t total = std::uint64_t{1} << n;
  const std::size_t chunks = std::min<std::uint64_t>(total, 64);
  std::vector<std::vector<ElementSet>> found(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    Evaluator ev(e, psi, {predicate});
    const std::uint64_t begin = total * c / chunks;
    const std::uint64_t end = total * (c + 1) / chunks;
    for (std::uint64_t mask = begin; mask < end; ++mask) {
      ev.set_predicate(predicate, ElementSet(mask));
      if (ev.eval(std::span<const int>{})) found[c].emplace_back(mask);
    }
  });
  std::vector<ElementSet> out;
  for (auto& part : found) out.insert(out.end(), part.begin(), part.end());
  return out;
}

// ---- TypeInterner ------------------------------------------------------

std::size_t TypeInterner::KeyHash::operator()(const std::vector<std::uint32_t>& v) const {
  std::size_t h = v.size() * 0x9e3779b97f4a7c15ULL;
  for (std::uint32_t x : v) h = (h ^ x) * 0x100000001b3ULL + (h >> 29);
  return h;
}

std::uint32_t TypeInterner::intern(const std::vector<std::uint32_t>& key) {
  Shard& shard = shards_[KeyHash{}(key) % kShards];
  std::lock_guard lock(shard.mutex);
  auto [it, inserted] = shard.map.emplace(key, 0);
  if (inserted) it->second = next_.fetch_add(1);
  return it->second;
}

std::size_t TypeInterner::size() const { return next_.load(); }

// ---- TypeEngine --------------------------------------------------------

namespace {

constexpr std::uint32_t kRootTag = 0xFFFFFFF0U;
constexpr std::uint32_t kAtomTag = 0xFFFFFFF1U;
constexpr std::uint32_t kTypeTag = 0xFFFFFFF2U;
constexpr std::uint32_t kPatternTag = 0xFFFFFFF3U;
constexpr std::uint32_t kParamPosition = 0x01000000U;

class BitPacker {
 public:
  void push(bool b) {
    if (count_ % 32 == 0) words_.push_back(0);
    if (b) words_.back() |= 1U << (count_ % 32);
    ++count_;
  }
  const std::vector<std::uint32_t>& words() const { return words_; }

 private:
  std::vector<std::uint32_t> words_;
  std::size_t count_ = 0;
};

}  // namespace

ExpandedStructure relationalized(const ExpandedStructure& e) {
  if (e.base().signature().relational()) return e;
  return {relationalize(e.base()), e.subsets(), e.parameters()};
}

std::vector<int> normalize_params(std::vector<int> params, int universe) {
  for (int p : params)
    if (p < 0 || p >= universe) throw SemanticError("parameter " + std::to_string(p) + " out of range");
  std::sort(params.begin(), params.end());
  params.erase(std::unique(params.begin(), params.end()), params.end());
  return params;
}

struct TypeEngine::Impl {
  struct Node {
    std::vector<int> tuple;  // distinct non-parameter elements
    std::uint32_t atom = 0;
    std::vector<std::uint32_t> types;  // by rank
    std::vector<int> child;            // by element, -1 when not fresh or not built
    bool expanded = false;
  };

  ExpandedStructure e;
  int n;
  std::vector<ElementSet> predicates;
  std::vector<int> params;
  std::vector<char> is_param;
  std::vector<int> param_position;
  std::shared_ptr<TypeInterner> interner;
  std::vector<Node> nodes;
  std::mutex mutex;

  Impl(const ExpandedStructure& ex, std::vector<int> ps, std::shared_ptr<TypeInterner> in)
      : e(ex), n(ex.size()), interner(std::move(in)) {
    if (!e.base().signature().relational())
      throw SemanticError("type computation needs a relational signature; relationalize the structure first");
    for (const auto& s : e.subsets()) predicates.push_back(s.members);
    for (const auto& p : e.parameters()) ps.push_back(p.element);
    params = normalize_params(std::move(ps), n);
    is_param.assign(static_cast<std::size_t>(n), 0);
    param_position.assign(static_cast<std::size_t>(n), -1);
    for (std::size_t i = 0; i < params.size(); ++i) {
      is_param[static_cast<std::size_t>(params[i])] = 1;
      param_position[static_cast<std::size_t>(params[i])] = static_cast<int>(i);
    }
    nodes.push_back(Node{{}, root_atom(), {}, {}, false});
  }

  // Relation facts over `terms` whose index sequence mentions position `focus`
  // (every sequence when focus < 0).
  void relation_bits(const std::vector<int>& terms, int focus, BitPacker& bits) const {
    const Signature& sig = e.base().signature();
    const int m = static_cast<int>(terms.size());
    std::vector<int> idx;
    std::vector<int> args;
    for (std::size_t r = 0; r < sig.relations().size(); ++r) {
      const int arity = sig.relations()[r].arity;
      const Relation& rel = e.base().relation(static_cast<int>(r));
      if (m == 0) continue;
      idx.assign(static_cast<std::size_t>(arity), 0);
      args.assign(static_cast<std::size_t>(arity), 0);
      while (true) {
        bool mentions = focus < 0;
        for (int i = 0; i < arity && !mentions; ++i) mentions = idx[static_cast<std::size_t>(i)] == focus;
        if (mentions) {
          for (int i = 0; i < arity; ++i)
            args[static_cast<std::size_t>(i)] = terms[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
          bits.push(rel.contains(args));
        }
        int pos = arity - 1;
        while (pos >= 0 && ++idx[static_cast<std::size_t>(pos)] == m) idx[static_cast<std::size_t>(pos--)] = 0;
        if (pos < 0) break;
      }
    }
  }

  std::uint32_t root_atom() {
    BitPacker bits;
    relation_bits(params, -1, bits);
    for (const auto& pred : predicates)
      for (int p : params) bits.push(pred.contains(p));
    std::vector<std::uint32_t> key{kRootTag};
    key.insert(key.end(), bits.words().begin(), bits.words().end());
    return interner->intern(key);
  }

  std::uint32_t child_atom(const std::vector<int>& tuple, std::uint32_t parent_atom) {
    std::vector<int> terms = tuple;
    terms.insert(terms.end(), params.begin(), params.end());
    const int focus = static_cast<int>(tuple.size()) - 1;
    BitPacker bits;
    relation_bits(terms, focus, bits);
    for (const auto& pred : predicates) bits.push(pred.contains(tuple.back()));
    std::vector<std::uint32_t> key{kAtomTag, parent_atom};
    key.insert(key.end(), bits.words().begin(), bits.words().end());
    return interner->intern(key);
  }

  void expand(int id) {
    if (nodes[static_cast<std::size_t>(id)].expanded) return;
    std::vector<int> tuple = nodes[static_cast<std::size_t>(id)].tuple;
    const std::uint32_t atom = nodes[static_cast<std::size_t>(id)].atom;
    std::vector<int> child(static_cast<std::size_t>(n), -1);
    for (int a = 0; a < n; ++a) {
      if (is_param[static_cast<std::size_t>(a)] != 0 || std::find(tuple.begin(), tuple.end(), a) != tuple.end())
        continue;
      std::vector<int> ext = tuple;
      ext.push_back(a);
      Node node;
      node.atom = child_atom(ext, atom);
      node.tuple = std::move(ext);
      nodes.push_back(std::move(node));
      child[static_cast<std::size_t>(a)] = static_cast<int>(nodes.size()) - 1;
    }
    nodes[static_cast<std::size_t>(id)].child = std::move(child);
    nodes[static_cast<std::size_t>(id)].expanded = true;
  }

  std::uint32_t node_type(int id, int rank) {
    if (static_cast<int>(nodes[static_cast<std::size_t>(id)].types.size()) > rank)
      return nodes[static_cast<std::size_t>(id)].types[static_cast<std::size_t>(rank)];
    std::uint32_t t = 0;
    if (rank == 0) {
      t = interner->intern({kTypeTag, 0, nodes[static_cast<std::size_t>(id)].atom});
    } else {
      const std::uint32_t lower = node_type(id, rank - 1);
      expand(id);
      std::vector<std::uint32_t> extensions;
      const std::vector<int> kids = nodes[static_cast<std::size_t>(id)].child;
      for (int c : kids)
        if (c >= 0) extensions.push_back(node_type(c, rank - 1));
      std::sort(extensions.begin(), extensions.end());
      extensions.erase(std::unique(extensions.begin(), extensions.end()), extensions.end());
      std::vector<std::uint32_t> key{kTypeTag, static_cast<std::uint32_t>(rank), lower};
      key.insert(key.end(), extensions.begin(), extensions.end());
      t = interner->intern(key);
    }
    // lower ranks were filled by the recursion above
    nodes[static_cast<std::size_t>(id)].types.push_back(t);
    return t;
  }

  std::uint32_t type_of(std::span<const int> tuple, int rank) {
    if (rank < 0) throw SemanticError("rank must be non-negative");
    std::vector<std::uint32_t> pattern;
    std::vector<int> reduced;
    bool identity = true;
    for (int a : tuple) {
      if (a < 0 || a >= n) throw SemanticError("tuple element out of range");
      if (is_param[static_cast<std::size_t>(a)] != 0) {
        pattern.push_back(kParamPosition + static_cast<std::uint32_t>(param_position[static_cast<std::size_t>(a)]));
        identity = false;
        continue;
      }
      auto it = std::find(reduced.begin(), reduced.end(), a);
      if (it != reduced.end()) {
        pattern.push_back(static_cast<std::uint32_t>(it - reduced.begin()));
        identity = false;
      } else {
        pattern.push_back(static_cast<std::uint32_t>(reduced.size()));
        reduced.push_back(a);
      }
    }
    int id = 0;
    for (int a : reduced) {
      expand(id);
      id = nodes[static_cast<std::size_t>(id)].child[static_cast<std::size_t>(a)];
    }
    const std::uint32_t base = node_type(id, rank);
    if (identity) return base;
    std::vector<std::uint32_t> key{kPatternTag, base};
    key.insert(key.end(), pattern.begin(), pattern.end());
    return interner->intern(key);
  }
};

TypeEngine::TypeEngine(const ExpandedStructure& e, std::vector<int> params, std::shared_ptr<TypeInterner> interner)
    : impl_(std::make_unique<Impl>(e, std::move(params), std::move(interner))) {}
TypeEngine::~TypeEngine() = default;

std::uint32_t TypeEngine::type_of(std::span<const int> tuple, int k) {
  std::lock_guard lock(impl_->mutex);
  return impl_->type_of(tuple, k);
}

std::uint32_t TypeEngine::sentence_type(int k) {
  std::lock_guard lock(impl_->mutex);
  if (k < 0) throw SemanticError("rank must be non-negative");
  return impl_->node_type(0, k);
}

Partition TypeEngine::element_partition(int k) {
  std::lock_guard lock(impl_->mutex);
  std::vector<std::pair<std::uint32_t, ElementSet>> blocks;
  ElementSet::check_universe(impl_->n);
  for (int a = 0; a < impl_->n; ++a) {
    const int t[1] = {a};
    const std::uint32_t id = impl_->type_of(t, k);
    auto it = std::find_if(blocks.begin(), blocks.end(), [&](const auto& b) { return b.first == id; });
    if (it == blocks.end()) {
      blocks.emplace_back(id, ElementSet::singleton(a));
    } else {
      it->second.insert(a);
    }
  }
  Partition out;
  for (auto& [id, block] : blocks) out.push_back(block);
  return out;
}

const std::shared_ptr<TypeInterner>& TypeEngine::interner() const { return impl_->interner; }
const std::vector<int>& TypeEngine::params() const { return impl_->params; }

namespace {

struct EngineKey {
  std::uint64_t structure;
  std::vector<int> params;
  std::vector<std::uint64_t> predicates;
  bool operator==(const EngineKey&) const = default;
};

struct EngineKeyHash {
  std::size_t operator()(const EngineKey& k) const {
    std::size_t h = std::hash<std::uint64_t>{}(k.structure);
    for (int p : k.params) h = h * 31 + static_cast<std::size_t>(p) + 1;
    for (auto m : k.predicates) h = h * 1099511628211ULL + m;
    return h;
  }
};

std::mutex g_engine_mutex;
std::unordered_map<EngineKey, std::shared_ptr<TypeEngine>, EngineKeyHash> g_engines;

}  // namespace

std::shared_ptr<TypeEngine> type_engine(const ExpandedStructure& e, const std::vector<int>& params) {
  std::vector<int> ps = params;
  for (const auto& p : e.parameters()) ps.push_back(p.element);
  EngineKey key{e.base().id(), normalize_params(std::move(ps), e.size()), {}};
  for (const auto& s : e.subsets()) key.predicates.push_back(s.members.mask());
  std::lock_guard lock(g_engine_mutex);
  if (auto it = g_engines.find(key); it != g_engines.end()) return it->second;
  if (g_engines.size() > 1024) g_engines.clear();
  auto engine = std::make_shared<TypeEngine>(e, params);
  g_engines.emplace(std::move(key), engine);
  return engine;
}

RankKType type_k(const ExpandedStructure& e, std::span<const int> tuple, int k, const std::vector<int>& params) {
  auto engine = type_engine(e, params);
  return {engine->interner(), engine->type_of(tuple, k), k};
}

Partition element_partition(const ExpandedStructure& e, int k, const std::vector<int>& params) {
  return type_engine(e, params)->element_partition(k);
}

std::vector<ElementSet> SubsetTypeMap::fiber(ElementSet b) const {
  std::vector<ElementSet> out;
  const std::uint32_t t = types[b.mask()];
  for (std::size_t m = 0; m < types.size(); ++m)
    if (types[m] == t) out.emplace_back(m);
  return out;
}

std::vector<std::vector<ElementSet>> SubsetTypeMap::fibers() const {
  std::unordered_map<std::uint32_t, std::size_t> index;
  std::vector<std::vector<ElementSet>> out;
  for (std::size_t m = 0; m < types.size(); ++m) {
    auto [it, inserted] = index.emplace(types[m], out.size());
    if (inserted) out.emplace_back();
    out[it->second].emplace_back(m);
  }
  return out;
}

SubsetTypeMap subset_type_map(const ExpandedStructure& e, int k, const std::vector<int>& params) {
  const int n = e.size();
  if (n > caps().subset_types)
    throw CapExceeded("subset type map over " + std::to_string(n) + " elements exceeds the cap of " +
                      std::to_string(caps().subset_types));
  if (k < 0) throw SemanticError("rank must be non-negative");
  std::string name = "A";
  while (e.subset_index(name) || e.base().signature().contains(name)) name += "'";

  SubsetTypeMap out;
  out.universe = n;
  out.rank = k;
  out.family = std::make_shared<TypeInterner>();
  const std::size_t total = std::size_t{1} << n;
  out.types.assign(total, 0);
  parallel_for(total, [&](std::size_t mask) {
    auto subsets = e.subsets();
    subsets.push_back({name, ElementSet(mask)});
    ExpandedStructure ex(e.base(), std::move(subsets), e.parameters());
    TypeEngine engine(ex, params, out.family);
    out.types[mask] = engine.sentence_type(k);
  });
  for (std::uint32_t t : out.types) ++out.counts[t];
  return out;
}

}  // namespace defilab
