#include "defilab/formula.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <limits>
#include <optional>
#include <unordered_map>

#include "defilab/caps.hpp"
#include "defilab/error.hpp"

namespace defilab {

struct Formula::Node {
  FormulaKind kind = FormulaKind::True;
  std::string symbol;
  std::vector<Term> terms;
  std::vector<Formula> children;
  std::string variable;
  std::size_t hash = 0;
};

namespace {

std::size_t mix(std::size_t h, std::size_t v) { return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)); }

std::size_t term_hash(const Term& t) {
  std::size_t h = std::hash<std::string>{}(t.name);
  h = mix(h, static_cast<std::size_t>(t.kind));
  h = mix(h, static_cast<std::size_t>(t.parameter + 1));
  for (const auto& a : t.args) h = mix(h, term_hash(a));
  return h;
}

}  // namespace

FormulaKind Formula::kind() const { return node_->kind; }
const std::string& Formula::symbol() const { return node_->symbol; }
const std::vector<Term>& Formula::terms() const { return node_->terms; }
const std::vector<Formula>& Formula::children() const { return node_->children; }
const std::string& Formula::variable() const { return node_->variable; }
std::size_t Formula::hash() const { return node_->hash; }

Formula Formula::make(Node node) {
  std::size_t h = mix(static_cast<std::size_t>(node.kind) + 1, std::hash<std::string>{}(node.symbol));
  h = mix(h, std::hash<std::string>{}(node.variable));
  for (const auto& t : node.terms) h = mix(h, term_hash(t));
  for (const auto& c : node.children) h = mix(h, c.hash());
  node.hash = h;
  return Formula(std::make_shared<const Node>(std::move(node)));
}

Formula Formula::truth() { return make({FormulaKind::True, {}, {}, {}, {}, 0}); }
Formula Formula::falsity() { return make({FormulaKind::False, {}, {}, {}, {}, 0}); }
Formula Formula::equals(Term lhs, Term rhs) {
  return make({FormulaKind::Equals, {}, {std::move(lhs), std::move(rhs)}, {}, {}, 0});
}
Formula Formula::relation(std::string name, std::vector<Term> args) {
  return make({FormulaKind::Relation, std::move(name), std::move(args), {}, {}, 0});
}
Formula Formula::predicate(std::string name, Term arg) {
  return make({FormulaKind::Predicate, std::move(name), {std::move(arg)}, {}, {}, 0});
}
Formula Formula::negation(Formula f) { return make({FormulaKind::Not, {}, {}, {std::move(f)}, {}, 0}); }
Formula Formula::conjunction(std::vector<Formula> operands) {
  if (operands.empty()) return truth();
  if (operands.size() == 1) return operands[0];
  return make({FormulaKind::And, {}, {}, std::move(operands), {}, 0});
}
Formula Formula::disjunction(std::vector<Formula> operands) {
  if (operands.empty()) return falsity();
  if (operands.size() == 1) return operands[0];
  return make({FormulaKind::Or, {}, {}, std::move(operands), {}, 0});
}
Formula Formula::implication(Formula lhs, Formula rhs) {
  return make({FormulaKind::Implies, {}, {}, {std::move(lhs), std::move(rhs)}, {}, 0});
}
Formula Formula::forall(std::string var, Formula body) {
  return make({FormulaKind::Forall, {}, {}, {std::move(body)}, std::move(var), 0});
}
Formula Formula::exists(std::string var, Formula body) {
  return make({FormulaKind::Exists, {}, {}, {std::move(body)}, std::move(var), 0});
}

// ---- factory -----------------------------------------------------------

Formula FormulaFactory::intern(const Formula& f) {
  // Children first, so that shallow comparison below is exact.
  std::vector<Formula> kids;
  bool changed = false;
  kids.reserve(f.children().size());
  for (const auto& c : f.children()) {
    kids.push_back(intern(c));
    changed |= kids.back().node() != c.node();
  }
  Formula g = f;
  if (changed) {
    switch (f.kind()) {
      case FormulaKind::Not: g = Formula::negation(kids[0]); break;
      case FormulaKind::And: g = Formula::conjunction(kids); break;
      case FormulaKind::Or: g = Formula::disjunction(kids); break;
      case FormulaKind::Implies: g = Formula::implication(kids[0], kids[1]); break;
      case FormulaKind::Forall: g = Formula::forall(f.variable(), kids[0]); break;
      case FormulaKind::Exists: g = Formula::exists(f.variable(), kids[0]); break;
      default: break;
    }
  }
  auto& bucket = table_[g.hash()];
  for (const auto& candidate : bucket) {
    if (candidate.kind() != g.kind() || candidate.symbol() != g.symbol() || candidate.variable() != g.variable() ||
        candidate.terms() != g.terms() || candidate.children().size() != g.children().size())
      continue;
    bool same = true;
    for (std::size_t i = 0; i < g.children().size() && same; ++i)
      same = candidate.children()[i].node() == g.children()[i].node();
    if (same) return candidate;
  }
  bucket.push_back(g);
  return g;
}

// ---- structural queries ------------------------------------------------

namespace {

template <typename T, typename Fn>
T memo_fold(const Formula& f, std::unordered_map<const Formula::Node*, T>& memo, Fn&& fn) {
  if (auto it = memo.find(f.node()); it != memo.end()) return it->second;
  T value = fn(f);
  memo.emplace(f.node(), value);
  return value;
}

void term_variables(const Term& t, std::set<std::string>& out) {
  if (t.kind == Term::Kind::Variable) out.insert(t.name);
  for (const auto& a : t.args) term_variables(a, out);
}

void term_parameters(const Term& t, std::set<int>& out) {
  if (t.kind == Term::Kind::Parameter) out.insert(t.parameter);
  for (const auto& a : t.args) term_parameters(a, out);
}

bool is_quantifier(FormulaKind k) { return k == FormulaKind::Forall || k == FormulaKind::Exists; }

}  // namespace

int quantifier_rank(const Formula& f) {
  std::unordered_map<const Formula::Node*, int> memo;
  std::function<int(const Formula&)> go = [&](const Formula& g) -> int {
    return memo_fold<int>(g, memo, [&](const Formula& h) {
      int r = 0;
      for (const auto& c : h.children()) r = std::max(r, go(c));
      return is_quantifier(h.kind()) ? r + 1 : r;
    });
  };
  return go(f);
}

std::vector<std::string> free_variables(const Formula& f) {
  std::unordered_map<const Formula::Node*, std::set<std::string>> memo;
  std::function<std::set<std::string>(const Formula&)> go = [&](const Formula& g) -> std::set<std::string> {
    return memo_fold<std::set<std::string>>(g, memo, [&](const Formula& h) {
      std::set<std::string> out;
      for (const auto& t : h.terms()) term_variables(t, out);
      for (const auto& c : h.children()) {
        auto sub = go(c);
        out.insert(sub.begin(), sub.end());
      }
      if (is_quantifier(h.kind())) out.erase(h.variable());
      return out;
    });
  };
  auto s = go(f);
  return {s.begin(), s.end()};
}

std::set<std::string> all_variables(const Formula& f) {
  std::set<std::string> out;
  std::set<const Formula::Node*> seen;
  std::function<void(const Formula&)> go = [&](const Formula& g) {
    if (!seen.insert(g.node()).second) return;
    for (const auto& t : g.terms()) term_variables(t, out);
    if (is_quantifier(g.kind())) out.insert(g.variable());
    for (const auto& c : g.children()) go(c);
  };
  go(f);
  return out;
}

std::set<std::string> predicate_symbols(const Formula& f) {
  std::set<std::string> out;
  std::set<const Formula::Node*> seen;
  std::function<void(const Formula&)> go = [&](const Formula& g) {
    if (!seen.insert(g.node()).second) return;
    if (g.kind() == FormulaKind::Predicate) out.insert(g.symbol());
    for (const auto& c : g.children()) go(c);
  };
  go(f);
  return out;
}

std::set<int> parameters_used(const Formula& f) {
  std::set<int> out;
  std::set<const Formula::Node*> seen;
  std::function<void(const Formula&)> go = [&](const Formula& g) {
    if (!seen.insert(g.node()).second) return;
    for (const auto& t : g.terms()) term_parameters(t, out);
    for (const auto& c : g.children()) go(c);
  };
  go(f);
  return out;
}

std::size_t tree_size(const Formula& f) {
  constexpr std::size_t kMax = std::numeric_limits<std::size_t>::max() / 2;
  std::unordered_map<const Formula::Node*, std::size_t> memo;
  std::function<std::size_t(const Formula&)> go = [&](const Formula& g) -> std::size_t {
    return memo_fold<std::size_t>(g, memo, [&](const Formula& h) {
      std::size_t n = 1;
      for (const auto& c : h.children()) n = std::min(kMax, n + go(c));
      return n;
    });
  };
  return go(f);
}

// ---- alpha equivalence and substitution --------------------------------

namespace {

using Binding = std::map<std::string, int>;

bool terms_alpha_equal(const Term& a, const Term& b, const Binding& ba, const Binding& bb) {
  if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
  switch (a.kind) {
    case Term::Kind::Variable: {
      auto ia = ba.find(a.name);
      auto ib = bb.find(b.name);
      if (ia == ba.end() || ib == bb.end()) return ia == ba.end() && ib == bb.end() && a.name == b.name;
      return ia->second == ib->second;
    }
    case Term::Kind::Constant: return a.name == b.name;
    case Term::Kind::Parameter: return a.parameter == b.parameter;
    case Term::Kind::Apply:
      if (a.name != b.name) return false;
      for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!terms_alpha_equal(a.args[i], b.args[i], ba, bb)) return false;
      return true;
  }
  return false;
}

bool alpha_equal(const Formula& a, const Formula& b, Binding& ba, Binding& bb, int depth) {
  if (a.kind() != b.kind() || a.symbol() != b.symbol() || a.terms().size() != b.terms().size() ||
      a.children().size() != b.children().size())
    return false;
  for (std::size_t i = 0; i < a.terms().size(); ++i)
    if (!terms_alpha_equal(a.terms()[i], b.terms()[i], ba, bb)) return false;
  if (is_quantifier(a.kind())) {
    Binding na = ba;
    Binding nb = bb;
    na[a.variable()] = depth;
    nb[b.variable()] = depth;
    return alpha_equal(a.body(), b.body(), na, nb, depth + 1);
  }
  for (std::size_t i = 0; i < a.children().size(); ++i)
    if (!alpha_equal(a.children()[i], b.children()[i], ba, bb, depth)) return false;
  return true;
}

Term substitute_term(const Term& t, const std::map<std::string, Term>& rep) {
  if (t.kind == Term::Kind::Variable) {
    auto it = rep.find(t.name);
    return it == rep.end() ? t : it->second;
  }
  if (t.kind != Term::Kind::Apply) return t;
  Term out = t;
  for (auto& a : out.args) a = substitute_term(a, rep);
  return out;
}

Formula rebuild(const Formula& f, std::vector<Term> terms, std::vector<Formula> kids, std::string var) {
  switch (f.kind()) {
    case FormulaKind::True: return Formula::truth();
    case FormulaKind::False: return Formula::falsity();
    case FormulaKind::Equals: return Formula::equals(terms[0], terms[1]);
    case FormulaKind::Relation: return Formula::relation(f.symbol(), std::move(terms));
    case FormulaKind::Predicate: return Formula::predicate(f.symbol(), terms[0]);
    case FormulaKind::Not: return Formula::negation(kids[0]);
    case FormulaKind::And: return Formula::conjunction(std::move(kids));
    case FormulaKind::Or: return Formula::disjunction(std::move(kids));
    case FormulaKind::Implies: return Formula::implication(kids[0], kids[1]);
    case FormulaKind::Forall: return Formula::forall(std::move(var), kids[0]);
    case FormulaKind::Exists: return Formula::exists(std::move(var), kids[0]);
  }
  return f;
}

Formula substitute_impl(const Formula& f, std::map<std::string, Term> rep, std::set<std::string>& used) {
  if (rep.empty()) return f;
  std::vector<Term> terms;
  for (const auto& t : f.terms()) terms.push_back(substitute_term(t, rep));
  if (is_quantifier(f.kind())) {
    std::string var = f.variable();
    rep.erase(var);
    auto body_free = free_variables(f.body());
    std::set<std::string> incoming;
    for (const auto& v : body_free) {
      auto it = rep.find(v);
      if (it != rep.end()) term_variables(it->second, incoming);
    }
    Formula body = f.body();
    if (incoming.count(var) != 0) {
      std::string renamed = fresh_variable(used);
      used.insert(renamed);
      body = substitute_impl(body, {{var, Term::variable(renamed)}}, used);
      var = renamed;
    }
    return rebuild(f, {}, {substitute_impl(body, rep, used)}, var);
  }
  std::vector<Formula> kids;
  for (const auto& c : f.children()) kids.push_back(substitute_impl(c, rep, used));
  return rebuild(f, std::move(terms), std::move(kids), {});
}

}  // namespace

bool alpha_equivalent(const Formula& a, const Formula& b) {
  Binding ba;
  Binding bb;
  return alpha_equal(a, b, ba, bb, 0);
}

Formula substitute(const Formula& f, const std::map<std::string, Term>& replacement) {
  std::set<std::string> used = all_variables(f);
  for (const auto& [v, t] : replacement) {
    used.insert(v);
    term_variables(t, used);
  }
  return substitute_impl(f, replacement, used);
}

std::string supply_variable(int index) { return "x" + std::to_string(index + 1); }

std::string fresh_variable(const std::set<std::string>& used) {
  for (int i = 0;; ++i) {
    std::string v = supply_variable(i);
    if (used.count(v) == 0) return v;
  }
}

// ---- parser ------------------------------------------------------------

SymbolContext SymbolContext::of(const ExpandedStructure& e, std::vector<std::string> extra_predicates) {
  SymbolContext ctx;
  ctx.signature = e.base().signature();
  for (const auto& s : e.subsets()) ctx.predicates.push_back(s.name);
  for (auto& p : extra_predicates) ctx.predicates.push_back(std::move(p));
  for (const auto& p : e.parameters()) ctx.parameters.push_back(p.name);
  return ctx;
}

namespace {

bool is_operator_char(char c) { return std::string_view("<>=+*-/^%!?:").find(c) != std::string_view::npos; }

bool is_operator_name(std::string_view name) {
  return !name.empty() && std::all_of(name.begin(), name.end(), is_operator_char);
}

bool is_multiplicative(std::string_view name) { return name == "*" || name == "/" || name == "%"; }

enum class Tok { End, Ident, Number, Param, Op, LParen, RParen, Comma, Dot, Not, And, Or, Implies, Equals };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t offset = 0;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto error = [&](const std::string& what, std::size_t at) -> ParseError {
    return ParseError(what, 1, at + 1);
  };
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c)) != 0) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) != 0 || s[i] == '_' || s[i] == '\''))
        ++i;
      out.push_back({Tok::Ident, std::string(s.substr(start, i - start)), start});
    } else if (std::isdigit(static_cast<unsigned char>(c)) != 0) {
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])) != 0) ++i;
      out.push_back({Tok::Number, std::string(s.substr(start, i - start)), start});
    } else if (c == '@') {
      ++i;
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) != 0 || s[i] == '_')) ++i;
      if (i == start + 1) throw error("expected parameter after '@'", start);
      out.push_back({Tok::Param, std::string(s.substr(start + 1, i - start - 1)), start});
    } else if (is_operator_char(c)) {
      while (i < s.size() && is_operator_char(s[i])) ++i;
      std::string op(s.substr(start, i - start));
      Tok kind = op == "=" ? Tok::Equals : op == "->" ? Tok::Implies : Tok::Op;
      out.push_back({kind, op, start});
    } else {
      Tok kind = Tok::End;
      switch (c) {
        case '(': kind = Tok::LParen; break;
        case ')': kind = Tok::RParen; break;
        case ',': kind = Tok::Comma; break;
        case '.': kind = Tok::Dot; break;
        case '~': kind = Tok::Not; break;
        case '&': kind = Tok::And; break;
        case '|': kind = Tok::Or; break;
        default: throw error(std::string("unexpected character '") + c + "'", start);
      }
      ++i;
      out.push_back({kind, std::string(1, c), start});
    }
  }
  out.push_back({Tok::End, "", s.size()});
  return out;
}

class Parser {
 public:
  Parser(std::string_view text, const SymbolContext& ctx) : tokens_(tokenize(text)), ctx_(ctx) {}

  Formula parse() {
    Formula f = implication();
    if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "'");
    return f;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const { return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)]; }
  const Token& next() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }
  bool accept(Tok k) {
    if (peek().kind != k) return false;
    ++pos_;
    return true;
  }
  void expect(Tok k, const std::string& what) {
    if (!accept(k)) fail("expected " + what);
  }
  [[noreturn]] void fail(const std::string& what) const { fail_at(what, peek().offset); }
  [[noreturn]] static void fail_at(const std::string& what, std::size_t offset) {
    throw ParseError(what, 1, offset + 1);
  }

  bool is_predicate(const std::string& name) const {
    return std::find(ctx_.predicates.begin(), ctx_.predicates.end(), name) != ctx_.predicates.end();
  }
  bool is_named_parameter(const std::string& name) const {
    return std::find(ctx_.parameters.begin(), ctx_.parameters.end(), name) != ctx_.parameters.end();
  }
  std::optional<int> relation_arity(const std::string& name) const {
    auto i = ctx_.signature.relation_index(name);
    if (!i) return std::nullopt;
    return ctx_.signature.relations()[static_cast<std::size_t>(*i)].arity;
  }
  std::optional<int> function_arity(const std::string& name) const {
    auto i = ctx_.signature.function_index(name);
    if (!i) return std::nullopt;
    return ctx_.signature.functions()[static_cast<std::size_t>(*i)].arity;
  }

  Formula implication() {
    Formula lhs = disjunction();
    if (accept(Tok::Implies)) return Formula::implication(lhs, implication());
    return lhs;
  }

  Formula disjunction() {
    std::vector<Formula> parts{conjunction()};
    while (accept(Tok::Or)) parts.push_back(conjunction());
    return Formula::disjunction(std::move(parts));
  }

  Formula conjunction() {
    std::vector<Formula> parts{unary()};
    while (accept(Tok::And)) parts.push_back(unary());
    return Formula::conjunction(std::move(parts));
  }

  Formula unary() {
    if (accept(Tok::Not)) return Formula::negation(unary());
    if (peek().kind == Tok::Ident && (peek().text == "exists" || peek().text == "forall")) {
      const bool universal = next().text == "forall";
      if (peek().kind != Tok::Ident || !is_variable_name(peek().text)) fail("expected a variable after quantifier");
      std::string var = next().text;
      expect(Tok::Dot, "'.' after quantified variable");
      Formula body = implication();
      return universal ? Formula::forall(std::move(var), std::move(body))
                       : Formula::exists(std::move(var), std::move(body));
    }
    return primary();
  }

  Formula primary() {
    if (peek().kind == Tok::Ident && peek().text == "true") {
      ++pos_;
      return Formula::truth();
    }
    if (peek().kind == Tok::Ident && peek().text == "false") {
      ++pos_;
      return Formula::falsity();
    }
    if (peek().kind == Tok::LParen) {
      const std::size_t saved = pos_;
      std::optional<ParseError> as_formula;
      try {
        ++pos_;
        Formula f = implication();
        expect(Tok::RParen, "')'");
        return f;
      } catch (const ParseError& e) {
        // "(t) = s": the parenthesis opened a term.
        as_formula = e;
        pos_ = saved;
      }
      try {
        return atomic();
      } catch (const ParseError& e) {
        // report whichever reading got further
        if (e.column() >= as_formula->column()) throw;
        throw *as_formula;
      }
    }
    return atomic();
  }

  Formula atomic() {
    if (peek().kind == Tok::Ident && peek(1).kind == Tok::LParen) {
      const Token& head = peek();
      if (is_predicate(head.text)) {
        ++pos_;
        ++pos_;
        std::vector<Term> args = term_list();
        if (args.size() != 1) fail_at("arity mismatch: predicate " + head.text + " takes 1 argument", head.offset);
        return Formula::predicate(head.text, std::move(args[0]));
      }
      if (auto arity = relation_arity(head.text)) {
        const std::size_t offset = head.offset;
        std::string name = head.text;
        pos_ += 2;
        std::vector<Term> args = term_list();
        if (static_cast<int>(args.size()) != *arity)
          fail_at("arity mismatch: relation " + name + " takes " + std::to_string(*arity) + " arguments", offset);
        return Formula::relation(std::move(name), std::move(args));
      }
      if (!function_arity(head.text)) fail("unknown symbol '" + head.text + "'");
    }
    Term lhs = term();
    if (accept(Tok::Equals)) return Formula::equals(std::move(lhs), term());
    const Token& op = peek();
    if ((op.kind == Tok::Op || op.kind == Tok::Ident) && relation_arity(op.text)) {
      if (*relation_arity(op.text) != 2) fail("arity mismatch: infix relation " + op.text + " is not binary");
      std::string name = next().text;
      return Formula::relation(std::move(name), {std::move(lhs), term()});
    }
    if (op.kind == Tok::Op) fail("unknown symbol '" + op.text + "'");
    fail("expected '=' or a relation symbol");
  }

  // after '(' has been consumed
  std::vector<Term> term_list() {
    std::vector<Term> args;
    if (accept(Tok::RParen)) return args;
    args.push_back(term());
    while (accept(Tok::Comma)) args.push_back(term());
    expect(Tok::RParen, "')'");
    return args;
  }

  static bool is_variable_name(const std::string& s) {
    return !s.empty() && std::islower(static_cast<unsigned char>(s[0])) != 0 && s != "exists" && s != "forall" &&
           s != "true" && s != "false";
  }

  bool binary_function(const Token& t) const {
    if (t.kind != Tok::Op) return false;
    auto a = function_arity(t.text);
    return a && *a == 2;
  }

  Term term() { return additive(); }

  Term additive() {
    Term lhs = multiplicative();
    while (binary_function(peek()) && !is_multiplicative(peek().text)) {
      std::string op = next().text;
      lhs = Term::apply(op, {std::move(lhs), multiplicative()});
    }
    return lhs;
  }

  Term multiplicative() {
    Term lhs = term_primary();
    while (binary_function(peek()) && is_multiplicative(peek().text)) {
      std::string op = next().text;
      lhs = Term::apply(op, {std::move(lhs), term_primary()});
    }
    return lhs;
  }

  Term term_primary() {
    const Token tok = peek();
    switch (tok.kind) {
      case Tok::LParen: {
        ++pos_;
        Term t = term();
        expect(Tok::RParen, "')'");
        return t;
      }
      case Tok::Param: {
        ++pos_;
        if (std::isdigit(static_cast<unsigned char>(tok.text[0])) != 0) {
          try {
            return Term::param(std::stoi(tok.text));
          } catch (const std::exception&) {
            fail_at("parameter index out of range", tok.offset);
          }
        }
        if (!is_named_parameter(tok.text)) fail_at("unknown parameter '@" + tok.text + "'", tok.offset);
        return Term::constant(tok.text);
      }
      case Tok::Number: {
        ++pos_;
        auto a = function_arity(tok.text);
        if (!a) fail_at("unknown symbol '" + tok.text + "'", tok.offset);
        if (*a != 0) fail_at("arity mismatch: " + tok.text + " is not a constant", tok.offset);
        return Term::constant(tok.text);
      }
      case Tok::Ident: {
        ++pos_;
        if (auto a = function_arity(tok.text)) {
          if (*a == 0) return Term::constant(tok.text);
          expect(Tok::LParen, "'(' after function symbol");
          std::vector<Term> args = term_list();
          if (static_cast<int>(args.size()) != *a)
            fail_at("arity mismatch: function " + tok.text + " takes " + std::to_string(*a) + " arguments",
                    tok.offset);
          return Term::apply(tok.text, std::move(args));
        }
        if (is_named_parameter(tok.text)) return Term::constant(tok.text);
        if (relation_arity(tok.text) || is_predicate(tok.text))
          fail_at("relation symbol '" + tok.text + "' used as a term", tok.offset);
        if (!is_variable_name(tok.text)) fail_at("unknown symbol '" + tok.text + "'", tok.offset);
        return Term::variable(tok.text);
      }
      case Tok::Op: {
        if (auto a = function_arity(tok.text); a && *a == 0) {
          ++pos_;
          return Term::constant(tok.text);
        }
        fail_at("unknown symbol '" + tok.text + "'", tok.offset);
      }
      default: fail_at("expected a term", tok.offset);
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  const SymbolContext& ctx_;
};

}  // namespace

Formula parse_formula(std::string_view text, const SymbolContext& context) { return Parser(text, context).parse(); }

// ---- printer -----------------------------------------------------------

namespace {

int term_precedence(const Term& t) {
  if (t.kind == Term::Kind::Apply && t.args.size() == 2 && is_operator_name(t.name))
    return is_multiplicative(t.name) ? 2 : 1;
  return 3;
}

void print_term_to(const Term& t, std::string& out, int context) {
  switch (t.kind) {
    case Term::Kind::Variable:
    case Term::Kind::Constant: out += t.name; return;
    case Term::Kind::Parameter: out += "@" + std::to_string(t.parameter); return;
    case Term::Kind::Apply: break;
  }
  const int prec = term_precedence(t);
  if (prec < 3) {
    // left associative: the right operand needs a strictly higher level
    if (prec < context) out += "(";
    print_term_to(t.args[0], out, prec);
    out += " " + t.name + " ";
    print_term_to(t.args[1], out, prec + 1);
    if (prec < context) out += ")";
    return;
  }
  out += t.name + "(";
  for (std::size_t i = 0; i < t.args.size(); ++i) {
    if (i != 0) out += ",";
    print_term_to(t.args[i], out, 0);
  }
  out += ")";
}

int formula_precedence(FormulaKind k) {
  switch (k) {
    case FormulaKind::Forall:
    case FormulaKind::Exists: return 0;
    case FormulaKind::Implies: return 1;
    case FormulaKind::Or: return 2;
    case FormulaKind::And: return 3;
    case FormulaKind::Not: return 4;
    default: return 5;
  }
}

void print_to(const Formula& f, std::string& out, int context) {
  const int prec = formula_precedence(f.kind());
  const bool parens = prec < context;
  if (parens) out += "(";
  switch (f.kind()) {
    case FormulaKind::True: out += "true"; break;
    case FormulaKind::False: out += "false"; break;
    case FormulaKind::Equals:
      print_term_to(f.terms()[0], out, 0);
      out += " = ";
      print_term_to(f.terms()[1], out, 0);
      break;
    case FormulaKind::Relation:
      if (f.terms().size() == 2 && is_operator_name(f.symbol())) {
        print_term_to(f.terms()[0], out, 0);
        out += " " + f.symbol() + " ";
        print_term_to(f.terms()[1], out, 0);
      } else {
        out += f.symbol() + "(";
        for (std::size_t i = 0; i < f.terms().size(); ++i) {
          if (i != 0) out += ",";
          print_term_to(f.terms()[i], out, 0);
        }
        out += ")";
      }
      break;
    case FormulaKind::Predicate:
      out += f.symbol() + "(";
      print_term_to(f.terms()[0], out, 0);
      out += ")";
      break;
    case FormulaKind::Not:
      out += "~";
      print_to(f.children()[0], out, 4);
      break;
    case FormulaKind::And:
    case FormulaKind::Or: {
      const char* sep = f.kind() == FormulaKind::And ? " & " : " | ";
      for (std::size_t i = 0; i < f.children().size(); ++i) {
        if (i != 0) out += sep;
        print_to(f.children()[i], out, prec + 1);
      }
      break;
    }
    case FormulaKind::Implies:
      print_to(f.children()[0], out, 2);
      out += " -> ";
      print_to(f.children()[1], out, 1);
      break;
    case FormulaKind::Forall:
    case FormulaKind::Exists:
      out += f.kind() == FormulaKind::Forall ? "forall " : "exists ";
      out += f.variable() + ". ";
      print_to(f.body(), out, 0);
      break;
  }
  if (parens) out += ")";
}

}  // namespace

std::string print_term(const Term& t) {
  std::string out;
  print_term_to(t, out, 0);
  return out;
}

std::string print_formula(const Formula& f) {
  const std::size_t size = tree_size(f);
  if (size > caps().formula_nodes)
    throw SizeGuardExceeded("formula has " + std::to_string(size) + " nodes, above the cap of " +
                            std::to_string(caps().formula_nodes));
  std::string out;
  print_to(f, out, 0);
  return out;
}

}  // namespace defilab
