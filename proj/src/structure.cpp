#include "defilab/structure.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <mutex>
#include <set>
#include <sstream>
#include <unordered_map>

#include "defilab/caps.hpp"
#include "defilab/error.hpp"

namespace defilab {

// ---- Signature ---------------------------------------------------------

void Signature::add_relation(std::string name, int arity) {
  if (arity < 1) throw SemanticError("relation " + name + " must have positive arity");
  if (contains(name)) throw SemanticError("duplicate symbol " + name);
  relations_.push_back({std::move(name), arity});
}

void Signature::add_function(std::string name, int arity) {
  if (arity < 0) throw SemanticError("function " + name + " has negative arity");
  if (contains(name)) throw SemanticError("duplicate symbol " + name);
  functions_.push_back({std::move(name), arity});
}

std::optional<int> Signature::relation_index(std::string_view name) const {
  for (std::size_t i = 0; i < relations_.size(); ++i)
    if (relations_[i].name == name) return static_cast<int>(i);
  return std::nullopt;
}

std::optional<int> Signature::function_index(std::string_view name) const {
  for (std::size_t i = 0; i < functions_.size(); ++i)
    if (functions_[i].name == name) return static_cast<int>(i);
  return std::nullopt;
}

bool Signature::contains(std::string_view name) const {
  return relation_index(name).has_value() || function_index(name).has_value();
}

// ---- Relation / FunctionTable -----------------------------------------

namespace {

constexpr std::uint64_t kDenseLimit = std::uint64_t{1} << 24;

// universe^arity, saturating at kDenseLimit + 1.
std::uint64_t bounded_power(int universe, int arity) {
  std::uint64_t p = 1;
  for (int i = 0; i < arity; ++i) {
    p *= static_cast<std::uint64_t>(universe);
    if (p > kDenseLimit) return kDenseLimit + 1;
  }
  return p;
}

}  // namespace

Relation::Relation(int arity, int universe, std::vector<Tuple> tuples)
    : arity_(arity), universe_(universe), tuples_(std::move(tuples)) {
  for (const auto& t : tuples_) {
    if (static_cast<int>(t.size()) != arity_)
      throw SemanticError("tuple of length " + std::to_string(t.size()) + " in relation of arity " +
                          std::to_string(arity_));
    for (int e : t)
      if (e < 0 || e >= universe_) throw SemanticError("element " + std::to_string(e) + " out of range");
  }
  std::sort(tuples_.begin(), tuples_.end());
  tuples_.erase(std::unique(tuples_.begin(), tuples_.end()), tuples_.end());
  const std::uint64_t space = bounded_power(universe_, arity_);
  if (space <= kDenseLimit) {
    dense_.assign(space, false);
    for (const auto& t : tuples_) dense_[encode(t)] = true;
  } else {
    sparse_.reserve(tuples_.size());
    for (const auto& t : tuples_) sparse_.push_back(encode(t));
    std::sort(sparse_.begin(), sparse_.end());
  }
}

std::uint64_t Relation::encode(std::span<const int> tuple) const {
  std::uint64_t code = 0;
  for (int e : tuple) code = code * static_cast<std::uint64_t>(universe_) + static_cast<std::uint64_t>(e);
  return code;
}

bool Relation::contains(std::span<const int> tuple) const {
  const std::uint64_t code = encode(tuple);
  if (!dense_.empty() || sparse_.empty()) return !dense_.empty() && dense_[code];
  return std::binary_search(sparse_.begin(), sparse_.end(), code);
}

FunctionTable::FunctionTable(int arity, int universe, std::vector<int> values)
    : arity_(arity), universe_(universe), values_(std::move(values)) {}

int FunctionTable::apply(std::span<const int> args) const {
  std::size_t code = 0;
  for (int e : args) code = code * static_cast<std::size_t>(universe_) + static_cast<std::size_t>(e);
  return values_[code];
}

// ---- Structure ---------------------------------------------------------

struct Structure::Data {
  std::string name;
  int universe = 0;
  Signature signature;
  std::vector<Relation> relations;
  std::vector<FunctionTable> functions;
  std::vector<std::string> labels;  // empty when unlabeled
  std::uint64_t id = 0;
};

namespace {
std::atomic<std::uint64_t> g_next_structure_id{1};
}

const std::string& Structure::name() const { return data_->name; }
int Structure::size() const { return data_->universe; }
const Signature& Structure::signature() const { return data_->signature; }
const Relation& Structure::relation(int index) const { return data_->relations.at(static_cast<std::size_t>(index)); }
const FunctionTable& Structure::function(int index) const {
  return data_->functions.at(static_cast<std::size_t>(index));
}
bool Structure::has_labels() const { return !data_->labels.empty(); }
std::string Structure::label(int element) const {
  if (data_->labels.empty() || data_->labels[static_cast<std::size_t>(element)].empty())
    return std::to_string(element);
  return data_->labels[static_cast<std::size_t>(element)];
}
std::uint64_t Structure::id() const { return data_->id; }

bool Structure::same_interpretation(const Structure& o) const {
  return data_ == o.data_ || (data_->universe == o.data_->universe && data_->signature == o.data_->signature &&
                              data_->relations == o.data_->relations && data_->functions == o.data_->functions);
}

bool Structure::operator==(const Structure& o) const {
  return same_interpretation(o) && data_->name == o.data_->name && data_->labels == o.data_->labels;
}

StructureBuilder::StructureBuilder(std::string name, int universe) : name_(std::move(name)), universe_(universe) {
  if (universe < 1) throw SemanticError("universe must have at least one element");
}

StructureBuilder& StructureBuilder::relation(std::string name, int arity, std::vector<Tuple> tuples) {
  signature_.add_relation(name, arity);
  try {
    relations_.emplace_back(arity, universe_, std::move(tuples));
  } catch (const SemanticError& e) {
    throw SemanticError("relation " + name + ": " + e.what());
  }
  return *this;
}

StructureBuilder& StructureBuilder::function(std::string name, int arity,
                                             const std::vector<std::pair<Tuple, int>>& table) {
  if (arity < 0) throw SemanticError("function " + name + " has negative arity");
  std::uint64_t space = bounded_power(universe_, arity);
  if (space > kDenseLimit) throw CapExceeded("function " + name + ": table too large");
  std::vector<int> values(space, -1);
  for (const auto& [args, value] : table) {
    if (static_cast<int>(args.size()) != arity)
      throw SemanticError("function " + name + ": argument tuple of wrong length");
    std::size_t code = 0;
    for (int e : args) {
      if (e < 0 || e >= universe_)
        throw SemanticError("function " + name + ": element " + std::to_string(e) + " out of range");
      code = code * static_cast<std::size_t>(universe_) + static_cast<std::size_t>(e);
    }
    if (value < 0 || value >= universe_)
      throw SemanticError("function " + name + ": value " + std::to_string(value) + " out of range");
    if (values[code] != -1 && values[code] != value)
      throw SemanticError("function " + name + " not single-valued");
    values[code] = value;
  }
  if (std::find(values.begin(), values.end(), -1) != values.end())
    throw SemanticError("function " + name + " not total");
  return function_dense(std::move(name), arity, std::move(values));
}

StructureBuilder& StructureBuilder::function_dense(std::string name, int arity, std::vector<int> values) {
  if (values.size() != bounded_power(universe_, arity)) throw SemanticError("function " + name + " not total");
  for (int v : values)
    if (v < 0 || v >= universe_)
      throw SemanticError("function " + name + ": value " + std::to_string(v) + " out of range");
  signature_.add_function(name, arity);
  functions_.emplace_back(arity, universe_, std::move(values));
  return *this;
}

StructureBuilder& StructureBuilder::constant(std::string name, int value) {
  return function_dense(std::move(name), 0, {value});
}

StructureBuilder& StructureBuilder::label(int element, std::string text) {
  if (element < 0 || element >= universe_)
    throw SemanticError("label for element " + std::to_string(element) + " out of range");
  labels_[element] = std::move(text);
  return *this;
}

Structure StructureBuilder::build() const {
  auto data = std::make_shared<Structure::Data>();
  data->name = name_;
  data->universe = universe_;
  data->signature = signature_;
  data->relations = relations_;
  data->functions = functions_;
  if (!labels_.empty()) {
    data->labels.assign(static_cast<std::size_t>(universe_), "");
    for (const auto& [i, text] : labels_) data->labels[static_cast<std::size_t>(i)] = text;
  }
  data->id = g_next_structure_id.fetch_add(1);
  return Structure(std::move(data));
}

// ---- ExpandedStructure -------------------------------------------------

ExpandedStructure::ExpandedStructure(Structure base) : base_(std::move(base)) {}

ExpandedStructure::ExpandedStructure(Structure base, std::vector<NamedSubset> subsets,
                                     std::vector<NamedParameter> params)
    : base_(std::move(base)), subsets_(std::move(subsets)), params_(std::move(params)) {}

std::optional<int> ExpandedStructure::subset_index(std::string_view name) const {
  for (std::size_t i = 0; i < subsets_.size(); ++i)
    if (subsets_[i].name == name) return static_cast<int>(i);
  return std::nullopt;
}

std::optional<int> ExpandedStructure::parameter_element(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return p.element;
  return std::nullopt;
}

ExpandedStructure expand(const Structure& s, std::vector<NamedSubset> subsets, std::vector<NamedParameter> params) {
  std::set<std::string> names;
  auto claim = [&](const std::string& name) {
    if (name.empty()) throw SemanticError("empty symbol name in expansion");
    if (s.signature().contains(name)) throw SemanticError("expansion symbol " + name + " collides with the signature");
    if (!names.insert(name).second) throw SemanticError("duplicate expansion symbol " + name);
  };
  if (!subsets.empty()) ElementSet::check_universe(s.size());
  for (const auto& sub : subsets) {
    claim(sub.name);
    if (s.size() < 64 && (sub.members.mask() >> s.size()) != 0)
      throw SemanticError("subset " + sub.name + " references an element outside the universe");
  }
  for (const auto& p : params) {
    claim(p.name);
    if (p.element < 0 || p.element >= s.size())
      throw SemanticError("parameter " + p.name + " = " + std::to_string(p.element) + " out of range");
  }
  return ExpandedStructure(s, std::move(subsets), std::move(params));
}

// ---- file format -------------------------------------------------------

namespace {

class Scanner {
 public:
  explicit Scanner(std::string_view text) : text_(text) {}

  bool at_end() {
    skip(true);
    return pos_ >= text_.size();
  }

  // Skips blanks and comments; newlines too when `newlines` is set.
  void skip(bool newlines) {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (c == '\n' ? newlines : std::isspace(static_cast<unsigned char>(c)) != 0) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string word() {
    skip(false);
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])) == 0) advance();
    if (start == pos_) fail("expected a word");
    return std::string(text_.substr(start, pos_ - start));
  }

  int integer() {
    skip(true);
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])) != 0) advance();
    if (start == pos_) fail("expected a non-negative integer");
    try {
      return std::stoi(std::string(text_.substr(start, pos_ - start)));
    } catch (const std::exception&) {
      fail("integer out of range");
    }
  }

  void expect(char c) {
    skip(true);
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    advance();
  }

  bool accept(char c) {
    skip(true);
    if (pos_ < text_.size() && text_[pos_] == c) {
      advance();
      return true;
    }
    return false;
  }

  bool accept(std::string_view s) {
    skip(true);
    if (text_.substr(pos_, s.size()) == s) {
      for (std::size_t i = 0; i < s.size(); ++i) advance();
      return true;
    }
    return false;
  }

  std::string rest_of_line() {
    skip(false);
    std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '\n') advance();
    std::string s(text_.substr(start, pos_ - start));
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())) != 0) s.pop_back();
    return s;
  }

  void end_of_statement() {
    skip(false);
    if (pos_ < text_.size() && text_[pos_] != '\n') fail("unexpected text after statement");
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_, column_); }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

std::pair<std::string, int> split_symbol(Scanner& sc, const std::string& word) {
  auto slash = word.rfind('/');
  if (slash == std::string::npos || slash == 0 || slash + 1 == word.size())
    sc.fail("expected <name>/<arity>, got '" + word + "'");
  int arity = 0;
  try {
    std::size_t used = 0;
    arity = std::stoi(word.substr(slash + 1), &used);
    if (used != word.size() - slash - 1) throw std::invalid_argument("arity");
  } catch (const std::exception&) {
    sc.fail("bad arity in '" + word + "'");
  }
  return {word.substr(0, slash), arity};
}

Tuple read_tuple(Scanner& sc) {
  Tuple t;
  if (!sc.accept('(')) {
    t.push_back(sc.integer());
    return t;
  }
  if (sc.accept(')')) return t;
  t.push_back(sc.integer());
  while (sc.accept(',')) t.push_back(sc.integer());
  sc.expect(')');
  return t;
}

}  // namespace

Structure load_structure(std::string_view text) {
  Scanner sc(text);
  std::string name = "structure";
  std::optional<int> universe;
  struct PendingRelation {
    std::string name;
    int arity;
    std::vector<Tuple> tuples;
  };
  struct PendingFunction {
    std::string name;
    int arity;
    std::vector<std::pair<Tuple, int>> table;
  };
  // Relations and functions keep their declaration order; labels are applied last.
  std::vector<PendingRelation> relations;
  std::vector<PendingFunction> functions;
  std::vector<std::pair<int, std::string>> labels;

  while (!sc.at_end()) {
    const std::size_t line = sc.line();
    const std::size_t column = sc.column();
    std::string keyword = sc.word();
    if (keyword == "structure") {
      name = sc.word();
      sc.end_of_statement();
    } else if (keyword == "universe") {
      if (universe) throw ParseError("universe declared twice", line, column);
      universe = sc.integer();
      if (*universe < 1) throw ParseError("universe must be positive", line, column);
      sc.end_of_statement();
    } else if (keyword == "label") {
      int element = sc.integer();
      labels.emplace_back(element, sc.rest_of_line());
    } else if (keyword == "relation") {
      auto [rel, arity] = split_symbol(sc, sc.word());
      sc.expect('=');
      sc.expect('{');
      std::vector<Tuple> tuples;
      if (!sc.accept('}')) {
        do {
          tuples.push_back(read_tuple(sc));
        } while (sc.accept(','));
        sc.expect('}');
      }
      sc.end_of_statement();
      relations.push_back({rel, arity, std::move(tuples)});
    } else if (keyword == "function") {
      auto [fn, arity] = split_symbol(sc, sc.word());
      sc.expect('=');
      sc.expect('{');
      std::vector<std::pair<Tuple, int>> table;
      if (!sc.accept('}')) {
        do {
          Tuple args = read_tuple(sc);
          if (!sc.accept("->")) sc.fail("expected '->'");
          table.emplace_back(std::move(args), sc.integer());
        } while (sc.accept(','));
        sc.expect('}');
      }
      sc.end_of_statement();
      functions.push_back({fn, arity, std::move(table)});
    } else if (keyword == "constant") {
      std::string cname = sc.word();
      sc.expect('=');
      int value = sc.integer();
      sc.end_of_statement();
      functions.push_back({cname, 0, {{Tuple{}, value}}});
    } else {
      throw ParseError("unknown statement '" + keyword + "'", line, column);
    }
  }
  if (!universe) throw ParseError("missing universe declaration", sc.line(), 0);

  StructureBuilder b(name, *universe);
  for (auto& r : relations) {
    if (r.arity < 1) throw SemanticError("relation " + r.name + " must have positive arity");
    b.relation(r.name, r.arity, std::move(r.tuples));
  }
  for (const auto& f : functions) b.function(f.name, f.arity, f.table);
  for (auto& [element, text] : labels) b.label(element, std::move(text));
  return b.build();
}

namespace {

std::string tuple_text(std::span<const int> t) {
  std::string s = "(";
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i != 0) s += ",";
    s += std::to_string(t[i]);
  }
  return s + ")";
}

}  // namespace

std::string print_structure(const Structure& s) {
  std::ostringstream out;
  out << "structure " << s.name() << "\n";
  out << "universe " << s.size() << "\n";
  if (s.has_labels())
    for (int i = 0; i < s.size(); ++i) out << "label " << i << " " << s.label(i) << "\n";
  const Signature& sig = s.signature();
  for (std::size_t r = 0; r < sig.relations().size(); ++r) {
    const auto& sym = sig.relations()[r];
    out << "relation " << sym.name << "/" << sym.arity << " = {";
    bool first = true;
    for (const auto& t : s.relation(static_cast<int>(r)).tuples()) {
      if (!first) out << ", ";
      out << tuple_text(t);
      first = false;
    }
    out << "}\n";
  }
  for (std::size_t f = 0; f < sig.functions().size(); ++f) {
    const auto& sym = sig.functions()[f];
    const auto& table = s.function(static_cast<int>(f));
    if (sym.arity == 0) {
      out << "constant " << sym.name << " = " << table.values()[0] << "\n";
      continue;
    }
    out << "function " << sym.name << "/" << sym.arity << " = {";
    Tuple args(static_cast<std::size_t>(sym.arity), 0);
    for (std::size_t code = 0; code < table.values().size(); ++code) {
      std::size_t rest = code;
      for (int i = sym.arity - 1; i >= 0; --i) {
        args[static_cast<std::size_t>(i)] = static_cast<int>(rest % static_cast<std::size_t>(s.size()));
        rest /= static_cast<std::size_t>(s.size());
      }
      if (code != 0) out << ", ";
      out << tuple_text(args) << "->" << table.values()[code];
    }
    out << "}\n";
  }
  return out.str();
}

// ---- generators --------------------------------------------------------

namespace {

void warn_universe(int n) {
  if (n > caps().universe)
    throw CapExceeded("universe of " + std::to_string(n) + " elements exceeds the cap of " +
                      std::to_string(caps().universe));
}

bool is_prime(int p) {
  if (p < 2) return false;
  for (int q = 2; q * q <= p; ++q)
    if (p % q == 0) return false;
  return true;
}

using Poly = std::vector<int>;  // coefficients, lowest degree first

void trim(Poly& a) {
  while (!a.empty() && a.back() == 0) a.pop_back();
}

// Remainder of a modulo b over GF(p); b non-zero.
Poly poly_mod(Poly a, Poly b, int p) {
  trim(a);
  trim(b);
  int inv_lead = 1;
  while ((b.back() * inv_lead) % p != 1) ++inv_lead;
  while (a.size() >= b.size()) {
    const int factor = (a.back() * inv_lead) % p;
    const std::size_t shift = a.size() - b.size();
    for (std::size_t i = 0; i < b.size(); ++i) a[shift + i] = ((a[shift + i] - factor * b[i]) % p + p) % p;
    trim(a);
  }
  return a;
}

Poly monic_from_tail(const std::vector<int>& tail) {
  Poly m(tail.begin(), tail.end());
  m.push_back(1);
  return m;
}

bool irreducible(const Poly& m, int p) {
  const int d = static_cast<int>(m.size()) - 1;
  for (int deg = 1; deg <= d / 2; ++deg) {
    int count = 1;
    for (int i = 0; i < deg; ++i) count *= p;
    for (int code = 0; code < count; ++code) {
      Poly tail(static_cast<std::size_t>(deg));
      for (int i = 0, rest = code; i < deg; ++i, rest /= p) tail[static_cast<std::size_t>(i)] = rest % p;
      if (poly_mod(m, monic_from_tail(tail), p).empty()) return false;
    }
  }
  return true;
}

std::string poly_label(int value, int p, int d) {
  if (d == 1) return std::to_string(value);
  std::string s;
  std::vector<int> c;
  for (int i = 0; i < d; ++i, value /= p) c.push_back(value % p);
  for (int i = d - 1; i >= 0; --i) {
    const int coef = c[static_cast<std::size_t>(i)];
    if (coef == 0) continue;
    if (!s.empty()) s += "+";
    if (i == 0) {
      s += std::to_string(coef);
      continue;
    }
    if (coef != 1) s += std::to_string(coef);
    s += "x";
    if (i > 1) s += "^" + std::to_string(i);
  }
  return s.empty() ? "0" : s;
}

}  // namespace

Structure gen_linear_order(int n) {
  if (n < 1) throw SemanticError("linear order needs n >= 1");
  warn_universe(n);
  std::vector<Tuple> tuples;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) tuples.push_back({i, j});
  return StructureBuilder("L" + std::to_string(n), n).relation("<", 2, std::move(tuples)).build();
}

Structure gen_directed_cycle(int n) {
  if (n < 1) throw SemanticError("cycle needs n >= 1");
  warn_universe(n);
  std::vector<Tuple> tuples;
  for (int i = 0; i < n; ++i) tuples.push_back({i, (i + 1) % n});
  return StructureBuilder("C" + std::to_string(n), n).relation("E", 2, std::move(tuples)).build();
}

std::vector<int> least_irreducible_tail(int p, int d) {
  if (!is_prime(p)) throw SemanticError(std::to_string(p) + " is not prime");
  if (d < 1) throw SemanticError("field exponent must be positive");
  long long count = 1;
  for (int i = 0; i < d; ++i) {
    count *= p;
    if (count > 1'000'000) throw CapExceeded("field too large");
  }
  // Tails are compared with c_{d-1} as the most significant digit.
  for (long long code = 0; code < count; ++code) {
    std::vector<int> tail(static_cast<std::size_t>(d));
    long long rest = code;
    for (int i = 0; i < d; ++i, rest /= p) tail[static_cast<std::size_t>(i)] = static_cast<int>(rest % p);
    if (irreducible(monic_from_tail(tail), p)) return tail;
  }
  throw SemanticError("no irreducible polynomial found");
}

Structure gen_finite_field(int p, int d, std::optional<std::vector<int>> modulus_tail) {
  if (!is_prime(p)) throw SemanticError(std::to_string(p) + " is not prime");
  if (d < 1) throw SemanticError("field exponent must be positive");
  long long q = 1;
  for (int i = 0; i < d; ++i) {
    q *= p;
    if (q > caps().field_size)
      throw CapExceeded("field of size " + std::to_string(p) + "^" + std::to_string(d) + " exceeds the cap of " +
                        std::to_string(caps().field_size));
  }
  std::vector<int> tail = modulus_tail ? *modulus_tail : least_irreducible_tail(p, d);
  if (static_cast<int>(tail.size()) != d) throw SemanticError("modulus tail must have d coefficients");
  for (int c : tail)
    if (c < 0 || c >= p) throw SemanticError("modulus coefficient out of range");
  const Poly modulus = monic_from_tail(tail);
  if (!irreducible(modulus, p)) throw SemanticError("modulus is not irreducible");

  const int n = static_cast<int>(q);
  auto to_poly = [&](int v) {
    Poly a(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i, v /= p) a[static_cast<std::size_t>(i)] = v % p;
    return a;
  };
  auto from_poly = [&](const Poly& a) {
    int v = 0;
    for (int i = static_cast<int>(a.size()) - 1; i >= 0; --i) v = v * p + a[static_cast<std::size_t>(i)];
    return v;
  };
  std::vector<int> add(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  std::vector<int> mul(add.size());
  for (int a = 0; a < n; ++a) {
    const Poly pa = to_poly(a);
    for (int b = 0; b < n; ++b) {
      const Poly pb = to_poly(b);
      Poly sum(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i)
        sum[static_cast<std::size_t>(i)] = (pa[static_cast<std::size_t>(i)] + pb[static_cast<std::size_t>(i)]) % p;
      Poly prod(static_cast<std::size_t>(2 * d), 0);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          prod[static_cast<std::size_t>(i + j)] =
              (prod[static_cast<std::size_t>(i + j)] + pa[static_cast<std::size_t>(i)] * pb[static_cast<std::size_t>(j)]) % p;
      Poly reduced = poly_mod(prod, modulus, p);
      const std::size_t idx = static_cast<std::size_t>(a) * static_cast<std::size_t>(n) + static_cast<std::size_t>(b);
      add[idx] = from_poly(sum);
      mul[idx] = from_poly(reduced);
    }
  }
  StructureBuilder b("GF(" + std::to_string(n) + ")", n);
  b.function_dense("+", 2, std::move(add)).function_dense("*", 2, std::move(mul)).constant("0", 0).constant("1", 1);
  if (d > 1)
    for (int v = 0; v < n; ++v) b.label(v, poly_label(v, p, d));
  return b.build();
}

Structure membership_structure(const std::vector<HFSet>& transitive_set, std::string name) {
  const int n = static_cast<int>(transitive_set.size());
  std::vector<Tuple> edges;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (transitive_set[static_cast<std::size_t>(j)].contains(transitive_set[static_cast<std::size_t>(i)]))
        edges.push_back({i, j});
  StructureBuilder b(std::move(name), n);
  b.relation("in", 2, std::move(edges));
  for (int i = 0; i < n; ++i) b.label(i, transitive_set[static_cast<std::size_t>(i)].to_string());
  return b.build();
}

Structure gen_membership_digraph(const HFSet& code) {
  auto closure = code.closure();
  auto c = code.code();
  return membership_structure(closure, c ? "hf:" + std::to_string(*c) : "hf");
}

std::string graph_relation_name(const Signature& sig, const std::string& fn) {
  static const std::map<std::string, std::string> kNames = {
      {"+", "Add"}, {"*", "Mul"}, {"-", "Sub"}, {"/", "Div"}, {"0", "Zero"}, {"1", "One"}};
  auto idx = sig.function_index(fn);
  if (!idx) throw SemanticError("unknown function symbol " + fn);
  std::string name;
  if (auto it = kNames.find(fn); it != kNames.end()) {
    name = it->second;
  } else {
    name = (sig.functions()[static_cast<std::size_t>(*idx)].arity == 0 ? "Is_" : "Graph_") + fn;
  }
  while (sig.contains(name)) name += "_";
  return name;
}

namespace {
std::mutex g_relational_mutex;
std::unordered_map<std::uint64_t, Structure> g_relational_cache;
}  // namespace

Structure relationalize(const Structure& s) {
  if (s.signature().relational()) return s;
  {
    std::lock_guard lock(g_relational_mutex);
    if (auto it = g_relational_cache.find(s.id()); it != g_relational_cache.end()) return it->second;
  }
  const Signature& sig = s.signature();
  StructureBuilder b(s.name(), s.size());
  for (std::size_t r = 0; r < sig.relations().size(); ++r)
    b.relation(sig.relations()[r].name, sig.relations()[r].arity, s.relation(static_cast<int>(r)).tuples());
  // Names are chosen against the source signature; a graph name could still
  // collide with another graph name, which is resolved by suffixing.
  std::set<std::string> used;
  for (const auto& r : sig.relations()) used.insert(r.name);
  for (std::size_t f = 0; f < sig.functions().size(); ++f) {
    const auto& sym = sig.functions()[f];
    std::string name = graph_relation_name(sig, sym.name);
    while (used.count(name) != 0) name += "_";
    used.insert(name);
    const auto& table = s.function(static_cast<int>(f));
    std::vector<Tuple> tuples;
    tuples.reserve(table.values().size());
    for (std::size_t code = 0; code < table.values().size(); ++code) {
      Tuple t(static_cast<std::size_t>(sym.arity + 1));
      std::size_t rest = code;
      for (int i = sym.arity - 1; i >= 0; --i) {
        t[static_cast<std::size_t>(i)] = static_cast<int>(rest % static_cast<std::size_t>(s.size()));
        rest /= static_cast<std::size_t>(s.size());
      }
      t[static_cast<std::size_t>(sym.arity)] = table.values()[code];
      tuples.push_back(std::move(t));
    }
    b.relation(name, sym.arity + 1, std::move(tuples));
  }
  if (s.has_labels())
    for (int i = 0; i < s.size(); ++i) b.label(i, s.label(i));
  Structure out = b.build();
  std::lock_guard lock(g_relational_mutex);
  return g_relational_cache.emplace(s.id(), out).first->second;
}

}  // namespace defilab
