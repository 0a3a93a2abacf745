#include "defilab/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <iomanip>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "defilab/aut.hpp"
#include "defilab/caps.hpp"
#include "defilab/corpus.hpp"
#include "defilab/definability.hpp"
#include "defilab/error.hpp"
#include "defilab/eval.hpp"
#include "defilab/formula.hpp"
#include "defilab/hierarchy.hpp"
#include "defilab/parallel.hpp"
#include "defilab/structure.hpp"

namespace defilab::cli {

namespace {

using Json = nlohmann::ordered_json;

class UsageError : public Error {
 public:
  using Error::Error;
};

struct Options {
  std::string source;
  std::vector<std::string> sources;
  std::string rank = "unbounded";
  std::string params = "none";
  std::optional<int> max_degree;
  std::string format = "table";
  bool witnesses = false;
  int steps = 3;
  std::string op = "def";
  std::string formula;
  std::string implicit;
  std::string predicate = "A";
  std::string target;
  std::string assign;
  std::optional<int> element;
  std::string subset;
  std::string set_def;
  std::string order_def;
  std::string direction = "imp-not-def";
  int threads = 1;
};

// ---- argument parsing ----------------------------------------------------

int parse_int(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::logic_error&) {
    throw UsageError("invalid " + what + ": " + text);
  }
}

std::vector<int> parse_int_list(std::string text, const std::string& what) {
  std::erase_if(text, [](char c) { return c == '{' || c == '}' || c == ' '; });
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_int(item, what));
  return out;
}

Budget make_budget(const Options& o, int n) {
  Budget b;
  if (o.rank != "unbounded") {
    b.rank = parse_int(o.rank, "rank");
    if (*b.rank < 0) throw UsageError("rank must be non-negative");
  }
  if (o.params == "none") {
    b.params_mode = ParamsMode::None;
  } else if (o.params == "all") {
    b.params_mode = ParamsMode::All;
  } else {
    b.params_mode = ParamsMode::List;
    b.params = parse_int_list(o.params, "parameter");
    for (int p : b.params)
      if (p < 0 || p >= n) throw UsageError("parameter " + std::to_string(p) + " out of range");
  }
  if (o.max_degree) {
    if (*o.max_degree < 1) throw UsageError("--max-degree must be at least 1");
    b.max_degree = o.max_degree;
  }
  return b;
}

ElementSet parse_subset(const std::string& text, int n) {
  ElementSet s;
  for (int x : parse_int_list(text, "element")) {
    if (x < 0 || x >= n) throw UsageError("element " + std::to_string(x) + " out of range");
    s.insert(x);
  }
  return s;
}

Json set_json(ElementSet s) {
  Json a = Json::array();
  for (int x : s.elements()) a.push_back(x);
  return a;
}

Json structure_json(const Structure& s) { return Json{{"name", s.name()}, {"size", s.size()}}; }

Json budget_json(const Budget& b, int n, std::optional<int> certified = std::nullopt) {
  Json j;
  j["rank"] = b.rank_text();
  j["effective_rank"] = b.effective_rank(n);
  j["params"] = b.params_text();
  j["param_elements"] = b.resolve_params(n);
  j["max_degree"] = b.degree_cap(n);
  if (!b.rank) {
    j["orbit_certified"] = certified.has_value();
    j["certified_rank"] = certified ? Json(*certified) : Json(nullptr);
  }
  return j;
}

std::string budget_text(const Budget& b, int n, std::optional<int> certified = std::nullopt) {
  std::string s = "budget: rank " + b.rank_text();
  if (!b.rank) {
    s += " (k* = " + std::to_string(n + 1);
    s += certified ? ", orbit partition certified at rank " + std::to_string(*certified) : ", orbit partition not certified";
    s += ")";
  }
  s += ", params " + b.params_text() + ", max degree " + std::to_string(b.degree_cap(n));
  return s;
}

std::string yes(bool b) { return b ? "yes" : "no"; }

std::string label_of(const Structure& s, int x) { return s.has_labels() ? s.label(x) : std::to_string(x); }

class Table {
 public:
  explicit Table(std::vector<std::string> header) { rows_.push_back(std::move(header)); }
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }
  void print(std::ostream& out) const {
    std::vector<std::size_t> width;
    for (const auto& r : rows_)
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (width.size() <= i) width.push_back(0);
        width[i] = std::max(width[i], r[i].size());
      }
    for (const auto& r : rows_) {
      std::string line;
      for (std::size_t i = 0; i < r.size(); ++i) {
        line += r[i];
        if (i + 1 < r.size()) line += std::string(width[i] - r[i].size() + 2, ' ');
      }
      out << line << "\n";
    }
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

Json header(const std::string& command) { return Json{{"schema_version", kSchemaVersion}, {"command", command}}; }

void emit(const Options& o, std::ostream& out, const Json& j) {
  if (o.format == "json") out << j.dump(2) << "\n";
}

Formula parse_for(const Structure& s, const std::string& text, std::vector<std::string> predicates = {}) {
  return parse_formula(text, SymbolContext::of(s, std::move(predicates)));
}

// ---- subcommands --------------------------------------------------------

void cmd_show(const Options& o, std::ostream& out) {
  const Structure s = load_single(o.source);
  if (o.format != "json") {
    out << print_structure(s);
    return;
  }
  Json j = header("show");
  j["structure"] = structure_json(s);
  Json rels = Json::array();
  const auto& sig = s.signature();
  for (std::size_t r = 0; r < sig.relations().size(); ++r)
    rels.push_back({{"name", sig.relations()[r].name},
                    {"arity", sig.relations()[r].arity},
                    {"tuples", s.relation(static_cast<int>(r)).tuples()}});
  j["relations"] = rels;
  Json fns = Json::array();
  for (std::size_t f = 0; f < sig.functions().size(); ++f)
    fns.push_back({{"name", sig.functions()[f].name},
                   {"arity", sig.functions()[f].arity},
                   {"values", s.function(static_cast<int>(f)).values()}});
  j["functions"] = fns;
  if (s.has_labels()) {
    Json labels = Json::array();
    for (int i = 0; i < s.size(); ++i) labels.push_back(s.label(i));
    j["labels"] = labels;
  }
  emit(o, out, j);
}

void cmd_aut(const Options& o, std::ostream& out) {
  const Structure s = load_single(o.source);
  const Budget b = make_budget(o, s.size());
  const auto params = b.resolve_params(s.size());
  const auto group = automorphisms(s, params);
  const auto orbit_blocks = orbits(group);
  if (o.format == "json") {
    Json j = header("aut");
    j["structure"] = structure_json(s);
    j["params"] = params;
    j["order"] = group.size();
    j["rigid"] = group.size() == 1;
    j["automorphisms"] = group.perms;
    Json ob = Json::array();
    for (auto blk : orbit_blocks) ob.push_back(set_json(blk));
    j["orbits"] = ob;
    emit(o, out, j);
    return;
  }
  out << "structure " << s.name() << " (" << s.size() << " elements), params " << b.params_text() << "\n";
  out << "group order: " << group.size() << (group.size() == 1 ? " (rigid)" : "") << "\n";
  for (const auto& p : group.perms) {
    out << "  [";
    for (std::size_t i = 0; i < p.size(); ++i) out << (i ? " " : "") << p[i];
    out << "]\n";
  }
  out << "orbits:";
  for (auto blk : orbit_blocks) out << " " << blk.to_string();
  out << "\n";
}

Json element_json(const Structure& s, const ElementReport& r) {
  Json j{{"element", r.element}};
  if (s.has_labels()) j["label"] = s.label(r.element);
  j["degree"] = r.degree;
  j["definable"] = r.definable;
  j["algebraic"] = r.algebraic;
  if (r.witness) {
    j["witness"] = print_formula(*r.witness);
    j["witness_rank"] = *r.witness_rank;
  }
  return j;
}

void cmd_elements(const Options& o, std::ostream& out) {
  const Structure s = load_single(o.source);
  const Budget b = make_budget(o, s.size());
  const auto c = classify_elements(s, b, o.witnesses);
  ElementSet dc;
  int max_degree = 1;
  for (const auto& r : c.reports) {
    if (r.definable) dc.insert(r.element);
    max_degree = std::max(max_degree, r.degree);
  }
  const bool pointwise = dc == ElementSet::full(s.size());
  if (o.format == "json") {
    Json j = header("elements");
    j["structure"] = structure_json(s);
    j["budget"] = budget_json(b, s.size(), c.certified_rank);
    Json reports = Json::array();
    for (const auto& r : c.reports) reports.push_back(element_json(s, r));
    j["elements"] = reports;
    j["dcl"] = set_json(dc);
    j["pointwise_definable"] = pointwise;
    j["pointwise_algebraic_degree"] = max_degree;
    emit(o, out, j);
    return;
  }
  out << "structure " << s.name() << " (" << s.size() << " elements)\n" << budget_text(b, s.size(), c.certified_rank) << "\n";
  std::vector<std::string> head{"element", "label", "degree", "definable", "algebraic"};
  if (o.witnesses) head.push_back("witness");
  Table t(head);
  for (const auto& r : c.reports) {
    std::vector<std::string> row{std::to_string(r.element), label_of(s, r.element), std::to_string(r.degree),
                                 yes(r.definable), yes(r.algebraic)};
    if (o.witnesses) row.push_back(r.witness ? print_formula(*r.witness) : "-");
    t.add(row);
  }
  t.print(out);
  out << "dcl = " << dc.to_string() << "\n";
  out << "pointwise definable: " << yes(pointwise) << "; pointwise algebraic degree " << max_degree << "\n";
}

Json subset_json(const SubsetReport& r) {
  Json j{{"subset", set_json(r.subset)},
         {"explicit", r.explicit_definable},
         {"implicit", r.implicit_definable},
         {"degree", r.alg_degree},
         {"algebraic", r.algebraic}};
  if (r.explicit_witness) j["explicit_witness"] = print_formula(*r.explicit_witness);
  if (r.implicit_witness) j["implicit_witness"] = print_formula(*r.implicit_witness);
  return j;
}

void cmd_subsets(const Options& o, std::ostream& out) {
  const Structure s = load_single(o.source);
  const Budget b = make_budget(o, s.size());
  const auto reports = classify_subsets(s, b, o.witnesses);
  std::optional<int> certified;
  if (!b.rank) certified = classify_elements(s, b).certified_rank;
  std::size_t n_def = 0;
  std::size_t n_imp = 0;
  std::size_t n_alg = 0;
  for (const auto& r : reports) {
    n_def += r.explicit_definable ? 1 : 0;
    n_imp += r.implicit_definable ? 1 : 0;
    n_alg += r.algebraic ? 1 : 0;
  }
  if (o.format == "json") {
    Json j = header("subsets");
    j["structure"] = structure_json(s);
    j["budget"] = budget_json(b, s.size(), certified);
    Json arr = Json::array();
    for (const auto& r : reports) arr.push_back(subset_json(r));
    j["subsets"] = arr;
    j["summary"] = {{"total", reports.size()}, {"explicit", n_def}, {"implicit", n_imp}, {"algebraic", n_alg}};
    emit(o, out, j);
    return;
  }
  out << "structure " << s.name() << " (" << s.size() << " elements)\n" << budget_text(b, s.size(), certified) << "\n";
  std::vector<std::string> head{"subset", "explicit", "implicit", "degree", "algebraic"};
  if (o.witnesses) head.insert(head.end(), {"explicit witness", "implicit witness"});
  Table t(head);
  for (const auto& r : reports) {
    std::vector<std::string> row{r.subset.to_string(), yes(r.explicit_definable), yes(r.implicit_definable),
                                 std::to_string(r.alg_degree), yes(r.algebraic)};
    if (o.witnesses) {
      row.push_back(r.explicit_witness ? print_formula(*r.explicit_witness) : "-");
      row.push_back(r.implicit_witness ? print_formula(*r.implicit_witness) : "-");
    }
    t.add(row);
  }
  t.print(out);
  out << "P_def: " << n_def << ", P_imp: " << n_imp << ", P_alg (degree <= " << b.degree_cap(s.size()) << "): " << n_alg
      << " of " << reports.size() << " subsets\n";
}

void cmd_check(const Options& o, std::ostream& out) {
  const Structure s = load_single(o.source);
  const Budget b = make_budget(o, s.size());
  if (o.formula.empty() == o.implicit.empty()) throw UsageError("check needs exactly one of --formula or --implicit");
  Json j = header("check");
  j["structure"] = structure_json(s);
  std::ostringstream text;
  if (!o.formula.empty()) {
    const Formula f = parse_for(s, o.formula);
    const auto vars = free_variables(f);
    j["formula"] = print_formula(f);
    j["quantifier_rank"] = quantifier_rank(f);
    j["free_variables"] = vars;
    text << "formula: " << print_formula(f) << " (rank " << quantifier_rank(f) << ")\n";
    if (!o.assign.empty() || vars.empty()) {
      Assignment a;
      std::stringstream ss(o.assign);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("--assign expects var=element pairs");
        a[item.substr(0, eq)] = parse_int(item.substr(eq + 1), "element");
      }
      const bool v = sat(s, f, a);
      j["value"] = v;
      text << "value: " << (v ? "true" : "false") << "\n";
    } else if (vars.size() == 1) {
      const ElementSet sol = solution_set(s, f);
      j["solution_set"] = set_json(sol);
      text << "solution set: " << sol.to_string() << "\n";
    } else {
      throw UsageError("formula has several free variables; give --assign");
    }
  } else {
    const Formula psi = parse_for(s, o.implicit, {o.predicate});
    const auto sols = subset_solutions(s, psi, o.predicate, b.resolve_params(s.size()));
    j["sentence"] = print_formula(psi);
    Json arr = Json::array();
    for (auto x : sols) arr.push_back(set_json(x));
    j["solutions"] = arr;
    j["solution_count"] = sols.size();
    text << "sentence: " << print_formula(psi) << "\nsolutions (" << sols.size() << "):";
    for (auto x : sols) text << " " << x.to_string();
    text << "\n";
    if (!o.target.empty()) {
      const ElementSet target = parse_subset(o.target, s.size());
      const bool is_solution = std::find(sols.begin(), sols.end(), target) != sols.end();
      j["target"] = set_json(target);
      j["target_is_solution"] = is_solution;
      j["implicitly_defines_target"] = is_solution && sols.size() == 1;
      text << "target " << target.to_string() << ": " << (is_solution ? "solution" : "not a solution")
           << (is_solution && sols.size() == 1 ? ", implicitly defined" : "") << "\n";
    }
  }
  if (o.format == "json") {
    emit(o, out, j);
  } else {
    out << text.str();
  }
}

void cmd_witness(const Options& o, std::ostream& out) {
  const Structure s = load_single(o.source);
  const Budget b = make_budget(o, s.size());
  if (o.element.has_value() == !o.subset.empty()) throw UsageError("witness needs exactly one of --element or --subset");
  Json j = header("witness");
  j["structure"] = structure_json(s);
  if (o.element) {
    if (*o.element < 0 || *o.element >= s.size()) throw UsageError("element out of range");
    const auto c = classify_elements(s, b, true);
    const auto& r = c.reports[static_cast<std::size_t>(*o.element)];
    j["budget"] = budget_json(b, s.size(), c.certified_rank);
    j["report"] = element_json(s, r);
    if (o.format == "json") return emit(o, out, j);
    out << budget_text(b, s.size(), c.certified_rank) << "\n";
    out << "element " << r.element << " degree " << r.degree << (r.definable ? " (definable)" : "") << "\n";
    out << "witness: " << (r.witness ? print_formula(*r.witness) : "-") << "\n";
    return;
  }
  const ElementSet a = parse_subset(o.subset, s.size());
  const auto r = classify_subset(s, b, a, true);
  std::optional<int> certified;
  if (!b.rank) certified = classify_elements(s, b).certified_rank;
  j["budget"] = budget_json(b, s.size(), certified);
  j["report"] = subset_json(r);
  if (o.format == "json") return emit(o, out, j);
  out << budget_text(b, s.size(), certified) << "\n";
  out << "subset " << r.subset.to_string() << ": explicit " << yes(r.explicit_definable) << ", implicit "
      << yes(r.implicit_definable) << ", degree " << r.alg_degree << "\n";
  out << "explicit witness: " << (r.explicit_witness ? print_formula(*r.explicit_witness) : "-") << "\n";
  out << "implicit witness: " << (r.implicit_witness ? print_formula(*r.implicit_witness) : "-") << "\n";
}

void cmd_convert(const Options& o, std::ostream& out) {
  const Structure s = load_single(o.source);
  const Budget b = make_budget(o, s.size());
  if (o.implicit.empty() || o.target.empty()) throw UsageError("convert needs --implicit and --target");
  const Formula psi = parse_for(s, o.implicit, {o.predicate});
  const ElementSet target = parse_subset(o.target, s.size());
  const auto c = alg_to_imp(s, psi, b, target, o.predicate);
  if (o.format == "json") {
    Json j = header("convert");
    j["structure"] = structure_json(s);
    j["budget"] = budget_json(b, s.size());
    // conversion enumerates solutions directly; no type partition is involved
    j["budget"].erase("orbit_certified");
    j["budget"].erase("certified_rank");
    j["sentence"] = print_formula(psi);
    Json sols = Json::array();
    for (auto x : c.original_solutions) sols.push_back(set_json(x));
    j["original_solutions"] = sols;
    j["target"] = set_json(target);
    j["added_params"] = c.added_params;
    j["converted"] = print_formula(c.sentence);
    return emit(o, out, j);
  }
  out << "solutions of the original sentence: " << c.original_solutions.size() << "\n";
  out << "added parameters:";
  for (int p : c.added_params) out << " @" << p;
  out << (c.added_params.empty() ? " none" : "") << "\n";
  out << "converted: " << print_formula(c.sentence) << "\n";
}

void cmd_pin(const Options& o, std::ostream& out) {
  const Structure s = load_single(o.source);
  const Budget b = make_budget(o, s.size());
  if (o.set_def.empty() || o.order_def.empty()) throw UsageError("pin needs --set and --order");
  const Formula set_def = parse_for(s, o.set_def);
  const Formula order_def = parse_for(s, o.order_def);
  const auto pins = pin_elements(s, set_def, order_def, b.resolve_params(s.size()));
  if (o.format == "json") {
    Json j = header("pin");
    j["structure"] = structure_json(s);
    Json arr = Json::array();
    for (std::size_t i = 0; i < pins.size(); ++i)
      arr.push_back({{"position", i}, {"element", pins[i].first}, {"formula", print_formula(pins[i].second)}});
    j["pins"] = arr;
    return emit(o, out, j);
  }
  for (std::size_t i = 0; i < pins.size(); ++i)
    out << i << ": element " << pins[i].first << "  " << print_formula(pins[i].second) << "\n";
}

Json iteration_json(const Iteration& it) {
  Json stages = Json::array();
  for (std::size_t i = 0; i < it.stages.size(); ++i) {
    Json st{{"index", it.stages[i].index}, {"size", it.stages[i].extent.size()}, {"codes", it.stages[i].codes()}};
    if (i < it.levels.size()) {
      st["level"] = it.levels[i].level;
      st["equals_level"] = it.levels[i].equal;
      st["within_level"] = it.levels[i].within;
    }
    stages.push_back(st);
  }
  Json j{{"stages", stages}, {"complete", it.complete}};
  if (!it.complete) j["stopped"] = it.stopped;
  return j;
}

void iteration_text(const std::string& op, const Iteration& it, std::ostream& out) {
  out << "operator " << op << "\n";
  bool all_equal = it.levels.size() == it.stages.size();
  for (std::size_t i = 0; i < it.stages.size(); ++i) {
    out << "  stage " << it.stages[i].index << ": " << it.stages[i].extent.size() << " sets";
    if (i < it.levels.size()) {
      const auto& l = it.levels[i];
      out << (l.equal ? " = V_" : (l.within ? " within V_" : " not within V_")) << l.level;
      all_equal = all_equal && l.equal;
    }
    out << "\n";
  }
  if (!it.complete) out << "  stopped: " << it.stopped << "\n";
  out << "  " << (all_equal ? "no divergence from V_n" : "diverges from V_n") << "\n";
}

void cmd_hierarchy(const Options& o, std::ostream& out) {
  if (o.source.rfind("hf:", 0) != 0) throw UsageError("hierarchy needs an hf:<code> start");
  const HFSet start_set = hf_decode(std::stoull(o.source.substr(3)));
  const Stage start = start_stage(start_set);
  const Budget b = make_budget(o, static_cast<int>(start.extent.size()));
  if (o.steps < 0) throw UsageError("--steps must be non-negative");
  std::vector<std::pair<std::string, StageOperator>> ops;
  if (o.op == "def" || o.op == "both") ops.emplace_back("def", StageOperator::Def);
  if (o.op == "imp" || o.op == "both") ops.emplace_back("imp", StageOperator::Imp);
  if (ops.empty()) throw UsageError("--op must be def, imp or both");
  std::vector<Iteration> runs;
  for (const auto& [name, op] : ops) runs.push_back(iterate(start, {op, b}, o.steps));
  std::optional<int> divergence;
  if (runs.size() == 2) divergence = first_divergence(runs[0], runs[1]);
  if (o.format == "json") {
    Json j = header("hierarchy");
    j["start"] = {{"code", start_set.ackermann_code()}, {"set", start_set.to_string()}};
    j["budget"] = {{"rank", b.rank_text()}, {"params", b.params_text()}};
    j["steps"] = o.steps;
    Json r = Json::object();
    for (std::size_t i = 0; i < runs.size(); ++i) r[ops[i].first] = iteration_json(runs[i]);
    j["runs"] = r;
    if (runs.size() == 2) j["def_imp_divergence"] = divergence ? Json(*divergence) : Json(nullptr);
    return emit(o, out, j);
  }
  out << "start " << start_set.to_string() << " (code " << start_set.ackermann_code() << "), rank " << b.rank_text()
      << ", params " << b.params_text() << "\n";
  for (std::size_t i = 0; i < runs.size(); ++i) iteration_text(ops[i].first, runs[i], out);
  if (runs.size() == 2)
    out << (divergence ? "def and imp diverge at stage " + std::to_string(*divergence) : "no def/imp divergence")
        << "\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& last = runs[i].stages.back();
    out << "final " << ops[i].first << " stage " << last.index << ":\n" << dump_stage(last);
  }
}

void cmd_gap(const Options& o, std::ostream& out) {
  if (o.rank == "unbounded") throw UsageError("gap needs a finite --rank");
  const int k = parse_int(o.rank, "rank");
  if (k < 0) throw UsageError("rank must be non-negative");
  GapDirection dir;
  if (o.direction == "imp-not-def") {
    dir = GapDirection::ImplicitNotExplicit;
  } else if (o.direction == "def-not-imp") {
    dir = GapDirection::ExplicitNotImplicit;
  } else {
    throw UsageError("--direction must be imp-not-def or def-not-imp");
  }
  std::vector<Structure> corpus;
  for (const auto& src : o.sources)
    for (auto& s : load_source(src)) corpus.push_back(std::move(s));
  const auto report = search_gap(corpus, k, dir);
  if (o.format == "json") {
    Json j = header("gap");
    j["rank"] = k;
    j["direction"] = o.direction;
    j["params"] = "none";
    j["searched"] = report.searched;
    j["skipped"] = report.skipped;
    Json arr = Json::array();
    for (const auto& e : report.entries)
      arr.push_back({{"structure", e.structure}, {"subset", set_json(e.subset)}, {"degree", e.alg_degree}});
    j["entries"] = arr;
    return emit(o, out, j);
  }
  out << "gap search (" << o.direction << ") at rank " << k << ", params none, " << report.searched.size()
      << " structures searched";
  if (!report.skipped.empty()) out << ", " << report.skipped.size() << " skipped over the subset cap";
  out << "\n";
  if (report.entries.empty()) out << "no witnesses\n";
  for (const auto& e : report.entries)
    out << "  " << e.structure << "  " << e.subset.to_string() << "  degree " << e.alg_degree << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Definability, implicit definability and algebraicity in finite structures", "defilab"};
  app.require_subcommand(1);
  app.add_option("--threads", o.threads, "Worker threads for the parallel paths")->check(CLI::Range(1, 256));

  auto budget_flags = [&](CLI::App* sub) {
    sub->add_option("--rank", o.rank, "Quantifier rank bound or 'unbounded'");
    sub->add_option("--params", o.params, "none, all or a list i,j,...");
    sub->add_option("--max-degree", o.max_degree, "Degree cap m for algebraicity");
  };
  auto common = [&](CLI::App* sub, bool budget) {
    sub->add_option("source", o.source, "Structure file or generator (linord:n, cycle:n, gf:p,d, hf:code, set:n)")
        ->required();
    sub->add_option("--format", o.format, "table or json")->check(CLI::IsMember({"table", "json"}));
    sub->add_option("--threads", o.threads, "Worker threads for the parallel paths")->check(CLI::Range(1, 256));
    if (budget) budget_flags(sub);
  };

  struct Entry {
    CLI::App* app;
    void (*fn)(const Options&, std::ostream&);
  };
  std::vector<Entry> entries;
  auto add = [&](const char* name, const char* help, void (*fn)(const Options&, std::ostream&), bool budget) {
    CLI::App* sub = app.add_subcommand(name, help);
    common(sub, budget);
    entries.push_back({sub, fn});
    return sub;
  };

  add("show", "Print a structure", cmd_show, false);
  add("aut", "Automorphism group and orbits", cmd_aut, false)->add_option("--params", o.params, "none, all or i,j,...");
  add("elements", "Classify elements", cmd_elements, true)->add_flag("--witnesses", o.witnesses, "Synthesize witnesses");
  add("subsets", "Classify subsets", cmd_subsets, true)->add_flag("--witnesses", o.witnesses, "Synthesize witnesses");
  {
    CLI::App* sub = add("check", "Evaluate a formula or an implicit definition", cmd_check, true);
    sub->add_option("--formula", o.formula, "Formula to evaluate");
    sub->add_option("--assign", o.assign, "Assignment var=element,...");
    sub->add_option("--implicit", o.implicit, "Implicit definition psi(A)");
    sub->add_option("--predicate", o.predicate, "Subset predicate of the implicit definition");
    sub->add_option("--target", o.target, "Target subset, e.g. {0,2}");
  }
  {
    CLI::App* sub = add("witness", "Synthesize a defining formula", cmd_witness, true);
    sub->add_option("--element", o.element, "Element to define");
    sub->add_option("--subset", o.subset, "Subset to define, e.g. {0,2}");
  }
  {
    CLI::App* sub = add("convert", "Turn an algebraic definition into an implicit one", cmd_convert, true);
    sub->add_option("--implicit", o.implicit, "Sentence psi(A)");
    sub->add_option("--predicate", o.predicate, "Subset predicate of the sentence");
    sub->add_option("--target", o.target, "Target solution");
  }
  {
    CLI::App* sub = add("pin", "Define each element of a definable set via a definable order", cmd_pin, true);
    sub->add_option("--set", o.set_def, "Formula with one free variable");
    sub->add_option("--order", o.order_def, "Strict order with two free variables");
  }
  {
    CLI::App* sub = add("hierarchy", "Iterate the DEF/IMP stage operators", cmd_hierarchy, true);
    sub->add_option("--steps", o.steps, "Number of steps");
    sub->add_option("--op", o.op, "def, imp or both")->check(CLI::IsMember({"def", "imp", "both"}));
  }
  CLI::App* gap = app.add_subcommand("gap", "Search a corpus for implicit-but-not-explicit subsets");
  gap->add_option("sources", o.sources, "Structure sources")->required();
  gap->add_option("--rank", o.rank, "Quantifier rank")->required();
  gap->add_option("--direction", o.direction, "imp-not-def or def-not-imp");
  gap->add_option("--format", o.format, "table or json")->check(CLI::IsMember({"table", "json"}));
  gap->add_option("--threads", o.threads, "Worker threads for the parallel paths")->check(CLI::Range(1, 256));
  entries.push_back({gap, cmd_gap});

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const int previous_threads = thread_count();
  set_thread_count(o.threads);
  int code = kExitOk;
  try {
    for (const auto& entry : entries)
      if (entry.app->parsed()) entry.fn(o, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    code = kExitUsage;
  } catch (const CapExceeded& e) {
    err << "cap exceeded: " << e.what() << "\n";
    code = kExitCap;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    code = kExitAnalysis;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    code = kExitAnalysis;
  }
  set_thread_count(previous_threads);
  return code;
}

}  // namespace defilab::cli
