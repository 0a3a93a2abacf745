#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "defilab/aut.hpp"
#include "defilab/cli.hpp"
#include "defilab/corpus.hpp"
#include "defilab/definability.hpp"
#include "defilab/error.hpp"
#include "defilab/eval.hpp"
#include "defilab/formula.hpp"
#include "defilab/hierarchy.hpp"
#include "defilab/parallel.hpp"
#include "defilab/structure.hpp"

namespace py = pybind11;
using namespace defilab;

namespace {

std::vector<int> to_list(ElementSet s) { return s.elements(); }

std::vector<std::vector<int>> to_lists(const std::vector<ElementSet>& sets) {
  std::vector<std::vector<int>> out;
  for (auto s : sets) out.push_back(s.elements());
  return out;
}

Budget make_budget(std::optional<int> rank, const py::object& params, std::optional<int> max_degree) {
  Budget b;
  b.rank = rank;
  b.max_degree = max_degree;
  if (params.is_none()) {
    b.params_mode = ParamsMode::None;
  } else if (py::isinstance<py::str>(params)) {
    const auto text = params.cast<std::string>();
    if (text == "none") {
      b.params_mode = ParamsMode::None;
    } else if (text == "all") {
      b.params_mode = ParamsMode::All;
    } else {
      throw SemanticError("params must be 'none', 'all' or a list of elements");
    }
  } else {
    b.params_mode = ParamsMode::List;
    b.params = params.cast<std::vector<int>>();
  }
  return b;
}

ExpandedStructure expansion(const Structure& s, const std::map<std::string, std::vector<int>>& subsets) {
  std::vector<NamedSubset> named;
  for (const auto& [name, members] : subsets) named.push_back({name, ElementSet::of(members)});
  return expand(s, std::move(named));
}

Formula parse_in(const Structure& s, const std::string& text, const std::vector<std::string>& predicates) {
  return parse_formula(text, SymbolContext::of(s, predicates));
}

// Brace notation such as "{{},{{}}}".
HFSet parse_hf_at(const std::string& text, std::size_t& pos) {
  auto skip = [&] {
    while (pos < text.size() && text[pos] == ' ') ++pos;
  };
  skip();
  if (pos >= text.size() || text[pos] != '{') throw SemanticError("expected '{' in set notation");
  ++pos;
  std::vector<HFSet> members;
  skip();
  if (pos < text.size() && text[pos] == '}') {
    ++pos;
    return HFSet();
  }
  while (true) {
    members.push_back(parse_hf_at(text, pos));
    skip();
    if (pos < text.size() && text[pos] == ',') {
      ++pos;
      continue;
    }
    if (pos < text.size() && text[pos] == '}') {
      ++pos;
      return HFSet::of(std::move(members));
    }
    throw SemanticError("expected ',' or '}' in set notation");
  }
}

HFSet parse_hf(const std::string& text) {
  std::size_t pos = 0;
  HFSet x = parse_hf_at(text, pos);
  while (pos < text.size() && text[pos] == ' ') ++pos;
  if (pos != text.size()) throw SemanticError("trailing text after set notation");
  return x;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Definability, implicit definability and algebraicity in finite structures";

  auto& base = py::register_exception<Error>(m, "Error");
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<SemanticError>(m, "SemanticError", base.ptr());
  py::register_exception<CapExceeded>(m, "CapExceeded", base.ptr());
  py::register_exception<AnalysisError>(m, "AnalysisError", base.ptr());

  py::class_<Structure>(m, "Structure")
      .def_property_readonly("name", &Structure::name)
      .def_property_readonly("size", &Structure::size)
      .def("label", &Structure::label)
      .def("relation", [](const Structure& s, const std::string& name) {
        auto idx = s.signature().relation_index(name);
        if (!idx) throw SemanticError("unknown relation symbol " + name);
        return s.relation(*idx).tuples();
      })
      .def("relations", [](const Structure& s) {
        std::vector<std::pair<std::string, int>> out;
        for (const auto& r : s.signature().relations()) out.emplace_back(r.name, r.arity);
        return out;
      })
      .def("functions", [](const Structure& s) {
        std::vector<std::pair<std::string, int>> out;
        for (const auto& f : s.signature().functions()) out.emplace_back(f.name, f.arity);
        return out;
      })
      .def("__eq__", [](const Structure& a, const Structure& b) { return a == b; })
      .def("__str__", &print_structure)
      .def("__repr__", [](const Structure& s) { return "<Structure " + s.name() + " size=" + std::to_string(s.size()) + ">"; });

  py::class_<Formula>(m, "Formula")
      .def("__str__", &print_formula)
      .def_property_readonly("quantifier_rank", &quantifier_rank)
      .def_property_readonly("free_variables", &free_variables);

  m.def("load_structure", &load_structure, py::arg("text"));
  m.def("load_source", &load_single, py::arg("spec"));
  m.def("print_structure", &print_structure);
  m.def("linear_order", &gen_linear_order, py::arg("n"));
  m.def("directed_cycle", &gen_directed_cycle, py::arg("n"));
  m.def("finite_field", [](int p, int d) { return gen_finite_field(p, d); }, py::arg("p"), py::arg("d") = 1);
  m.def("membership_digraph", [](std::uint64_t code) { return gen_membership_digraph(HFSet::decode(code)); },
        py::arg("code"));
  m.def("relationalize", &relationalize);
  m.def("small_corpus", &small_corpus, py::arg("max_size") = 6);

  m.def("parse_formula", &parse_in, py::arg("structure"), py::arg("text"),
        py::arg("predicates") = std::vector<std::string>{});
  m.def("print_formula", &print_formula);

  m.def(
      "sat",
      [](const Structure& s, const Formula& f, const Assignment& a, const std::map<std::string, std::vector<int>>& subsets) {
        return sat(expansion(s, subsets), f, a);
      },
      py::arg("structure"), py::arg("formula"), py::arg("assignment") = Assignment{},
      py::arg("subsets") = std::map<std::string, std::vector<int>>{});
  m.def("solution_set", [](const Structure& s, const Formula& f) { return to_list(solution_set(s, f)); });
  m.def(
      "subset_solutions",
      [](const Structure& s, const Formula& psi, const std::string& predicate) {
        return to_lists(subset_solutions(s, psi, predicate));
      },
      py::arg("structure"), py::arg("psi"), py::arg("predicate") = "A");
  m.def(
      "element_partition",
      [](const Structure& s, int k, const std::vector<int>& params) {
        return to_lists(element_partition(relationalize(s), k, params));
      },
      py::arg("structure"), py::arg("k"), py::arg("params") = std::vector<int>{});

  m.def(
      "automorphisms", [](const Structure& s, const std::vector<int>& params) { return automorphisms(s, params).perms; },
      py::arg("structure"), py::arg("params") = std::vector<int>{});
  m.def(
      "orbits", [](const Structure& s, const std::vector<int>& params) { return to_lists(orbits_elements(s, params)); },
      py::arg("structure"), py::arg("params") = std::vector<int>{});
  m.def("is_rigid", &is_rigid);
  m.def("iso_check", &iso_check);

  m.def(
      "classify_elements",
      [](const Structure& s, std::optional<int> rank, const py::object& params, std::optional<int> max_degree,
         bool witnesses) {
        const auto c = classify_elements(s, make_budget(rank, params, max_degree), witnesses);
        py::list out;
        for (const auto& r : c.reports) {
          py::dict d;
          d["element"] = r.element;
          d["degree"] = r.degree;
          d["definable"] = r.definable;
          d["algebraic"] = r.algebraic;
          d["witness"] = r.witness ? py::cast(print_formula(*r.witness)) : py::none();
          out.append(d);
        }
        return out;
      },
      py::arg("structure"), py::arg("rank") = py::none(), py::arg("params") = py::none(),
      py::arg("max_degree") = py::none(), py::arg("witnesses") = false);
  m.def(
      "classify_subsets",
      [](const Structure& s, std::optional<int> rank, const py::object& params, std::optional<int> max_degree,
         bool witnesses) {
        const auto reports = classify_subsets(s, make_budget(rank, params, max_degree), witnesses);
        py::list out;
        for (const auto& r : reports) {
          py::dict d;
          d["subset"] = r.subset.elements();
          d["explicit"] = r.explicit_definable;
          d["implicit"] = r.implicit_definable;
          d["degree"] = r.alg_degree;
          d["algebraic"] = r.algebraic;
          d["explicit_witness"] = r.explicit_witness ? py::cast(print_formula(*r.explicit_witness)) : py::none();
          d["implicit_witness"] = r.implicit_witness ? py::cast(print_formula(*r.implicit_witness)) : py::none();
          out.append(d);
        }
        return out;
      },
      py::arg("structure"), py::arg("rank") = py::none(), py::arg("params") = py::none(),
      py::arg("max_degree") = py::none(), py::arg("witnesses") = false);
  m.def(
      "alg_to_imp",
      [](const Structure& s, const Formula& psi, const std::vector<int>& target, const py::object& params) {
        const auto c = alg_to_imp(s, psi, make_budget(std::nullopt, params, std::nullopt), ElementSet::of(target));
        return py::make_tuple(c.sentence, c.added_params);
      },
      py::arg("structure"), py::arg("psi"), py::arg("target"), py::arg("params") = py::none());
  m.def(
      "pin_elements",
      [](const Structure& s, const Formula& set_def, const Formula& order_def) {
        return pin_elements(s, set_def, order_def);
      },
      py::arg("structure"), py::arg("set_def"), py::arg("order_def"));

  m.def("hf_encode", [](const std::string& text) { return parse_hf(text).ackermann_code(); }, py::arg("braces"));
  m.def("hf_decode", [](std::uint64_t code) { return HFSet::decode(code).to_string(); });
  m.def(
      "hierarchy",
      [](std::uint64_t start, const std::string& op, std::optional<int> rank, const py::object& params, int steps) {
        if (op != "def" && op != "imp") throw SemanticError("op must be 'def' or 'imp'");
        const StageMode mode{op == "def" ? StageOperator::Def : StageOperator::Imp,
                             make_budget(rank, params, std::nullopt)};
        const auto it = iterate(start_stage(HFSet::decode(start)), mode, steps);
        std::vector<std::vector<std::uint64_t>> out;
        for (const auto& st : it.stages) out.push_back(st.codes());
        return out;
      },
      py::arg("start"), py::arg("op") = "def", py::arg("rank") = py::none(), py::arg("params") = py::none(),
      py::arg("steps") = 3);

  m.def("set_threads", &set_thread_count);
  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  });
}
