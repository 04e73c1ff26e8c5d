#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "loop2rec/analysis.hpp"
#include "loop2rec/interpreter.hpp"
#include "loop2rec/parser.hpp"
#include "loop2rec/transform.hpp"
#include "loop2rec/verify.hpp"

namespace py = pybind11;
using namespace loop2rec;

namespace {

struct SemanticFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parses and checks; front-end problems surface as SourceError.
Program front_end(const std::string& text, const std::string& file) {
  Program p = parse(text);
  auto errors = check_semantics(p);
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "\n") + e.format(file);
    throw SemanticFailure(msg);
  }
  return p;
}

TransformOptions options(bool optimize) {
  TransformOptions o;
  o.optimize = optimize;
  return o;
}

std::string analyze_json(const std::string& text, bool optimize) {
  Program p = front_end(text, "<input>");
  auto sites = collect_loops(p);
  NameSupply names(p);
  AnalysisOptions ao;
  ao.optimize = optimize;
  std::vector<LoopAnalysis> analyses;
  for (const auto& s : sites)
    analyses.push_back(analyze_loop(*s.loop, *s.method, p, names, ao));
  return analyses_to_json(sites, analyses);
}

py::dict run_dict(const std::string& text, uint64_t budget) {
  RunOptions ro;
  ro.budget = budget;
  ExecTrace t = run(front_end(text, "<input>"), ro);
  py::dict d;
  d["status"] = to_string(t.status);
  d["prints"] = t.prints;
  d["steps"] = t.steps;
  d["method_entries"] = t.method_entries;
  d["result"] = t.result ? py::object(py::str(render(*t.result))) : py::object(py::none());
  py::dict bindings;
  for (const auto& [name, value] : t.final_bindings) bindings[py::str(name)] = render(value);
  d["bindings"] = bindings;
  d["error"] = t.error ? py::object(py::str(to_string(*t.error))) : py::object(py::none());
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Loop to tail-recursion transpiler for MiniJava-L";

  py::register_exception<ParseError>(m, "ParseError", PyExc_SyntaxError);
  py::register_exception<SemanticFailure>(m, "SemanticError", PyExc_ValueError);
  py::register_exception<UnsupportedConstruct>(m, "UnsupportedConstruct", PyExc_ValueError);

  m.def("check", [](const std::string& text) {
    std::vector<std::string> out;
    for (const auto& e : check_semantics(parse(text))) out.push_back(e.format("<input>"));
    return out;
  }, py::arg("text"), "Semantic errors of a program, empty when well-formed.");

  m.def("format", [](const std::string& text) { return pretty_print(parse(text)); },
        py::arg("text"), "Canonical pretty-printed form.");

  m.def("transform", [](const std::string& text, bool optimize) {
    return pretty_print(transform_program(front_end(text, "<input>"), options(optimize)).program);
  }, py::arg("text"), py::arg("optimize") = true);

  m.def("analyze_json", &analyze_json, py::arg("text"), py::arg("optimize") = true);

  m.def("run", &run_dict, py::arg("text"), py::arg("budget") = 1'000'000);

  m.def("diff_json", [](const std::string& text, bool optimize, uint64_t budget) {
    return to_json(diff_run(front_end(text, "<input>"), options(optimize), budget));
  }, py::arg("text"), py::arg("optimize") = true, py::arg("budget") = 1'000'000);

  m.def("fuzz_json", [](int n, uint64_t seed, bool optimize, uint64_t budget) {
    if (n < 0) throw py::value_error("n must be non-negative");
    GenConfig g;
    g.seed = seed;
    FuzzOptions fo;
    fo.budget = budget;
    fo.transform = options(optimize);
    py::gil_scoped_release release;
    return to_json(fuzz_campaign(n, g, fo));
  }, py::arg("n") = 500, py::arg("seed") = 0, py::arg("optimize") = true,
     py::arg("budget") = 1'000'000);

  m.def("generate", [](uint64_t seed) {
    GenConfig g;
    g.seed = seed;
    return pretty_print(generate(g));
  }, py::arg("seed"));
}
