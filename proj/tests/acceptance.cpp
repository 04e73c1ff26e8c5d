// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "loop2rec/analysis.hpp"
#include "loop2rec/interpreter.hpp"
#include "loop2rec/parser.hpp"
#include "loop2rec/transform.hpp"
#include "loop2rec/verify.hpp"

using namespace loop2rec;

namespace {

struct Outcome {
  bool pass = true;
  std::string note;

  void fail(const std::string& why) {
    if (pass) note = why;
    pass = false;
  }
};

std::string read_corpus(const std::string& name) {
  std::ifstream in(std::string(LOOP2REC_CORPUS_DIR) + "/" + name);
  if (!in) throw std::runtime_error("missing corpus file " + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Program checked(const std::string& text) {
  Program p = parse(text);
  auto errors = check_semantics(p);
  if (!errors.empty()) throw std::runtime_error(errors.front().message);
  return p;
}

std::string literal(double x) {
  std::string s = format_double(std::abs(x));
  return x < 0 ? "-" + s : s;
}

void replace_once(std::string& text, const std::string& from, const std::string& to) {
  size_t at = text.find(from);
  if (at == std::string::npos) throw std::runtime_error("no '" + from + "' to replace");
  text.replace(at, from.size(), to);
}

bool close_to_sqrt(double got, double x) {
  double want = std::sqrt(x);
  if (std::isnan(want)) return std::isnan(got);
  return std::abs(got - want) <= 1e-6;
}

// C1
Outcome golden_sqrt() {
  Outcome o;
  Program out = transform_program(checked(read_corpus("sqrt.mj"))).program;
  if (!structural_eq(out, checked(read_corpus("sqrt_expected.mj"))))
    o.fail("transformed sqrt differs from the expected recursive form");
  return o;
}

// C2
Outcome corpus_inputs() {
  Outcome o;
  const double xs[] = {-1, 0, 1, 2, 4, 9, 16};
  const std::string sqrt_main = "void main() {\n  double r = sqrt(X);\n  print(r);\n}\n";
  for (const char* name : {"sqrt.mj", "sqrt_do.mj", "sqrt_for.mj"}) {
    std::string text = read_corpus(name);
    std::string methods = text.substr(0, text.find("void main()"));
    for (double x : xs) {
      std::string main = sqrt_main;
      replace_once(main, "X", literal(x));
      DiffReport d = diff_run(checked(methods + main));
      std::string where = std::string(name) + " x=" + literal(x);
      if (!d.equivalent()) o.fail(where + ": " + d.detail());
      if (d.original.prints.empty() ||
          !close_to_sqrt(std::strtod(d.original.prints.back().c_str(), nullptr), x))
        o.fail(where + ": wrong root");
    }
  }
  for (const char* name : {"foreach_array.mj", "foreach_list.mj"}) {
    for (double x : xs) {
      std::string text = read_corpus(name);
      replace_once(text, "{4.0, 9.0}", "{" + literal(x) + "}");
      DiffReport d = diff_run(checked(text));
      std::string where = std::string(name) + " x=" + literal(x);
      if (!d.equivalent()) o.fail(where + ": " + d.detail());
      const auto& prints = d.original.prints;
      if (prints.size() != 1) {
        o.fail(where + ": expected one line");
        continue;
      }
      std::string value = prints[0].substr(prints[0].rfind("= ") + 2);
      if (!close_to_sqrt(std::strtod(value.c_str(), nullptr), x))
        o.fail(where + ": wrong root");
    }
  }
  return o;
}

// C3
Outcome zero_trip() {
  Outcome o;
  std::vector<Program> programs{checked(read_corpus("zero_trip.mj"))};
  for (uint64_t seed = 0; programs.size() < 20; ++seed) {
    GenConfig cfg;
    cfg.seed = seed;
    cfg.zero_trip = true;
    Program p = generate(cfg);
    if (contains_loop(p)) programs.push_back(std::move(p));
  }
  for (size_t i = 0; i < programs.size(); ++i) {
    const Program& p = programs[i];
    std::string where = "program " + std::to_string(i);
    TransformResult t = transform_program(p);
    ExecTrace orig = run(p);
    ExecTrace erased = run(erase_loops(p));
    ExecTrace rec = run(t.program);
    std::vector<std::string> fresh;
    auto before = all_identifiers(p);
    for (const auto& id : all_identifiers(t.program))
      if (std::find(before.begin(), before.end(), id) == before.end()) fresh.push_back(id);
    DiffReport a = compare_traces(orig, erased);
    DiffReport b = compare_traces(orig, rec, fresh);
    if (orig.status != RunStatus::Ok) o.fail(where + ": did not finish");
    if (!a.equivalent()) o.fail(where + " vs loops removed: " + a.detail());
    if (!b.equivalent()) o.fail(where + " vs transformed: " + b.detail());
    for (const auto& [id, n] : orig.loop_iterations)
      if (n != 0) o.fail(where + ": loop " + std::to_string(id) + " ran");
    for (const auto& r : t.report) {
      auto it = rec.method_entries.find(r.loop_method_name);
      if (it != rec.method_entries.end() && it->second != 0)
        o.fail(where + ": " + r.loop_method_name + " was entered");
    }
  }
  return o;
}

// C4
Outcome entries_match_iterations() {
  Outcome o;
  const std::vector<std::pair<std::string, std::string>> templates{
      {"while", "void main() { int i = 0; int s = 0; while (i < K) { s = s + i; i = i + 1; } print(s); }"},
      {"do", "void main() { int i = 0; int s = 0; do { s = s + i; i = i + 1; } while (i < K); print(s); }"},
      {"for", "void main() { int s = 0; for (int i = 0; i < K; i++) { s = s + i; } print(s); }"},
      {"foreach array",
       "void main() { int[] a = new int[] {ELEMS}; int s = 0; for (int e : a) { s = s + e; } print(s); }"},
      {"foreach list",
       "void main() { List<int> l = new List<int> {ELEMS}; int s = 0; for (int e : l) { s = s + e; } print(s); }"},
  };
  std::vector<int> ks;
  for (int k = 0; k <= 20; ++k) ks.push_back(k);
  ks.push_back(100);
  for (const auto& [kind, tmpl] : templates) {
    for (int k : ks) {
      // a do-loop always runs once
      if (kind == "do" && k == 0) continue;
      std::string text = tmpl;
      std::string elems;
      for (int i = 0; i < k; ++i) elems += (i ? ", " : "") + std::to_string(i);
      if (text.find('K') != std::string::npos) replace_once(text, "K", std::to_string(k));
      if (text.find("ELEMS") != std::string::npos) replace_once(text, "ELEMS", elems);
      IterationReport r = iteration_call_equality(checked(text));
      std::string where = kind + " k=" + std::to_string(k);
      if (r.loops.size() != 1) {
        o.fail(where + ": expected one loop");
        continue;
      }
      if (r.loops[0].iterations != static_cast<uint64_t>(k) ||
          r.loops[0].entries != static_cast<uint64_t>(k))
        o.fail(where + ": " + std::to_string(r.loops[0].iterations) + " iterations, " +
               std::to_string(r.loops[0].entries) + " entries");
    }
  }
  return o;
}

// C5
Outcome tail_positions() {
  Outcome o;
  int methods = 0;
  auto check = [&](const Program& p, const std::string& where) {
    TransformResult t = transform_program(p);
    for (const auto& r : t.report) {
      const MethodDef* m = t.program.find(r.loop_method_name);
      ++methods;
      if (!m || !tail_position_check(*m)) o.fail(where + ": " + r.loop_method_name);
    }
  };
  for (const char* name :
       {"sqrt.mj", "sqrt_do.mj", "sqrt_for.mj", "foreach_array.mj", "foreach_list.mj",
        "nested.mj", "two_live.mj", "two_index.mj", "one_elem.mj", "loop_free.mj",
        "empty_main.mj", "infinite.mj", "do_false_guard.mj", "zero_trip.mj"})
    check(checked(read_corpus(name)), name);
  for (uint64_t seed = 0; seed < 500; ++seed) {
    GenConfig cfg;
    cfg.seed = seed;
    check(generate(cfg), "seed " + std::to_string(seed));
  }
  if (o.pass) o.note = std::to_string(methods) + " generated methods";
  return o;
}

// C6
Outcome fuzz() {
  Outcome o;
  FuzzSummary s = fuzz_campaign(500, GenConfig{});
  if (s.equivalent != 500) o.fail(std::to_string(s.equivalent) + "/500 equivalent");
  if (s.tail_ok != 500) o.fail("tail check failed");
  if (s.iter_call_ok != 500) o.fail("iteration counts differ");
  if (s.budget_exceeded != 0)
    o.fail(std::to_string(s.budget_exceeded) + " budget exceedances");
  if (o.pass) o.note = "500/500";
  return o;
}

// C7
Outcome mutants() {
  Outcome o;
  std::string counts;
  for (Mutant m : {Mutant::DropForUpdate, Mutant::SwapCondCheck, Mutant::OmitModifiedVar}) {
    FuzzOptions opts;
    opts.budget = 20'000;
    opts.transform.mutant = m;
    FuzzSummary s = fuzz_campaign(500, GenConfig{}, opts);
    counts += std::string(counts.empty() ? "" : ", ") + to_string(m) + " " +
              std::to_string(s.mismatches.size());
    if (s.mismatches.empty()) o.fail(std::string(to_string(m)) + " went unnoticed");
  }
  if (o.pass) o.note = counts;
  return o;
}

// C8
Outcome base_case_states() {
  Outcome o;
  Program p = checked(
      "void main() {\n  double x = 0.0;\n  while (x < 1.0) {\n    x = x + 1.0;\n  }\n}\n");
  TransformResult t = transform_program(p);
  const std::string loop_method = t.report.at(0).loop_method_name;
  const double z0 = 0.0, z1 = 1.0;

  using Check = std::function<bool(const State&)>;
  auto has = [](const Frame& f, double z) {
    const Value* v = f.find("x");
    return v && v->as<double>() && *v->as<double>() == z;
  };
  auto ret_is = [](const Frame& f, double z) {
    return f.ret && f.ret->as<double>() && *f.ret->as<double>() == z;
  };
  struct Expected {
    Rule rule;
    const char* name;
    Check ok;
  };
  const std::vector<Expected> expected{
      {Rule::AddFrame, "s1",
       [&](const State& s) {
         return s.frames.size() == 2 && has(s.frames[0], z0) && has(s.frames[1], z0) &&
                !s.frames[1].ret;
       }},
      {Rule::Assignment, "s2",
       [&](const State& s) {
         return s.frames.size() == 2 && has(s.frames[0], z0) && has(s.frames[1], z1);
       }},
      {Rule::Return, "s3",
       [&](const State& s) {
         return s.frames.size() == 2 && has(s.frames[0], z0) && has(s.frames[1], z1) &&
                ret_is(s.frames[1], z1);
       }},
      {Rule::UpdVr, "s4",
       [&](const State& s) {
         return s.frames.size() == 2 && has(s.frames[0], z1) && has(s.frames[1], z1) &&
                ret_is(s.frames[1], z1);
       }},
      {Rule::RemFrame, "s5",
       [&](const State& s) { return s.frames.size() == 1 && has(s.frames[0], z1); }},
  };

  // Rules between s2 and s3 (the failing guard) leave the state alone.
  size_t next = 0;
  RunOptions ro;
  ro.observer = [&](const TraceEvent& e, const State& s) {
    bool step = (e.rule == Rule::AddFrame && e.depth == 2) || e.rule == Rule::UpdVr ||
                e.rule == Rule::RemFrame ||
                (e.method == loop_method &&
                 (e.rule == Rule::Assignment || e.rule == Rule::Return));
    if (!step || next >= expected.size()) return;
    if (e.rule != expected[next].rule)
      o.fail(std::string("unexpected ") + to_string(e.rule) + " before " +
             expected[next].name);
    else if (!expected[next].ok(s))
      o.fail(std::string(expected[next].name) + " differs");
    ++next;
  };
  ExecTrace rec = run(t.program, ro);
  if (next != expected.size()) o.fail("only " + std::to_string(next) + " of 5 states seen");

  ExecTrace it = run(p);
  const Value* fin = nullptr;
  for (const auto& [n, v] : it.final_bindings)
    if (n == "x") fin = &v;
  if (!fin || !identical(*fin, Value::Double(z1)))
    o.fail("iterative version does not end with x = z1");
  if (!compare_traces(it, rec).equivalent()) o.fail("final states differ");
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double limit_s;  // 0: none
  };
  const std::vector<Criterion> criteria{
      {"C1 golden sqrt transform", golden_sqrt, 1.0},
      {"C2 corpus equivalence on inputs", corpus_inputs, 1.0},
      {"C3 zero-iteration programs", zero_trip, 0},
      {"C4 entries equal iterations", entries_match_iterations, 0},
      {"C5 recursive calls in tail position", tail_positions, 0},
      {"C6 differential fuzzing", fuzz, 60.0},
      {"C7 mutants are caught", mutants, 0},
      {"C8 base-case state sequence", base_case_states, 0},
  };
  bool all = true;
  for (const auto& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_s > 0 && secs >= c.limit_s)
      o.fail("took " + std::to_string(secs) + " s");
    all &= o.pass;
    std::printf("%s %s (%.3f s)%s%s\n", o.pass ? "PASS" : "FAIL", c.name, secs,
                o.note.empty() ? "" : ": ", o.note.c_str());
  }
  return all ? 0 : 1;
}
