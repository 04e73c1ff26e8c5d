#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <set>

#include "doctest.h"
#include "loop2rec/analysis.hpp"
#include "loop2rec/interpreter.hpp"
#include "loop2rec/parser.hpp"
#include "loop2rec/transform.hpp"
#include "loop2rec/verify.hpp"
#include "support.hpp"

using namespace loop2rec;

namespace {

Frame frame(std::vector<std::pair<std::string, Value>> bindings) {
  Frame f;
  f.bindings = std::move(bindings);
  return f;
}

double dbl(const Value* v) {
  REQUIRE(v);
  REQUIRE(v->as<double>());
  return *v->as<double>();
}

ErrorKind error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const RuntimeError& e) {
    return e.kind();
  }
  FAIL("no runtime error");
  return ErrorKind::EmptyState;
}

// Initializer of `T t = <text>;` checked against the given declarations.
ExprPtr expr(const std::string& decls, const std::string& type,
             const std::string& text) {
  Program p = parse("void main() { " + decls + " " + type + " t = " + text + "; }");
  REQUIRE(check_semantics(p).empty());
  return p.methods[0].body.back()->as<VarDecl>()->init;
}

std::string eval_text(const std::string& type, const std::string& text) {
  State s;
  s.frames.push_back(Frame{});
  return render(eval_expr(*expr("", type, text), s));
}

ExecTrace run_text(const std::string& text, uint64_t budget = 1'000'000) {
  Program p = parse(text);
  auto errors = check_semantics(p);
  REQUIRE_MESSAGE(errors.empty(), (errors.empty() ? "" : errors[0].message));
  RunOptions ro;
  ro.budget = budget;
  return run(p, ro);
}

uint64_t bits(double d) {
  uint64_t u;
  std::memcpy(&u, &d, sizeof u);
  return u;
}

}  // namespace

TEST_SUITE("interpreter") {
  TEST_CASE("upd_v") {
    State s;
    s.frames.push_back(frame({{"x", Value::Int(1)}}));
    upd_v(s, "x", Value::Int(2));
    CHECK(*s.frames[0].find("x")->as<int32_t>() == 2);

    State empty;
    CHECK(error_of([&] { upd_v(empty, "x", Value::Int(2)); }) == ErrorKind::EmptyState);

    State two;
    two.frames.push_back(frame({{"x", Value::Int(1)}}));
    two.frames.push_back(frame({{"x", Value::Int(5)}}));
    upd_v(two, "x", Value::Int(9));
    CHECK(*two.frames[0].find("x")->as<int32_t>() == 1);
    CHECK(*two.frames[1].find("x")->as<int32_t>() == 9);
  }

  TEST_CASE("upd_r") {
    State s;
    s.frames.push_back(frame({{"b", Value::Double(2.0)}}));
    upd_r(s, Value::Double(2.0));
    REQUIRE(s.frames[0].ret);
    CHECK(dbl(&*s.frames[0].ret) == 2.0);

    State empty;
    CHECK(error_of([&] { upd_r(empty, Value::Int(1)); }) == ErrorKind::EmptyState);

    State two;
    two.frames.push_back(Frame{});
    two.frames.push_back(Frame{});
    upd_r(two, Value::Int(3));
    CHECK_FALSE(two.frames[0].ret);
    CHECK(two.frames[1].ret);
  }

  TEST_CASE("upd_vr") {
    const double z0 = 4.0, z1 = 2.5;
    State s;
    s.frames.push_back(frame({{"x", Value::Double(z0)}}));
    s.frames.push_back(frame({{"x", Value::Double(z1)}}));
    s.frames[1].ret = Value::Double(z1);
    upd_vr(s, "x");
    CHECK(dbl(s.frames[0].find("x")) == z1);
    CHECK(dbl(s.frames[1].find("x")) == z1);

    State one;
    one.frames.push_back(Frame{});
    CHECK(error_of([&] { upd_vr(one, "x"); }) == ErrorKind::SingleFrame);
    State none;
    CHECK(error_of([&] { upd_vr(none, "x"); }) == ErrorKind::EmptyState);

    State unset;
    unset.frames.push_back(Frame{});
    unset.frames.push_back(Frame{});
    CHECK(error_of([&] { upd_vr(unset, "x"); }) == ErrorKind::MissingReturn);

    // absent in the penultimate frame: created there
    State fresh;
    fresh.frames.push_back(Frame{});
    fresh.frames.push_back(Frame{});
    fresh.frames[1].ret = Value::Int(7);
    upd_vr(fresh, "y");
    REQUIRE(fresh.frames[0].find("y"));
    CHECK(*fresh.frames[0].find("y")->as<int32_t>() == 7);
  }

  TEST_CASE("add_frame and rem_frame") {
    State s;
    s.frames.push_back(frame({{"x", Value::Double(4.0)}, {"b", Value::Double(4.0)}}));
    std::vector<Param> params{{"x", Type::Double()}, {"b", Type::Double()}};
    add_frame(s, params, ExprList{var("x"), var("b")}, "sqrt_loop");
    REQUIRE(s.frames.size() == 2);
    CHECK(dbl(s.frames[1].find("x")) == 4.0);
    CHECK(dbl(s.frames[1].find("b")) == 4.0);

    // callee writes stay in the callee
    upd_v(s, "b", Value::Double(2.5));
    CHECK(dbl(s.frames[0].find("b")) == 4.0);

    add_frame(s, {}, std::vector<Value>{});
    CHECK(s.frames.back().bindings.empty());
    CHECK(error_of([&] { add_frame(s, params, std::vector<Value>{Value::Int(1)}); }) ==
          ErrorKind::ArityMismatch);

    rem_frame(s);
    rem_frame(s);
    CHECK(s.frames.size() == 1);
    rem_frame(s);
    CHECK(s.frames.empty());
    CHECK(error_of([&] { rem_frame(s); }) == ErrorKind::EmptyState);
  }

  TEST_CASE("expressions") {
    State s;
    s.frames.push_back(frame({{"x", Value::Double(4.0)}, {"b", Value::Double(2.0)}}));
    CHECK(*eval_expr(*expr("double x = 4.0; double b = 2.0;", "boolean",
                           "abs(b * b - x) > 1e-12"),
                     s)
               .as<bool>() == false);
    CHECK(dbl(&s.frames[0].bindings[0].second) == 4.0);
    s.frames[0].bindings[1].second = Value::Double(4.0);
    Value step = eval_expr(
        *expr("double x = 4.0; double b = 4.0;", "double", "((x / b) + b) / 2.0"), s);
    CHECK(dbl(&step) == 2.5);
  }

  TEST_CASE("arithmetic follows Java") {
    CHECK(eval_text("int", "2147483647 + 1") == "-2147483648");
    CHECK(eval_text("int", "-7 / 2") == "-3");
    CHECK(eval_text("int", "(int) 3.9") == "3");
    CHECK(eval_text("int", "(int) -3.9") == "-3");
    CHECK(eval_text("int", "(int) nan()") == "0");
    CHECK(eval_text("int", "(int) (1.0 / 0.0)") == "2147483647");
    CHECK(eval_text("double", "1.0 / 0.0") == "Infinity");
    CHECK(eval_text("double", "-1.0 / 0.0") == "-Infinity");
    CHECK(eval_text("double", "0.0 / 0.0") == "NaN");
    CHECK(eval_text("double", "abs(-2.5)") == "2.5");
    CHECK(eval_text("int", "abs(-3)") == "3");
    CHECK(eval_text("boolean", "nan() == nan()") == "false");
    CHECK(eval_text("boolean", "false && 1 / 0 == 0") == "false");
    State s;
    s.frames.push_back(Frame{});
    CHECK(error_of([&] { eval_expr(*expr("", "int", "1 / 0"), s); }) ==
          ErrorKind::DivisionByZero);
    CHECK(error_of([&] { eval_expr(*expr("", "int", "new int[] {1}[1]"), s); }) ==
          ErrorKind::IndexOutOfBounds);
    CHECK(error_of([&] { eval_expr(*var("nope"), s); }) == ErrorKind::UnboundVariable);
  }

  TEST_CASE("rendering") {
    CHECK(render(Value::Int(-4)) == "-4");
    CHECK(render(Value::Double(2.0)) == "2");
    CHECK(render(Value::Double(0.1)) == "0.1");
    CHECK(render(Value::Double(-0.0)) == "-0");
    CHECK(render(Value::Bool(true)) == "true");
    CHECK(render(make_seq(false, Type::Int(), {Value::Int(1), Value::Int(2)})) == "[1, 2]");
  }

  TEST_CASE("identical compares doubles by bits") {
    CHECK(identical(Value::Double(std::nan("")), Value::Double(std::nan(""))));
    CHECK_FALSE(identical(Value::Double(0.0), Value::Double(-0.0)));
    CHECK_FALSE(identical(Value::Int(1), Value::Double(1.0)));
    CHECK(identical(make_seq(true, Type::Int(), {Value::Int(1)}),
                    make_seq(true, Type::Int(), {Value::Int(1)})));
  }

  TEST_CASE("sqrt of 4 and of -1") {
    std::string sqrt_text = testing::read_corpus("sqrt.mj");
    std::string methods = sqrt_text.substr(0, sqrt_text.find("void main()"));
    ExecTrace four = run_text(methods + "double main() { double r = sqrt(4.0); return r; }");
    REQUIRE(four.status == RunStatus::Ok);
    CHECK(std::abs(dbl(&*four.result) - 2.0) <= 1e-6);
    ExecTrace neg = run_text(methods + "double main() { double r = sqrt(-1.0); return r; }");
    CHECK(std::isnan(dbl(&*neg.result)));
  }

  TEST_CASE("budget") {
    ExecTrace t = run_text(testing::read_corpus("infinite.mj"));
    CHECK(t.status == RunStatus::BudgetExceeded);
    CHECK(t.steps == 1'000'000);
    CHECK(to_string(t.status) == std::string("StepBudgetExceeded"));
  }

  TEST_CASE("runtime errors carry a location") {
    ExecTrace t = run_text("void main() {\n  int z = 0;\n  int q = 4 / z;\n}");
    CHECK(t.status == RunStatus::RuntimeError);
    CHECK(t.error == ErrorKind::DivisionByZero);
    CHECK(t.error_loc.line == 3);
  }

  TEST_CASE("iterators share their cursor") {
    ExecTrace t = run_text(
        "void main() { List<int> l = new List<int> {1, 2, 3};"
        " Iterator<int> a = iterator(l); Iterator<int> b = a;"
        " int x = next(a); int y = next(b); print(x, y); }");
    CHECK(t.prints == std::vector<std::string>{"12"});
    ExecTrace done = run_text(
        "void main() { Iterator<int> a = iterator(new List<int> {}); int x = next(a); }");
    CHECK(done.error == ErrorKind::IteratorExhausted);
  }

  TEST_CASE("arrays are values") {
    ExecTrace t = run_text(
        "void main() { int[] a = new int[] {1, 2}; int[] b = a; b[0] = 9; print(a, b); }");
    CHECK(t.prints == std::vector<std::string>{"[1, 2][9, 2]"});
  }

  TEST_CASE("loop counters") {
    ExecTrace t = run_text(testing::read_corpus("zero_trip.mj"));
    REQUIRE(t.loop_iterations.size() == 4);
    for (const auto& [id, n] : t.loop_iterations) CHECK(n == 0);
    ExecTrace d = run_text(testing::read_corpus("do_false_guard.mj"));
    CHECK(d.loop_iterations.at(0) == 1);
  }

  TEST_CASE("frame balance and determinism on generated programs") {
    for (uint64_t seed = 0; seed < 150; ++seed) {
      CAPTURE(seed);
      GenConfig cfg;
      cfg.seed = seed;
      Program p = transform_program(generate(cfg)).program;
      int64_t adds = 0, rems = 0;
      size_t last_depth = 0;
      RunOptions ro;
      ro.observer = [&](const TraceEvent& e, const State& s) {
        adds += e.rule == Rule::AddFrame;
        rems += e.rule == Rule::RemFrame;
        last_depth = s.frames.size();
      };
      ExecTrace a = run(p, ro);
      REQUIRE(a.status == RunStatus::Ok);
      CHECK(adds == rems + 1);
      CHECK(last_depth == 1);
      ExecTrace b = run(p);
      CHECK(a.prints == b.prints);
      CHECK(a.steps == b.steps);
      CHECK(a.method_entries == b.method_entries);
      REQUIRE(a.final_bindings.size() == b.final_bindings.size());
      for (size_t i = 0; i < a.final_bindings.size(); ++i)
        CHECK(identical(a.final_bindings[i].second, b.final_bindings[i].second));
    }
  }

  TEST_CASE("bit-identical doubles between the two sqrt forms") {
    DiffReport d = diff_run(testing::load("sqrt_for.mj"));
    REQUIRE(d.equivalent());
    CHECK(d.original.prints == d.transformed.prints);
    CHECK(bits(std::sqrt(2.0)) != 0);
  }
}

TEST_SUITE("verify") {
  TEST_CASE("tail position") {
    Program alg2 = testing::load("sqrt_expected.mj");
    CHECK(tail_position_check(*alg2.find("sqrt_loop")));
    CHECK(tail_position_check(*alg2.find("sqrt")));
    Program bad = parse(
        "int f(int n) { int x = 0; if (n > 0) { x = f(n - 1); } return x; }"
        " int g(int n) { if (n > 0) { int y = g(n - 1); return y; } return n; }"
        " int h(int n) { if (n > 0) { return h(n - 1) ; } return n; }"
        " void v(int n) { if (n > 0) { v(n - 1); } }"
        " void w(int n) { if (n > 0) { w(n - 1); print(n); } }"
        " void main() { }");
    CHECK_FALSE(tail_position_check(*bad.find("f")));
    CHECK_FALSE(tail_position_check(*bad.find("g")));
    CHECK(tail_position_check(*bad.find("h")));
    CHECK(tail_position_check(*bad.find("v")));
    CHECK_FALSE(tail_position_check(*bad.find("w")));
  }

  TEST_CASE("iteration and call counts") {
    Program hundred = parse(
        "void main() { int i = 0; while (i < 100) { i = i + 1; } }");
    IterationReport r = iteration_call_equality(hundred);
    REQUIRE(r.loops.size() == 1);
    CHECK(r.loops[0].iterations == 100);
    CHECK(r.loops[0].entries == 100);
    CHECK(r.ok());

    IterationReport zero = iteration_call_equality(
        parse("void main() { int i = 0; while (i > 0) { i = i - 1; } }"));
    CHECK(zero.loops[0].iterations == 0);
    CHECK(zero.loops[0].entries == 0);

    IterationReport once = iteration_call_equality(testing::load("do_false_guard.mj"));
    CHECK(once.loops[0].iterations == 1);
    CHECK(once.loops[0].entries == 1);

    CHECK_THROWS_AS(iteration_call_equality(testing::load("infinite.mj"), 10'000),
                    StepBudgetExceeded);
  }

  TEST_CASE("trace comparison") {
    ExecTrace a, b;
    a.prints = {"1", "2"};
    b.prints = {"1", "3"};
    DiffReport d = compare_traces(a, b);
    CHECK_FALSE(d.equivalent());
    CHECK(d.observable == "print[1]");
    CHECK(d.detail() == "print[1]: 2 vs 3");

    b.prints = a.prints;
    a.final_bindings = {{"x", Value::Double(1.0)}, {"index", Value::Int(0)}};
    b.final_bindings = {{"x", Value::Double(1.0)}, {"index", Value::Int(2)}};
    CHECK_FALSE(compare_traces(a, b).equivalent());
    CHECK(compare_traces(a, b, {"index"}).equivalent());
    CHECK(compare_traces(a, b, {"index"}).detail().empty());

    ExecTrace c = a;
    c.status = RunStatus::BudgetExceeded;
    CHECK(compare_traces(a, c).observable == "status");
    ExecTrace e = c;
    e.prints = {"other"};
    CHECK(compare_traces(c, e).equivalent());
  }

  TEST_CASE("loop-free programs compare equal") {
    DiffReport d = diff_run(testing::load("loop_free.mj"));
    CHECK(d.equivalent());
    CHECK(d.loops.empty());
  }

  TEST_CASE("generator is deterministic and well formed") {
    GenConfig cfg;
    cfg.seed = 0;
    CHECK(structural_eq(generate(cfg), generate(cfg)));
    cfg.seed = 1;
    CHECK_FALSE(structural_eq(generate(cfg), generate(GenConfig{})));
    std::set<LoopKind> kinds;
    for (uint64_t seed = 0; seed < 500; ++seed) {
      cfg.seed = seed;
      Program p = generate(cfg);
      CAPTURE(seed);
      REQUIRE(check_semantics(p).empty());
      for (const auto& s : collect_loops(p)) kinds.insert(loop_kind(*s.loop, *s.method, p));
    }
    CHECK(kinds.size() == 5);
  }

  TEST_CASE("foreach-heavy weights") {
    GenConfig cfg;
    cfg.weights = LoopWeights{0, 0, 0, 5, 5, 0};
    int with_foreach = 0;
    for (uint64_t seed = 0; seed < 500; ++seed) {
      cfg.seed = seed;
      Program p = generate(cfg);
      bool any = false;
      for (const auto& s : collect_loops(p)) any |= s.loop->is<Foreach>();
      with_foreach += any;
    }
    CHECK(with_foreach >= 450);
  }

  TEST_CASE("nesting stays within the configured depth") {
    for (uint64_t seed = 0; seed < 200; ++seed) {
      GenConfig cfg;
      cfg.seed = seed;
      Program p = generate(cfg);
      std::function<int(const StmtList&)> depth = [&](const StmtList& body) {
        int d = 0;
        for (const auto& s : body) {
          int here = 0;
          if (auto* w = s->as<While>()) here = 1 + depth(w->body);
          else if (auto* dw = s->as<DoWhile>()) here = 1 + depth(dw->body);
          else if (auto* f = s->as<For>()) here = 1 + depth(f->body);
          else if (auto* fe = s->as<Foreach>()) here = 1 + depth(fe->body);
          else if (auto* i = s->as<If>())
            here = std::max(depth(i->then_body), i->else_body ? depth(*i->else_body) : 0);
          else if (auto* b = s->as<Block>()) here = depth(b->body);
          d = std::max(d, here);
        }
        return d;
      };
      for (const auto& m : p.methods) CHECK(depth(m.body) <= cfg.max_depth);
    }
  }

  TEST_CASE("empty campaign") {
    FuzzSummary s = fuzz_campaign(0, GenConfig{});
    CHECK(s.total == 0);
    CHECK(s.all_passed());
    CHECK_FALSE(s.first_failing_seed);
    CHECK(to_json(s).find("\"total\": 0") != std::string::npos);
  }

  TEST_CASE("campaigns are reproducible") {
    GenConfig cfg;
    cfg.seed = 7;
    CHECK(to_json(fuzz_campaign(40, cfg)) == to_json(fuzz_campaign(40, cfg)));
  }

  TEST_CASE("unbounded guards exceed the budget on both sides") {
    GenConfig cfg;
    cfg.seed = 1;
    cfg.unbounded = true;
    FuzzOptions opts;
    opts.budget = 20'000;
    FuzzSummary s = fuzz_campaign(150, cfg, opts);
    CHECK(s.equivalent == s.total);
    CHECK(s.budget_exceeded > 0);
    CHECK(s.tail_ok == s.total);
  }

  TEST_CASE("a mutant is reported with its seed") {
    GenConfig cfg;
    cfg.seed = 1;
    FuzzOptions opts;
    opts.transform.mutant = Mutant::OmitModifiedVar;
    FuzzSummary s = fuzz_campaign(60, cfg, opts);
    REQUIRE_FALSE(s.mismatches.empty());
    CHECK(s.first_failing_seed == s.mismatches[0].seed);
    CHECK_FALSE(s.mismatches[0].detail.empty());
  }
}
