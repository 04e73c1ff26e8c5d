#include <random>

#include "doctest.h"
#include "loop2rec/parser.hpp"
#include "loop2rec/syntax.hpp"
#include "loop2rec/transform.hpp"
#include "loop2rec/verify.hpp"
#include "support.hpp"

using namespace loop2rec;

namespace {

const char* const kCorpus[] = {
    "sqrt.mj",          "sqrt_do.mj",    "sqrt_for.mj",     "foreach_array.mj",
    "foreach_list.mj",  "nested.mj",     "two_live.mj",     "two_index.mj",
    "one_elem.mj",      "loop_free.mj",  "empty_main.mj",   "infinite.mj",
    "do_false_guard.mj", "zero_trip.mj", "mutates_collection.mj",
    "sqrt_expected.mj"};

std::string parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.format("t.mj");
  }
  return "";
}

std::vector<std::string> semantic_errors(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& e : check_semantics(parse(text))) out.push_back(e.message);
  return out;
}

bool mentions(const std::vector<std::string>& errors, const std::string& what) {
  for (const auto& e : errors)
    if (e.find(what) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_SUITE("syntax") {
  TEST_CASE("pretty printing the sqrt program keeps the loop condition") {
    std::string text = pretty_print(testing::load("sqrt.mj"));
    CHECK(text.find("while (abs(b * b - x) > 1e-12)") != std::string::npos);
  }

  TEST_CASE("empty main prints on one line") {
    CHECK(pretty_print(parse("void main() {}")) == "void main() { }\n");
  }

  TEST_CASE("transformed sqrt prints both methods") {
    std::string text =
        pretty_print(transform_program(testing::load("sqrt.mj")).program);
    CHECK(text.find("double sqrt(double x)") != std::string::npos);
    CHECK(text.find("double sqrt_loop(double x, double b)") != std::string::npos);
  }

  TEST_CASE("structural equality") {
    Program a = testing::load("sqrt.mj");
    CHECK(structural_eq(a, a));
    CHECK_FALSE(structural_eq(a, transform_program(a).program));
    CHECK_FALSE(structural_eq(parse("void main() { int x = 1; }"),
                              parse("void main() { int y = 1; }")));
    CHECK_FALSE(structural_eq(parse("void main() { double x = 1.0; }"),
                              parse("void main() { double x = 1.5; }")));
  }

  TEST_CASE("round trip over the corpus") {
    for (const char* name : kCorpus) {
      CAPTURE(name);
      Program p = testing::load(name);
      CHECK(structural_eq(p, parse(pretty_print(p))));
    }
  }

  TEST_CASE("round trip over generated and transformed programs") {
    for (uint64_t seed = 0; seed < 300; ++seed) {
      CAPTURE(seed);
      GenConfig cfg;
      cfg.seed = seed;
      Program p = generate(cfg);
      REQUIRE(structural_eq(p, parse(pretty_print(p))));
      Program t = transform_program(p).program;
      REQUIRE(structural_eq(t, parse(pretty_print(t))));
    }
  }

  TEST_CASE("doubles print in shortest round-trip form") {
    CHECK(format_double(2.0) == "2.0");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1e-12) == "1e-12");
    for (double v : {1.0 / 3.0, 2.000000000000002, 123456789.125, 5e-324}) {
      CAPTURE(v);
      CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
  }

  TEST_CASE("identifiers and loop detection") {
    Program p = testing::load("sqrt.mj");
    auto ids = all_identifiers(p);
    for (const char* id : {"sqrt", "x", "b", "main", "r"})
      CHECK(std::find(ids.begin(), ids.end(), id) != ids.end());
    CHECK(contains_loop(p));
    CHECK_FALSE(contains_loop(transform_program(p).program));
    CHECK_FALSE(contains_loop(testing::load("loop_free.mj")));
  }
}

TEST_SUITE("parser") {
  TEST_CASE("sqrt has one method with one while") {
    Program p = testing::load("sqrt.mj");
    const MethodDef* m = p.find("sqrt");
    REQUIRE(m);
    REQUIRE(m->params.size() == 1);
    CHECK(m->params[0].name == "x");
    int loops = 0;
    for (const auto& s : m->body) loops += s->is<While>();
    CHECK(loops == 1);
    REQUIRE(m->ret);
    CHECK(m->ret->is<Var>());
  }

  TEST_CASE("minimal program with a return") {
    Program p = parse("int main() { return 0; }");
    REQUIRE(p.methods.size() == 1);
    REQUIRE(p.methods[0].ret);
    CHECK(p.methods[0].ret->as<IntLit>()->value == 0);
    CHECK(check_semantics(p).empty());
  }

  TEST_CASE("return inside a loop is rejected") {
    std::string e = parse_error("void m() { while (true) return 1; }");
    CHECK(e.find("return not allowed inside loop") != std::string::npos);
    CHECK(e.rfind("t.mj:1:", 0) == 0);
    CHECK(parse_error("void m() { for (int i = 0; i < 2; i++) { return; } }")
              .find("return not allowed inside loop") != std::string::npos);
  }

  TEST_CASE("return only at the end of a body or branch") {
    CHECK(parse_error("int m() { return 1; int x = 2; }") != "");
    CHECK(parse_error("int m(int a) { if (a > 0) { return 1; } return 2; }") == "");
  }

  TEST_CASE("duplicate parameters and methods") {
    CHECK(parse_error("void m(int a, int a) { }").find("duplicate parameter") !=
          std::string::npos);
    CHECK(parse_error("void m() { } void m() { }").find("duplicate method") !=
          std::string::npos);
  }

  TEST_CASE("error positions") {
    try {
      parse("void main() {\n  int x = ;\n}");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(e.column() == 11);
      CHECK(e.found() == ";");
    }
  }

  TEST_CASE("comments and increments") {
    Program p = parse(
        "// header\nvoid main() { int i = 0; i++; i--; // trailing\n print(i); }");
    CHECK(p.methods[0].body.size() == 4);
    CHECK(p.methods[0].body[1]->is<Assign>());
  }

  TEST_CASE("parse is total on mangled input") {
    std::mt19937_64 rng(11);
    std::string base = testing::read_corpus("foreach_list.mj") +
                       testing::read_corpus("two_index.mj");
    for (int i = 0; i < 3000; ++i) {
      std::string text = base;
      int edits = 1 + static_cast<int>(rng() % 6);
      for (int k = 0; k < edits; ++k) {
        size_t at = rng() % text.size();
        switch (rng() % 3) {
          case 0: text.erase(at, 1 + rng() % 8); break;
          case 1: text.insert(at, 1, static_cast<char>(rng() % 256)); break;
          default: text = text.substr(0, at); break;
        }
        if (text.empty()) text = "{";
      }
      try {
        Program p = parse(text);
        (void)check_semantics(p);
      } catch (const ParseError&) {
      }
    }
    CHECK_NOTHROW(parse(""));
    CHECK(parse_error(std::string(5000, '(')) != "");
  }
}

TEST_SUITE("checker") {
  TEST_CASE("corpus programs are well formed") {
    for (const char* name : kCorpus) {
      CAPTURE(name);
      CHECK(check_semantics(testing::load(name)).empty());
    }
  }

  TEST_CASE("use before declaration") {
    CHECK(mentions(semantic_errors("void m() { x = 1; } void main() { }"),
                   "undeclared"));
    CHECK(mentions(semantic_errors("void main() { print(y); int y = 1; }"),
                   "undeclared"));
  }

  TEST_CASE("shadowing") {
    CHECK(mentions(
        semantic_errors("void m() { int x = 0; { double x = 1.0; } } void main() { }"),
        "shadow"));
    CHECK(mentions(semantic_errors("void m(int x) { int x = 1; } void main() { }"),
                   "shadow"));
    // sibling blocks may reuse a name
    CHECK(semantic_errors("void main() { { int x = 0; } { int x = 1; } }").empty());
  }

  TEST_CASE("static types") {
    CHECK_FALSE(semantic_errors("void main() { int x = 1.5; }").empty());
    CHECK_FALSE(semantic_errors("void main() { boolean b = 1 + true; }").empty());
    CHECK_FALSE(semantic_errors("void main() { double d = 1; }").empty());
    CHECK(semantic_errors("void main() { double d = (double) 1; }").empty());
    CHECK(semantic_errors("void main() { Object o = 1; int i = (int) o; }").empty());
    CHECK_FALSE(semantic_errors("int f() { return 1.0; } void main() { }").empty());
    CHECK_FALSE(semantic_errors("void main() { int x = 1; for (double d : x) { } }").empty());
    CHECK_FALSE(
        semantic_errors("void main() { int[] a = new int[] {1}; for (double d : a) { } }")
            .empty());
  }

  TEST_CASE("calls") {
    CHECK(semantic_errors("int f(int a) { return a; } void main() { int x = f(1); }")
              .empty());
    CHECK_FALSE(
        semantic_errors("int f(int a) { return a; } void main() { int x = f(1) + 1; }")
            .empty());
    CHECK_FALSE(
        semantic_errors("int f(int a) { return a; } void main() { int x = f(1, 2); }")
            .empty());
    CHECK_FALSE(semantic_errors("void main() { g(); }").empty());
  }

  TEST_CASE("entry method") {
    CHECK_FALSE(semantic_errors("void f() { }").empty());
    CHECK_FALSE(semantic_errors("void main(int a) { }").empty());
  }

  TEST_CASE("reserved names") {
    CHECK(is_reserved_word("abs"));
    CHECK(is_reserved_word("hasNext"));
    CHECK_FALSE(is_reserved_word("sqrt"));
  }
}
