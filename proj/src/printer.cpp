#include <charconv>
#include <cmath>
#include <sstream>

#include "loop2rec/syntax.hpp"

namespace loop2rec {

namespace {

constexpr int kPrecOr = 1;
constexpr int kPrecAnd = 2;
constexpr int kPrecEquality = 3;
constexpr int kPrecRelational = 4;
constexpr int kPrecAdditive = 5;
constexpr int kPrecMultiplicative = 6;
constexpr int kPrecUnary = 7;
constexpr int kPrecPostfix = 8;
constexpr int kPrecPrimary = 9;

int precedence(BinaryOp op) {
  switch (op) {
    case BinaryOp::Or: return kPrecOr;
    case BinaryOp::And: return kPrecAnd;
    case BinaryOp::Eq:
    case BinaryOp::Ne: return kPrecEquality;
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge: return kPrecRelational;
    case BinaryOp::Add:
    case BinaryOp::Sub: return kPrecAdditive;
    case BinaryOp::Mul:
    case BinaryOp::Div: return kPrecMultiplicative;
  }
  return kPrecPrimary;
}

int precedence(const Expr& e) {
  if (auto* b = e.as<Binary>()) return precedence(b->op);
  if (e.is<Unary>() || e.is<Cast>()) return kPrecUnary;
  if (e.is<Index>()) return kPrecPostfix;
  return kPrecPrimary;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

class Printer {
 public:
  std::string expr(const Expr& e) {
    return std::visit([&](const auto& x) { return node(x, e); }, e.node);
  }

  void stmt(const Stmt& s, int indent) {
    pad(indent);
    std::visit([&](const auto& x) { node(x, indent); }, s.node);
  }

  void body(const StmtList& stmts, int indent) {
    if (stmts.empty()) {
      out_ << "{ }";
      return;
    }
    out_ << "{\n";
    for (const auto& s : stmts) {
      stmt(*s, indent + 1);
      out_ << "\n";
    }
    pad(indent);
    out_ << "}";
  }

  void method(const MethodDef& m) {
    out_ << m.result.str() << " " << m.name << "(";
    for (size_t i = 0; i < m.params.size(); ++i) {
      if (i) out_ << ", ";
      out_ << m.params[i].type.str() << " " << m.params[i].name;
    }
    out_ << ") ";
    if (m.body.empty() && !m.ret) {
      out_ << "{ }";
      return;
    }
    out_ << "{\n";
    for (const auto& s : m.body) {
      stmt(*s, 1);
      out_ << "\n";
    }
    if (m.ret) out_ << "  return " << expr(*m.ret) << ";\n";
    out_ << "}";
  }

  std::string take() { return out_.str(); }

 private:
  void pad(int indent) {
    for (int i = 0; i < indent; ++i) out_ << "  ";
  }

  std::string operand(const Expr& e, int min_prec) {
    std::string s = expr(e);
    return precedence(e) < min_prec ? "(" + s + ")" : s;
  }

  std::string args(const ExprList& list) {
    std::string s;
    for (size_t i = 0; i < list.size(); ++i) {
      if (i) s += ", ";
      s += expr(*list[i]);
    }
    return s;
  }

  std::string node(const IntLit& x, const Expr&) {
    return std::to_string(x.value);
  }
  std::string node(const DoubleLit& x, const Expr&) {
    return format_double(x.value);
  }
  std::string node(const BoolLit& x, const Expr&) {
    return x.value ? "true" : "false";
  }
  std::string node(const Var& x, const Expr&) { return x.name; }
  std::string node(const Binary& x, const Expr&) {
    int p = precedence(x.op);
    // left-associative: equal precedence needs parens only on the right
    return operand(*x.lhs, p) + " " + spelling(x.op) + " " +
           operand(*x.rhs, p + 1);
  }
  std::string node(const Unary& x, const Expr&) {
    // "--x" would lex as a decrement, so nested unaries get parens
    if (x.operand->is<Unary>())
      return std::string(spelling(x.op)) + "(" + expr(*x.operand) + ")";
    return spelling(x.op) + operand(*x.operand, kPrecUnary);
  }
  std::string node(const ArrayLit& x, const Expr&) {
    return "new " + x.elem.str() + "[] {" + args(x.elements) + "}";
  }
  std::string node(const ListLit& x, const Expr&) {
    return "new List<" + x.elem.str() + "> {" + args(x.elements) + "}";
  }
  std::string node(const Index& x, const Expr&) {
    return operand(*x.array, kPrecPostfix) + "[" + expr(*x.index) + "]";
  }
  std::string node(const Length& x, const Expr&) {
    return "length(" + expr(*x.collection) + ")";
  }
  std::string node(const Builtin& x, const Expr&) {
    return std::string(spelling(x.fn)) + "(" + args(x.args) + ")";
  }
  std::string node(const Cast& x, const Expr&) {
    return "(" + x.target.str() + ") " + operand(*x.operand, kPrecUnary);
  }
  std::string node(const Call& x, const Expr&) {
    return x.method + "(" + args(x.args) + ")";
  }

  // Statement forms without trailing newline.
  std::string simple(const Stmt& s) {
    if (auto* d = s.as<VarDecl>())
      return d->type.str() + " " + d->name + " = " + expr(*d->init);
    if (auto* a = s.as<Assign>()) return a->target + " = " + expr(*a->value);
    if (auto* c = s.as<CallAssign>()) {
      std::string call = c->method + "(" + args(c->args) + ")";
      return c->target ? *c->target + " = " + call : call;
    }
    return "?";
  }

  template <class T>
  void node(const T& x, int indent) {
    if constexpr (std::is_same_v<T, VarDecl>) {
      out_ << x.type.str() << " " << x.name << " = " << expr(*x.init) << ";";
    } else if constexpr (std::is_same_v<T, Assign>) {
      out_ << x.target << " = " << expr(*x.value) << ";";
    } else if constexpr (std::is_same_v<T, AssignIndex>) {
      out_ << x.target << "[" << expr(*x.index) << "] = " << expr(*x.value)
           << ";";
    } else if constexpr (std::is_same_v<T, CallAssign>) {
      if (x.target) out_ << *x.target << " = ";
      out_ << x.method << "(" << args(x.args) << ");";
    } else if constexpr (std::is_same_v<T, If>) {
      if_chain(x, indent);
    } else if constexpr (std::is_same_v<T, While>) {
      out_ << "while (" << expr(*x.cond) << ") ";
      body(x.body, indent);
    } else if constexpr (std::is_same_v<T, DoWhile>) {
      out_ << "do ";
      body(x.body, indent);
      out_ << " while (" << expr(*x.cond) << ");";
    } else if constexpr (std::is_same_v<T, For>) {
      out_ << "for (";
      for_init(x.init);
      out_ << "; " << expr(*x.cond) << ";";
      for (size_t i = 0; i < x.update.size(); ++i)
        out_ << (i ? ", " : " ") << simple(*x.update[i]);
      out_ << ") ";
      body(x.body, indent);
    } else if constexpr (std::is_same_v<T, Foreach>) {
      out_ << "for (" << x.elem_type.str() << " " << x.elem << " : "
           << expr(*x.collection) << ") ";
      body(x.body, indent);
    } else if constexpr (std::is_same_v<T, Block>) {
      body(x.body, indent);
    } else if constexpr (std::is_same_v<T, Return>) {
      out_ << "return " << expr(*x.value) << ";";
    } else {
      static_assert(std::is_same_v<T, Print>);
      out_ << "print(";
      for (size_t i = 0; i < x.items.size(); ++i) {
        if (i) out_ << ", ";
        if (auto* s = std::get_if<std::string>(&x.items[i].item))
          out_ << quote(*s);
        else
          out_ << expr(*std::get<ExprPtr>(x.items[i].item));
      }
      out_ << ");";
    }
  }

  void if_chain(const If& x, int indent) {
    out_ << "if (" << expr(*x.cond) << ") ";
    body(x.then_body, indent);
    if (!x.else_body) return;
    out_ << " else ";
    const StmtList& e = *x.else_body;
    if (e.size() == 1 && e[0]->is<If>()) {
      if_chain(*e[0]->as<If>(), indent);
    } else {
      body(e, indent);
    }
  }

  // Consecutive declarations share one type keyword, as in Java.
  void for_init(const StmtList& init) {
    for (size_t i = 0; i < init.size(); ++i) {
      if (i) out_ << ", ";
      if (auto* d = init[i]->as<VarDecl>()) {
        if (i == 0) out_ << d->type.str() << " ";
        out_ << d->name << " = " << expr(*d->init);
      } else {
        out_ << simple(*init[i]);
      }
    }
  }

  std::ostringstream out_;
};

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (std::isfinite(v) && s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::string pretty_print(const Expr& e) { return Printer().expr(e); }

std::string pretty_print(const Stmt& s, int indent) {
  Printer p;
  p.stmt(s, indent);
  return p.take();
}

std::string pretty_print(const MethodDef& m) {
  Printer p;
  p.method(m);
  return p.take();
}

std::string pretty_print(const Program& prog) {
  std::string out;
  for (size_t i = 0; i < prog.methods.size(); ++i) {
    if (i) out += "\n";
    out += pretty_print(prog.methods[i]);
    out += "\n";
  }
  return out;
}

}  // namespace loop2rec
