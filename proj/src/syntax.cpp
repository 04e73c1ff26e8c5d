#include "loop2rec/syntax.hpp"

#include <algorithm>
#include <bit>
#include <unordered_set>

namespace loop2rec {

std::string to_string(const SourceLoc& loc) {
  if (!loc.known()) return "-";
  return std::to_string(loc.line) + ":" + std::to_string(loc.column);
}

bool operator==(const Type& a, const Type& b) {
  if (a.kind_ != b.kind_) return false;
  if (!a.elem_ || !b.elem_) return a.elem_ == b.elem_;
  return *a.elem_ == *b.elem_;
}

std::string Type::str() const {
  switch (kind_) {
    case Kind::Int:
      return "int";
    case Kind::Double:
      return "double";
    case Kind::Bool:
      return "boolean";
    case Kind::Object:
      return "Object";
    case Kind::Void:
      return "void";
    case Kind::Array:
      return elem_->str() + "[]";
    case Kind::List:
      return "List<" + elem_->str() + ">";
    case Kind::Iterator:
      return "Iterator<" + elem_->str() + ">";
  }
  return "?";
}

const char* spelling(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::And: return "&&";
    case BinaryOp::Or: return "||";
  }
  return "?";
}

const char* spelling(UnaryOp op) { return op == UnaryOp::Neg ? "-" : "!"; }

const char* spelling(BuiltinFn fn) {
  switch (fn) {
    case BuiltinFn::Abs: return "abs";
    case BuiltinFn::Nan: return "nan";
    case BuiltinFn::Iterator: return "iterator";
    case BuiltinFn::HasNext: return "hasNext";
    case BuiltinFn::Next: return "next";
  }
  return "?";
}

const Param* MethodDef::find_param(std::string_view n) const {
  for (const auto& p : params)
    if (p.name == n) return &p;
  return nullptr;
}

const MethodDef* Program::find(std::string_view name) const {
  for (const auto& m : methods)
    if (m.name == name) return &m;
  return nullptr;
}

ExprPtr make_expr(Expr::Node node, SourceLoc loc) {
  return std::make_shared<const Expr>(Expr{std::move(node), loc});
}

StmtPtr make_stmt(Stmt::Node node, SourceLoc loc) {
  return std::make_shared<const Stmt>(Stmt{std::move(node), loc});
}

ExprPtr int_lit(int32_t v) { return make_expr(IntLit{v}); }
ExprPtr double_lit(double v) { return make_expr(DoubleLit{v}); }
ExprPtr bool_lit(bool v) { return make_expr(BoolLit{v}); }
ExprPtr var(std::string name) { return make_expr(Var{std::move(name)}); }
ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
  return make_expr(Binary{op, std::move(lhs), std::move(rhs)});
}
ExprPtr unary(UnaryOp op, ExprPtr operand) {
  return make_expr(Unary{op, std::move(operand)});
}
ExprPtr builtin(BuiltinFn fn, ExprList args) {
  return make_expr(Builtin{fn, std::move(args)});
}
ExprPtr call(std::string method, ExprList args) {
  return make_expr(Call{std::move(method), std::move(args)});
}

// ---------------------------------------------------------------------------
// structural_eq

namespace {

bool eq_list(const ExprList& a, const ExprList& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!structural_eq(a[i], b[i])) return false;
  return true;
}

bool eq_node(const Expr::Node& a, const Expr::Node& b) {
  if (a.index() != b.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const T& y = std::get<T>(b);
        if constexpr (std::is_same_v<T, IntLit> || std::is_same_v<T, BoolLit>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, DoubleLit>) {
          // bitwise: 0.0 and -0.0 are different literals
          return std::bit_cast<uint64_t>(x.value) ==
                 std::bit_cast<uint64_t>(y.value);
        } else if constexpr (std::is_same_v<T, Var>) {
          return x.name == y.name;
        } else if constexpr (std::is_same_v<T, Binary>) {
          return x.op == y.op && structural_eq(x.lhs, y.lhs) &&
                 structural_eq(x.rhs, y.rhs);
        } else if constexpr (std::is_same_v<T, Unary>) {
          return x.op == y.op && structural_eq(x.operand, y.operand);
        } else if constexpr (std::is_same_v<T, ArrayLit> ||
                             std::is_same_v<T, ListLit>) {
          return x.elem == y.elem && eq_list(x.elements, y.elements);
        } else if constexpr (std::is_same_v<T, Index>) {
          return structural_eq(x.array, y.array) &&
                 structural_eq(x.index, y.index);
        } else if constexpr (std::is_same_v<T, Length>) {
          return structural_eq(x.collection, y.collection);
        } else if constexpr (std::is_same_v<T, Builtin>) {
          return x.fn == y.fn && eq_list(x.args, y.args);
        } else if constexpr (std::is_same_v<T, Cast>) {
          return x.target == y.target && structural_eq(x.operand, y.operand);
        } else {
          static_assert(std::is_same_v<T, Call>);
          return x.method == y.method && eq_list(x.args, y.args);
        }
      },
      a);
}

bool eq_opt_list(const std::optional<StmtList>& a,
                 const std::optional<StmtList>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || structural_eq(*a, *b);
}

}  // namespace

bool structural_eq(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  if (a == b) return true;
  return eq_node(a->node, b->node);
}

bool structural_eq(const Stmt& a, const Stmt& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const T& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, VarDecl>) {
          return x.type == y.type && x.name == y.name &&
                 structural_eq(x.init, y.init);
        } else if constexpr (std::is_same_v<T, Assign>) {
          return x.target == y.target && structural_eq(x.value, y.value);
        } else if constexpr (std::is_same_v<T, AssignIndex>) {
          return x.target == y.target && structural_eq(x.index, y.index) &&
                 structural_eq(x.value, y.value);
        } else if constexpr (std::is_same_v<T, CallAssign>) {
          return x.target == y.target && x.method == y.method &&
                 eq_list(x.args, y.args);
        } else if constexpr (std::is_same_v<T, If>) {
          return structural_eq(x.cond, y.cond) &&
                 structural_eq(x.then_body, y.then_body) &&
                 eq_opt_list(x.else_body, y.else_body);
        } else if constexpr (std::is_same_v<T, While>) {
          return structural_eq(x.cond, y.cond) && structural_eq(x.body, y.body);
        } else if constexpr (std::is_same_v<T, DoWhile>) {
          return structural_eq(x.body, y.body) && structural_eq(x.cond, y.cond);
        } else if constexpr (std::is_same_v<T, For>) {
          return structural_eq(x.init, y.init) &&
                 structural_eq(x.cond, y.cond) &&
                 structural_eq(x.update, y.update) &&
                 structural_eq(x.body, y.body);
        } else if constexpr (std::is_same_v<T, Foreach>) {
          return x.elem_type == y.elem_type && x.elem == y.elem &&
                 structural_eq(x.collection, y.collection) &&
                 structural_eq(x.body, y.body);
        } else if constexpr (std::is_same_v<T, Block>) {
          return structural_eq(x.body, y.body);
        } else if constexpr (std::is_same_v<T, Return>) {
          return structural_eq(x.value, y.value);
        } else {
          static_assert(std::is_same_v<T, Print>);
          if (x.items.size() != y.items.size()) return false;
          for (size_t i = 0; i < x.items.size(); ++i) {
            const auto& xi = x.items[i].item;
            const auto& yi = y.items[i].item;
            if (xi.index() != yi.index()) return false;
            if (auto* s = std::get_if<std::string>(&xi)) {
              if (*s != std::get<std::string>(yi)) return false;
            } else if (!structural_eq(std::get<ExprPtr>(xi),
                                      std::get<ExprPtr>(yi))) {
              return false;
            }
          }
          return true;
        }
      },
      a.node);
}

bool structural_eq(const StmtList& a, const StmtList& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    if (!a[i] || !b[i] || !structural_eq(*a[i], *b[i])) return false;
  }
  return true;
}

bool structural_eq(const MethodDef& a, const MethodDef& b) {
  return a.name == b.name && a.result == b.result && a.params == b.params &&
         structural_eq(a.body, b.body) && structural_eq(a.ret, b.ret);
}

bool structural_eq(const Program& a, const Program& b) {
  if (a.entry != b.entry || a.methods.size() != b.methods.size()) return false;
  for (size_t i = 0; i < a.methods.size(); ++i)
    if (!structural_eq(a.methods[i], b.methods[i])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// identifier collection

namespace {

struct IdentCollector {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;

  void add(const std::string& s) {
    if (seen.insert(s).second) out.push_back(s);
  }

  void expr(const ExprPtr& e) {
    if (!e) return;
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, Var>) {
            add(x.name);
          } else if constexpr (std::is_same_v<T, Binary>) {
            expr(x.lhs);
            expr(x.rhs);
          } else if constexpr (std::is_same_v<T, Unary>) {
            expr(x.operand);
          } else if constexpr (std::is_same_v<T, ArrayLit> ||
                               std::is_same_v<T, ListLit>) {
            for (auto& el : x.elements) expr(el);
          } else if constexpr (std::is_same_v<T, Index>) {
            expr(x.array);
            expr(x.index);
          } else if constexpr (std::is_same_v<T, Length>) {
            expr(x.collection);
          } else if constexpr (std::is_same_v<T, Builtin>) {
            for (auto& a : x.args) expr(a);
          } else if constexpr (std::is_same_v<T, Cast>) {
            expr(x.operand);
          } else if constexpr (std::is_same_v<T, Call>) {
            add(x.method);
            for (auto& a : x.args) expr(a);
          }
        },
        e->node);
  }

  void stmts(const StmtList& body) {
    for (const auto& s : body) stmt(*s);
  }

  void stmt(const Stmt& s) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, VarDecl>) {
            add(x.name);
            expr(x.init);
          } else if constexpr (std::is_same_v<T, Assign>) {
            add(x.target);
            expr(x.value);
          } else if constexpr (std::is_same_v<T, AssignIndex>) {
            add(x.target);
            expr(x.index);
            expr(x.value);
          } else if constexpr (std::is_same_v<T, CallAssign>) {
            if (x.target) add(*x.target);
            add(x.method);
            for (auto& a : x.args) expr(a);
          } else if constexpr (std::is_same_v<T, If>) {
            expr(x.cond);
            stmts(x.then_body);
            if (x.else_body) stmts(*x.else_body);
          } else if constexpr (std::is_same_v<T, While>) {
            expr(x.cond);
            stmts(x.body);
          } else if constexpr (std::is_same_v<T, DoWhile>) {
            stmts(x.body);
            expr(x.cond);
          } else if constexpr (std::is_same_v<T, For>) {
            stmts(x.init);
            expr(x.cond);
            stmts(x.update);
            stmts(x.body);
          } else if constexpr (std::is_same_v<T, Foreach>) {
            add(x.elem);
            expr(x.collection);
            stmts(x.body);
          } else if constexpr (std::is_same_v<T, Block>) {
            stmts(x.body);
          } else if constexpr (std::is_same_v<T, Return>) {
            expr(x.value);
          } else {
            for (const auto& it : x.items)
              if (auto* e = std::get_if<ExprPtr>(&it.item)) expr(*e);
          }
        },
        s.node);
  }
};

}  // namespace

std::vector<std::string> all_identifiers(const Program& p) {
  IdentCollector c;
  for (const auto& m : p.methods) {
    c.add(m.name);
    for (const auto& param : m.params) c.add(param.name);
    c.stmts(m.body);
    c.expr(m.ret);
  }
  return std::move(c.out);
}

bool contains_loop(const StmtList& body) {
  for (const auto& s : body) {
    if (s->is_loop()) return true;
    if (auto* i = s->as<If>()) {
      if (contains_loop(i->then_body)) return true;
      if (i->else_body && contains_loop(*i->else_body)) return true;
    } else if (auto* b = s->as<Block>()) {
      if (contains_loop(b->body)) return true;
    }
  }
  return false;
}

bool contains_loop(const Program& p) {
  return std::any_of(p.methods.begin(), p.methods.end(),
                     [](const MethodDef& m) { return contains_loop(m.body); });
}

}  // namespace loop2rec
