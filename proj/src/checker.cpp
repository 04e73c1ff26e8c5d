#include <cctype>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "loop2rec/parser.hpp"

namespace loop2rec {

std::string SemanticError::format(std::string_view file) const {
  std::string where = loc.known() ? std::to_string(loc.line) + ":" +
                                        std::to_string(loc.column)
                                  : std::string("0:0");
  std::string in = method.empty() ? "" : " (in " + method + ")";
  return std::string(file) + ":" + where + ": " + message + in;
}

namespace {

bool valid_identifier(const std::string& s) {
  if (s.empty() || is_reserved_word(s)) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_')
    return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

bool castable(const Type& from, const Type& to) {
  if (from == to) return true;
  if (from.is_numeric() && to.is_numeric()) return true;
  if (to.kind() == Type::Kind::Object) return from.kind() != Type::Kind::Void;
  if (from.kind() == Type::Kind::Object) return to.kind() != Type::Kind::Void;
  return false;
}

bool assignable(const Type& from, const Type& to) {
  if (from.kind() == Type::Kind::Void || to.kind() == Type::Kind::Void)
    return false;
  return from == to || to.kind() == Type::Kind::Object;
}

// Expression typing shared by check_semantics and expr_type. Errors are
// reported through `report`; nullopt results suppress cascades.
class ExprTyper {
 public:
  using Report = std::function<void(SourceLoc, std::string)>;

  ExprTyper(const Program& p, const VarTypeLookup& lookup, Report report)
      : prog_(p), lookup_(lookup), report_(std::move(report)) {}

  // `call_ok`: a Call is permitted at the root of this expression.
  std::optional<Type> type(const Expr& e, bool call_ok = false) {
    return std::visit([&](const auto& x) { return node(x, e, call_ok); },
                      e.node);
  }

 private:
  std::optional<Type> error(const Expr& e, std::string msg) {
    report_(e.loc, std::move(msg));
    return std::nullopt;
  }

  std::optional<Type> node(const IntLit&, const Expr&, bool) {
    return Type::Int();
  }
  std::optional<Type> node(const DoubleLit& x, const Expr& e, bool) {
    if (!std::isfinite(x.value) || std::signbit(x.value))
      return error(e, "double literal must be finite and non-negative");
    return Type::Double();
  }
  std::optional<Type> node(const BoolLit&, const Expr&, bool) {
    return Type::Bool();
  }
  std::optional<Type> node(const Var& x, const Expr& e, bool) {
    if (auto t = lookup_(x.name)) return t;
    return error(e, "undeclared variable '" + x.name + "'");
  }

  std::optional<Type> node(const Binary& x, const Expr& e, bool) {
    auto l = type(*x.lhs);
    auto r = type(*x.rhs);
    if (!l || !r) return std::nullopt;
    std::string op = spelling(x.op);
    switch (x.op) {
      case BinaryOp::Add:
      case BinaryOp::Sub:
      case BinaryOp::Mul:
      case BinaryOp::Div:
        if (l->is_numeric() && *l == *r) return l;
        break;
      case BinaryOp::Lt:
      case BinaryOp::Le:
      case BinaryOp::Gt:
      case BinaryOp::Ge:
        if (l->is_numeric() && *l == *r) return Type::Bool();
        break;
      case BinaryOp::Eq:
      case BinaryOp::Ne:
        if (l->is_primitive() && *l == *r) return Type::Bool();
        break;
      case BinaryOp::And:
      case BinaryOp::Or:
        if (*l == Type::Bool() && *r == Type::Bool()) return Type::Bool();
        break;
    }
    return error(e, "operator '" + op + "' cannot combine " + l->str() +
                        " and " + r->str());
  }

  std::optional<Type> node(const Unary& x, const Expr& e, bool) {
    auto t = type(*x.operand);
    if (!t) return std::nullopt;
    if (x.op == UnaryOp::Neg && t->is_numeric()) return t;
    if (x.op == UnaryOp::Not && *t == Type::Bool()) return t;
    return error(e, std::string("operator '") + spelling(x.op) +
                        "' does not apply to " + t->str());
  }

  std::optional<Type> elements(const Type& elem, const ExprList& elems,
                               const Expr& e) {
    if (elem.kind() == Type::Kind::Void)
      return error(e, "collection element type cannot be void");
    bool ok = true;
    for (const auto& el : elems) {
      auto t = type(*el);
      if (!t) {
        ok = false;
      } else if (!assignable(*t, elem)) {
        error(*el, "element of type " + t->str() + " in collection of " +
                       elem.str());
        ok = false;
      }
    }
    return ok ? std::optional<Type>(elem) : std::nullopt;
  }

  std::optional<Type> node(const ArrayLit& x, const Expr& e, bool) {
    if (!elements(x.elem, x.elements, e)) return std::nullopt;
    return Type::ArrayOf(x.elem);
  }
  std::optional<Type> node(const ListLit& x, const Expr& e, bool) {
    if (!elements(x.elem, x.elements, e)) return std::nullopt;
    return Type::ListOf(x.elem);
  }

  std::optional<Type> node(const Index& x, const Expr& e, bool) {
    auto a = type(*x.array);
    auto i = type(*x.index);
    if (!a || !i) return std::nullopt;
    if (a->kind() != Type::Kind::Array)
      return error(e, "indexing a non-array of type " + a->str());
    if (*i != Type::Int()) return error(e, "array index must be int");
    return a->elem();
  }

  std::optional<Type> node(const Length& x, const Expr& e, bool) {
    auto c = type(*x.collection);
    if (!c) return std::nullopt;
    if (c->kind() != Type::Kind::Array && c->kind() != Type::Kind::List)
      return error(e, "length of non-collection type " + c->str());
    return Type::Int();
  }

  std::optional<Type> node(const Builtin& x, const Expr& e, bool) {
    std::vector<Type> args;
    for (const auto& a : x.args) {
      auto t = type(*a);
      if (!t) return std::nullopt;
      args.push_back(*t);
    }
    size_t want = x.fn == BuiltinFn::Nan ? 0 : 1;
    if (args.size() != want)
      return error(e, std::string(spelling(x.fn)) + " expects " +
                          std::to_string(want) + " argument(s)");
    switch (x.fn) {
      case BuiltinFn::Abs:
        if (args[0].is_numeric()) return args[0];
        break;
      case BuiltinFn::Nan:
        return Type::Double();
      case BuiltinFn::Iterator:
        if (args[0].kind() == Type::Kind::List)
          return Type::IteratorOf(args[0].elem());
        break;
      case BuiltinFn::HasNext:
        if (args[0].kind() == Type::Kind::Iterator) return Type::Bool();
        break;
      case BuiltinFn::Next:
        if (args[0].kind() == Type::Kind::Iterator) return args[0].elem();
        break;
    }
    return error(e, std::string(spelling(x.fn)) + " does not accept " +
                        args[0].str());
  }

  std::optional<Type> node(const Cast& x, const Expr& e, bool) {
    auto t = type(*x.operand);
    if (!t) return std::nullopt;
    if (!castable(*t, x.target))
      return error(e, "cannot cast " + t->str() + " to " + x.target.str());
    return x.target;
  }

  std::optional<Type> node(const Call& x, const Expr& e, bool call_ok) {
    if (!call_ok)
      return error(e, "call to '" + x.method +
                          "' must be a whole initializer, assignment or "
                          "return operand");
    const MethodDef* m = prog_.find(x.method);
    if (!m) return error(e, "call to undefined method '" + x.method + "'");
    if (m->params.size() != x.args.size())
      return error(e, "method '" + x.method + "' expects " +
                          std::to_string(m->params.size()) + " argument(s)");
    bool ok = true;
    for (size_t i = 0; i < x.args.size(); ++i) {
      auto t = type(*x.args[i]);
      if (!t) {
        ok = false;
      } else if (!assignable(*t, m->params[i].type)) {
        error(*x.args[i], "argument " + std::to_string(i + 1) + " of '" +
                              x.method + "' has type " + t->str() +
                              ", expected " + m->params[i].type.str());
        ok = false;
      }
    }
    if (!ok) return std::nullopt;
    return m->result;
  }

  const Program& prog_;
  const VarTypeLookup& lookup_;
  Report report_;
};

enum class Ctx { MethodBody, IfBranch, Block, LoopBody };

class Checker {
 public:
  explicit Checker(const Program& p) : prog_(p) {}

  std::vector<SemanticError> run() {
    std::unordered_set<std::string> names;
    for (const auto& m : prog_.methods) {
      if (!valid_identifier(m.name))
        error(m.loc, "invalid method name '" + m.name + "'");
      if (!names.insert(m.name).second)
        error(m.loc, "duplicate method '" + m.name + "'");
    }
    const MethodDef* entry = prog_.find(prog_.entry);
    if (!entry)
      error({}, "entry method '" + prog_.entry + "' is not defined");
    else if (!entry->params.empty())
      error(entry->loc, "entry method '" + prog_.entry +
                            "' must take no parameters");
    for (const auto& m : prog_.methods) method(m);
    return std::move(errors_);
  }

 private:
  void error(SourceLoc loc, std::string msg) {
    errors_.push_back({loc, method_ ? method_->name : "", std::move(msg)});
  }

  std::optional<Type> lookup(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return f->second;
    }
    return std::nullopt;
  }

  void declare(SourceLoc loc, const std::string& name, const Type& t) {
    if (!valid_identifier(name)) {
      error(loc, "invalid identifier '" + name + "'");
      return;
    }
    if (t.kind() == Type::Kind::Void) {
      error(loc, "variable '" + name + "' cannot have type void");
      return;
    }
    if (lookup(name)) {
      error(loc, "declaration of '" + name + "' shadows a variable in scope");
      return;
    }
    scopes_.back()[name] = t;
  }

  std::optional<Type> type_of(const ExprPtr& e, bool call_ok = false) {
    if (!e) {
      error({}, "missing expression");
      return std::nullopt;
    }
    VarTypeLookup lk = [this](const std::string& n) { return lookup(n); };
    ExprTyper typer(prog_, lk, [this](SourceLoc loc, std::string msg) {
      error(loc, std::move(msg));
    });
    return typer.type(*e, call_ok);
  }

  void expect_type(const ExprPtr& e, const Type& want, const char* what,
                   bool call_ok = false) {
    auto t = type_of(e, call_ok);
    if (t && !assignable(*t, want))
      error(e->loc, std::string(what) + " has type " + t->str() +
                        ", expected " + want.str());
  }

  void method(const MethodDef& m) {
    method_ = &m;
    scopes_.clear();
    scopes_.emplace_back();
    for (const auto& p : m.params) {
      if (scopes_.back().count(p.name))
        error(m.loc, "duplicate parameter '" + p.name + "'");
      else
        declare(m.loc, p.name, p.type);
    }
    sequence(m.body, Ctx::MethodBody, false);
    if (m.ret) {
      if (m.result == Type::Void())
        error(m.ret->loc, "void method '" + m.name + "' returns a value");
      else
        expect_type(m.ret, m.result, "return value", true);
    } else if (m.result != Type::Void()) {
      error(m.loc, "method '" + m.name + "' must end with a return statement");
    }
    method_ = nullptr;
  }

  void scoped(const StmtList& body, Ctx ctx, bool in_loop) {
    scopes_.emplace_back();
    sequence(body, ctx, in_loop);
    scopes_.pop_back();
  }

  void sequence(const StmtList& body, Ctx ctx, bool in_loop) {
    for (size_t i = 0; i < body.size(); ++i) {
      const Stmt& s = *body[i];
      if (auto* r = s.as<Return>()) {
        bool last = i + 1 == body.size();
        if (in_loop)
          error(s.loc, "return not allowed inside loop");
        else if (!last || ctx != Ctx::IfBranch)
          // a trailing method-level return lives in MethodDef::ret
          error(s.loc, "return must be the last statement of an if-branch");
        if (method_->result == Type::Void())
          error(s.loc, "void method '" + method_->name + "' returns a value");
        else
          expect_type(r->value, method_->result, "return value", true);
        continue;
      }
      statement(s, in_loop);
    }
  }

  void statement(const Stmt& s, bool in_loop) {
    std::visit([&](const auto& x) { node(x, s, in_loop); }, s.node);
  }

  void node(const VarDecl& x, const Stmt& s, bool) {
    auto t = type_of(x.init, true);
    if (t && !assignable(*t, x.type))
      error(s.loc, "initializer of '" + x.name + "' has type " + t->str() +
                       ", expected " + x.type.str());
    declare(s.loc, x.name, x.type);
  }

  void node(const Assign& x, const Stmt& s, bool) {
    auto target = lookup(x.target);
    if (!target) {
      error(s.loc, "undeclared variable '" + x.target + "'");
      type_of(x.value);
      return;
    }
    expect_type(x.value, *target, "assigned value");
  }

  void node(const AssignIndex& x, const Stmt& s, bool) {
    auto target = lookup(x.target);
    if (!target) {
      error(s.loc, "undeclared variable '" + x.target + "'");
      return;
    }
    if (target->kind() != Type::Kind::Array) {
      error(s.loc, "indexed assignment to non-array '" + x.target + "'");
      return;
    }
    expect_type(x.index, Type::Int(), "array index");
    expect_type(x.value, target->elem(), "stored element");
  }

  void node(const CallAssign& x, const Stmt& s, bool) {
    auto e = make_expr(Call{x.method, x.args}, s.loc);
    auto t = type_of(e, true);
    if (!x.target) return;
    auto target = lookup(*x.target);
    if (!target) {
      error(s.loc, "undeclared variable '" + *x.target + "'");
      return;
    }
    if (t && !assignable(*t, *target))
      error(s.loc, "call result of type " + t->str() + " assigned to " +
                       target->str() + " variable '" + *x.target + "'");
  }

  void node(const If& x, const Stmt&, bool in_loop) {
    expect_type(x.cond, Type::Bool(), "if condition");
    scoped(x.then_body, Ctx::IfBranch, in_loop);
    if (x.else_body) scoped(*x.else_body, Ctx::IfBranch, in_loop);
  }

  void node(const While& x, const Stmt&, bool) {
    expect_type(x.cond, Type::Bool(), "loop condition");
    scoped(x.body, Ctx::LoopBody, true);
  }

  void node(const DoWhile& x, const Stmt&, bool) {
    scoped(x.body, Ctx::LoopBody, true);
    expect_type(x.cond, Type::Bool(), "loop condition");
  }

  void node(const For& x, const Stmt& s, bool) {
    scopes_.emplace_back();
    bool decls = !x.init.empty() && x.init.front()->is<VarDecl>();
    for (const auto& i : x.init) {
      if (decls) {
        auto* d = i->as<VarDecl>();
        if (!d || d->type != x.init.front()->as<VarDecl>()->type)
          error(i->loc, "for-init must declare variables of a single type");
      } else if (!i->is<Assign>()) {
        error(i->loc, "for-init must be declarations or assignments");
      }
      statement(*i, true);
    }
    expect_type(x.cond, Type::Bool(), "loop condition");
    for (const auto& u : x.update) {
      if (!u->is<Assign>() && !u->is<CallAssign>())
        error(u->loc, "for-update must be assignments or calls");
      statement(*u, true);
    }
    scoped(x.body, Ctx::LoopBody, true);
    scopes_.pop_back();
    (void)s;
  }

  void node(const Foreach& x, const Stmt& s, bool) {
    auto t = type_of(x.collection);
    if (t) {
      if (t->kind() != Type::Kind::Array && t->kind() != Type::Kind::List)
        error(s.loc, "foreach over non-collection type " + t->str());
      else if (t->elem() != x.elem_type)
        error(s.loc, "foreach element type " + x.elem_type.str() +
                         " does not match collection " + t->str());
    }
    scopes_.emplace_back();
    declare(s.loc, x.elem, x.elem_type);
    sequence(x.body, Ctx::LoopBody, true);
    scopes_.pop_back();
  }

  void node(const Block& x, const Stmt&, bool in_loop) {
    scoped(x.body, Ctx::Block, in_loop);
  }

  void node(const Return&, const Stmt&, bool) {}  // handled in sequence()

  void node(const Print& x, const Stmt& s, bool) {
    for (const auto& item : x.items) {
      if (auto* e = std::get_if<ExprPtr>(&item.item)) {
        auto t = type_of(*e);
        if (t && t->kind() == Type::Kind::Void)
          error(s.loc, "cannot print a void value");
      }
    }
  }

  const Program& prog_;
  const MethodDef* method_ = nullptr;
  std::vector<std::unordered_map<std::string, Type>> scopes_;
  std::vector<SemanticError> errors_;
};

}  // namespace

std::vector<SemanticError> check_semantics(const Program& p) {
  return Checker(p).run();
}

std::optional<Type> expr_type(const Expr& e, const Program& p,
                              const VarTypeLookup& lookup) {
  bool failed = false;
  ExprTyper typer(p, lookup, [&](SourceLoc, std::string) { failed = true; });
  auto t = typer.type(e, /*call_ok=*/true);
  if (failed) return std::nullopt;
  return t;
}

}  // namespace loop2rec
