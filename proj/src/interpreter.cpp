#include "loop2rec/interpreter.hpp"

#include <pthread.h>
#include <sys/mman.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <limits>

#include "loop2rec/analysis.hpp"

namespace loop2rec {

// ---------------------------------------------------------------------------
// Values

Value make_seq(bool is_list, Type elem, std::vector<Value> cells) {
  return Value(SeqValue{is_list, std::move(elem),
                        std::make_shared<std::vector<Value>>(std::move(cells))});
}

Value make_iter(IterValue it) { return Value(std::move(it)); }

Type runtime_type(const Value& v) {
  if (v.as<int32_t>()) return Type::Int();
  if (v.as<double>()) return Type::Double();
  if (v.as<bool>()) return Type::Bool();
  if (auto* s = v.as<SeqValue>())
    return s->is_list ? Type::ListOf(s->elem) : Type::ArrayOf(s->elem);
  if (auto* it = v.as<IterValue>()) return Type::IteratorOf((*it)->elem);
  return Type::Void();
}

namespace {

std::string render_double(double d) {
  if (std::isnan(d)) return "NaN";
  if (std::isinf(d)) return d > 0 ? "Infinity" : "-Infinity";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string render(const Value& v) {
  if (auto* i = v.as<int32_t>()) return std::to_string(*i);
  if (auto* d = v.as<double>()) return render_double(*d);
  if (auto* b = v.as<bool>()) return *b ? "true" : "false";
  if (auto* s = v.as<SeqValue>()) {
    std::string out = "[";
    for (size_t i = 0; i < s->cells->size(); ++i) {
      if (i) out += ", ";
      out += render((*s->cells)[i]);
    }
    return out + "]";
  }
  if (auto* it = v.as<IterValue>())
    return "iterator@" + std::to_string((*it)->pos);
  return "void";
}

bool identical(const Value& a, const Value& b) {
  if (a.v.index() != b.v.index()) return false;
  if (auto* i = a.as<int32_t>()) return *i == *b.as<int32_t>();
  if (auto* d = a.as<double>())
    return std::bit_cast<uint64_t>(*d) == std::bit_cast<uint64_t>(*b.as<double>());
  if (auto* x = a.as<bool>()) return *x == *b.as<bool>();
  if (auto* s = a.as<SeqValue>()) {
    auto* t = b.as<SeqValue>();
    if (s->is_list != t->is_list || s->elem != t->elem ||
        s->cells->size() != t->cells->size())
      return false;
    for (size_t i = 0; i < s->cells->size(); ++i)
      if (!identical((*s->cells)[i], (*t->cells)[i])) return false;
    return true;
  }
  if (auto* it = a.as<IterValue>()) {
    const IterCursor& x = **it;
    const IterCursor& y = **b.as<IterValue>();
    if (x.pos != y.pos || x.elem != y.elem ||
        x.cells->size() != y.cells->size())
      return false;
    for (size_t i = 0; i < x.cells->size(); ++i)
      if (!identical((*x.cells)[i], (*y.cells)[i])) return false;
    return true;
  }
  return true;  // both void
}

const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::EmptyState: return "EmptyState";
    case ErrorKind::SingleFrame: return "SingleFrame";
    case ErrorKind::MissingReturn: return "MissingReturn";
    case ErrorKind::UnboundVariable: return "UnboundVariable";
    case ErrorKind::TypeMismatch: return "TypeMismatch";
    case ErrorKind::DivisionByZero: return "DivisionByZero";
    case ErrorKind::IndexOutOfBounds: return "IndexOutOfBounds";
    case ErrorKind::ArityMismatch: return "ArityMismatch";
    case ErrorKind::UnknownMethod: return "UnknownMethod";
    case ErrorKind::CastFailure: return "CastFailure";
    case ErrorKind::IteratorExhausted: return "IteratorExhausted";
    case ErrorKind::StackOverflow: return "StackOverflow";
  }
  return "?";
}

const char* to_string(Rule r) {
  switch (r) {
    case Rule::NewMethod: return "NewMethod";
    case Rule::Declaration: return "Declaration";
    case Rule::Assignment: return "Assignment";
    case Rule::IndexAssignment: return "IndexAssignment";
    case Rule::AddFrame: return "AddFrame";
    case Rule::UpdVr: return "UpdVr";
    case Rule::RemFrame: return "RemFrame";
    case Rule::IfTrue: return "IfTrue";
    case Rule::IfFalse: return "IfFalse";
    case Rule::WhileTrue: return "WhileTrue";
    case Rule::WhileFalse: return "WhileFalse";
    case Rule::DoFirst: return "DoFirst";
    case Rule::ForeachNext: return "ForeachNext";
    case Rule::ForeachEnd: return "ForeachEnd";
    case Rule::Block: return "Block";
    case Rule::Return: return "Return";
    case Rule::Print: return "Print";
  }
  return "?";
}

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Ok: return "Ok";
    case RunStatus::BudgetExceeded: return "StepBudgetExceeded";
    case RunStatus::RuntimeError: return "RuntimeError";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// State functions

const Value* Frame::find(const std::string& name) const {
  for (auto it = bindings.rbegin(); it != bindings.rend(); ++it)
    if (it->first == name) return &it->second;
  return nullptr;
}

Value* Frame::find(const std::string& name) {
  for (auto it = bindings.rbegin(); it != bindings.rend(); ++it)
    if (it->first == name) return &it->second;
  return nullptr;
}

namespace {

void bind(Frame& f, const std::string& name, Value value) {
  if (Value* slot = f.find(name))
    *slot = std::move(value);
  else
    f.bindings.emplace_back(name, std::move(value));
}

}  // namespace

void upd_e(Env& env, const MethodDef& m) { env.methods[m.name] = &m; }

Env load(const Program& p) {
  Env env;
  for (const auto& m : p.methods) upd_e(env, m);
  return env;
}

void upd_v(State& s, const std::string& name, Value value) {
  if (s.frames.empty())
    throw RuntimeError(ErrorKind::EmptyState, "update of '" + name +
                                                  "' in an empty state");
  bind(s.frames.back(), name, std::move(value));
}

void upd_r(State& s, Value value) {
  if (s.frames.empty())
    throw RuntimeError(ErrorKind::EmptyState, "return in an empty state");
  s.frames.back().ret = std::move(value);
}

void upd_vr(State& s, const std::string& name) {
  if (s.frames.empty())
    throw RuntimeError(ErrorKind::EmptyState, "Upd_vr on an empty state");
  if (s.frames.size() == 1)
    throw RuntimeError(ErrorKind::SingleFrame, "Upd_vr needs two frames");
  const Frame& top = s.frames.back();
  if (!top.ret)
    throw RuntimeError(ErrorKind::MissingReturn,
                       "method '" + top.method + "' returned no value");
  bind(s.frames[s.frames.size() - 2], name, *top.ret);
}

void add_frame(State& s, const std::vector<Param>& params,
               std::vector<Value> args, std::string method) {
  if (params.size() != args.size())
    throw RuntimeError(ErrorKind::ArityMismatch,
                       "expected " + std::to_string(params.size()) +
                           " argument(s), got " + std::to_string(args.size()));
  Frame f;
  f.method = std::move(method);
  f.bindings.reserve(params.size());
  for (size_t i = 0; i < params.size(); ++i)
    f.bindings.emplace_back(params[i].name, std::move(args[i]));
  s.frames.push_back(std::move(f));
}

void add_frame(State& s, const std::vector<Param>& params, const ExprList& args,
               std::string method) {
  std::vector<Value> values;
  values.reserve(args.size());
  for (const auto& a : args) values.push_back(eval_expr(*a, s));
  add_frame(s, params, std::move(values), std::move(method));
}

void rem_frame(State& s) {
  if (s.frames.empty())
    throw RuntimeError(ErrorKind::EmptyState, "RemFrame on an empty state");
  s.frames.pop_back();
}

// ---------------------------------------------------------------------------
// Eval

namespace {

[[noreturn]] void type_error(const Expr& e, const std::string& what) {
  throw RuntimeError(ErrorKind::TypeMismatch, what, e.loc);
}

int32_t wrap(int64_t x) {
  return static_cast<int32_t>(static_cast<uint32_t>(static_cast<uint64_t>(x)));
}

// Java's narrowing of double to int.
int32_t double_to_int(double d) {
  if (std::isnan(d)) return 0;
  if (d >= 2147483647.0) return std::numeric_limits<int32_t>::max();
  if (d <= -2147483648.0) return std::numeric_limits<int32_t>::min();
  return static_cast<int32_t>(d);
}

class Evaluator {
 public:
  explicit Evaluator(const Frame& f) : frame_(f) {}

  Value eval(const Expr& e) {
    return std::visit([&](const auto& x) { return node(x, e); }, e.node);
  }

 private:
  Value node(const IntLit& x, const Expr&) { return Value::Int(x.value); }
  Value node(const DoubleLit& x, const Expr&) { return Value::Double(x.value); }
  Value node(const BoolLit& x, const Expr&) { return Value::Bool(x.value); }

  Value node(const Var& x, const Expr& e) {
    const Value* v = frame_.find(x.name);
    if (!v)
      throw RuntimeError(ErrorKind::UnboundVariable,
                         "unbound variable '" + x.name + "'", e.loc);
    return *v;
  }

  Value node(const Binary& x, const Expr& e) {
    if (x.op == BinaryOp::And || x.op == BinaryOp::Or) {
      bool l = boolean(*x.lhs);
      if (x.op == BinaryOp::And && !l) return Value::Bool(false);
      if (x.op == BinaryOp::Or && l) return Value::Bool(true);
      return Value::Bool(boolean(*x.rhs));
    }
    Value l = eval(*x.lhs);
    Value r = eval(*x.rhs);
    if (auto* a = l.as<int32_t>()) {
      auto* b = r.as<int32_t>();
      if (!b) type_error(e, "int operator on mixed operands");
      return ints(x.op, *a, *b, e);
    }
    if (auto* a = l.as<double>()) {
      auto* b = r.as<double>();
      if (!b) type_error(e, "double operator on mixed operands");
      return doubles(x.op, *a, *b, e);
    }
    if (auto* a = l.as<bool>()) {
      auto* b = r.as<bool>();
      if (!b) type_error(e, "boolean operator on mixed operands");
      if (x.op == BinaryOp::Eq) return Value::Bool(*a == *b);
      if (x.op == BinaryOp::Ne) return Value::Bool(*a != *b);
    }
    type_error(e, std::string("operator '") + spelling(x.op) +
                      "' on unsupported operands");
  }

  Value ints(BinaryOp op, int32_t a, int32_t b, const Expr& e) {
    int64_t x = a, y = b;
    switch (op) {
      case BinaryOp::Add: return Value::Int(wrap(x + y));
      case BinaryOp::Sub: return Value::Int(wrap(x - y));
      case BinaryOp::Mul: return Value::Int(wrap(x * y));
      case BinaryOp::Div:
        if (b == 0)
          throw RuntimeError(ErrorKind::DivisionByZero, "integer division by zero",
                             e.loc);
        return Value::Int(wrap(x / y));
      case BinaryOp::Eq: return Value::Bool(a == b);
      case BinaryOp::Ne: return Value::Bool(a != b);
      case BinaryOp::Lt: return Value::Bool(a < b);
      case BinaryOp::Le: return Value::Bool(a <= b);
      case BinaryOp::Gt: return Value::Bool(a > b);
      case BinaryOp::Ge: return Value::Bool(a >= b);
      default: type_error(e, "boolean operator on int operands");
    }
  }

  Value doubles(BinaryOp op, double a, double b, const Expr& e) {
    switch (op) {
      case BinaryOp::Add: return Value::Double(a + b);
      case BinaryOp::Sub: return Value::Double(a - b);
      case BinaryOp::Mul: return Value::Double(a * b);
      case BinaryOp::Div: return Value::Double(a / b);
      case BinaryOp::Eq: return Value::Bool(a == b);
      case BinaryOp::Ne: return Value::Bool(a != b);
      case BinaryOp::Lt: return Value::Bool(a < b);
      case BinaryOp::Le: return Value::Bool(a <= b);
      case BinaryOp::Gt: return Value::Bool(a > b);
      case BinaryOp::Ge: return Value::Bool(a >= b);
      default: type_error(e, "boolean operator on double operands");
    }
  }

  bool boolean(const Expr& e) {
    Value v = eval(e);
    auto* b = v.as<bool>();
    if (!b) type_error(e, "expected a boolean");
    return *b;
  }

  Value node(const Unary& x, const Expr& e) {
    Value v = eval(*x.operand);
    if (x.op == UnaryOp::Not) {
      if (auto* b = v.as<bool>()) return Value::Bool(!*b);
    } else {
      if (auto* i = v.as<int32_t>()) return Value::Int(wrap(-int64_t{*i}));
      if (auto* d = v.as<double>()) return Value::Double(-*d);
    }
    type_error(e, std::string("operator '") + spelling(x.op) +
                      "' on unsupported operand");
  }

  std::vector<Value> all(const ExprList& es) {
    std::vector<Value> out;
    out.reserve(es.size());
    for (const auto& e : es) out.push_back(eval(*e));
    return out;
  }

  Value node(const ArrayLit& x, const Expr&) {
    return make_seq(false, x.elem, all(x.elements));
  }
  Value node(const ListLit& x, const Expr&) {
    return make_seq(true, x.elem, all(x.elements));
  }

  Value node(const Index& x, const Expr& e) {
    Value a = eval(*x.array);
    Value i = eval(*x.index);
    auto* s = a.as<SeqValue>();
    auto* n = i.as<int32_t>();
    if (!s || s->is_list || !n) type_error(e, "indexing needs an array and an int");
    if (*n < 0 || static_cast<size_t>(*n) >= s->cells->size())
      throw RuntimeError(ErrorKind::IndexOutOfBounds,
                         "index " + std::to_string(*n) + " out of bounds for length " +
                             std::to_string(s->cells->size()),
                         e.loc);
    return (*s->cells)[static_cast<size_t>(*n)];
  }

  Value node(const Length& x, const Expr& e) {
    Value c = eval(*x.collection);
    auto* s = c.as<SeqValue>();
    if (!s) type_error(e, "length of a non-collection");
    return Value::Int(static_cast<int32_t>(s->cells->size()));
  }

  Value node(const Builtin& x, const Expr& e) {
    if (x.fn == BuiltinFn::Nan)
      return Value::Double(std::numeric_limits<double>::quiet_NaN());
    if (x.args.size() != 1) type_error(e, "builtin arity");
    Value a = eval(*x.args[0]);
    switch (x.fn) {
      case BuiltinFn::Abs:
        if (auto* i = a.as<int32_t>())
          return Value::Int(*i < 0 ? wrap(-int64_t{*i}) : *i);
        if (auto* d = a.as<double>()) return Value::Double(std::fabs(*d));
        break;
      case BuiltinFn::Iterator:
        if (auto* s = a.as<SeqValue>(); s && s->is_list) {
          auto cur = std::make_shared<IterCursor>();
          cur->cells = s->cells;
          cur->elem = s->elem;
          return make_iter(std::move(cur));
        }
        break;
      case BuiltinFn::HasNext:
        if (auto* it = a.as<IterValue>())
          return Value::Bool((*it)->pos < (*it)->cells->size());
        break;
      case BuiltinFn::Next:
        if (auto* it = a.as<IterValue>()) {
          IterCursor& c = **it;
          if (c.pos >= c.cells->size())
            throw RuntimeError(ErrorKind::IteratorExhausted,
                               "next on an exhausted iterator", e.loc);
          return (*c.cells)[c.pos++];
        }
        break;
      case BuiltinFn::Nan: break;
    }
    type_error(e, std::string(spelling(x.fn)) + " on unsupported operand");
  }

  Value node(const Cast& x, const Expr& e) {
    Value v = eval(*x.operand);
    const Type& t = x.target;
    if (t.kind() == Type::Kind::Object) return v;
    if (t.kind() == Type::Kind::Double) {
      if (auto* i = v.as<int32_t>()) return Value::Double(*i);
    }
    if (t.kind() == Type::Kind::Int) {
      if (auto* d = v.as<double>()) return Value::Int(double_to_int(*d));
    }
    if (runtime_type(v) == t) return v;
    throw RuntimeError(ErrorKind::CastFailure,
                       "cannot cast " + runtime_type(v).str() + " to " + t.str(),
                       e.loc);
  }

  Value node(const Call& x, const Expr& e) {
    type_error(e, "call to '" + x.method + "' outside a statement");
  }

  const Frame& frame_;
};

}  // namespace

Value eval_expr(const Expr& e, const State& s) {
  if (s.frames.empty())
    throw RuntimeError(ErrorKind::EmptyState, "evaluation in an empty state",
                       e.loc);
  return Evaluator(s.frames.back()).eval(e);
}

// ---------------------------------------------------------------------------
// Statements

namespace {

struct BudgetExceeded {};

enum class Flow { Normal, Returned };

class Machine {
 public:
  Machine(const Program& p, const RunOptions& opts, ExecTrace& trace)
      : prog_(p), opts_(opts), trace_(trace) {
    for (const auto& site : collect_loops(p)) {
      loop_ids_[site.loop] = site.id;
      trace_.loop_iterations[site.id] = 0;
    }
  }

  State state;

  void start() {
    for (const auto& m : prog_.methods) {
      upd_e(env_, m);
      event(Rule::NewMethod, m.loc);
    }
    auto it = env_.methods.find(prog_.entry);
    if (it == env_.methods.end())
      throw RuntimeError(ErrorKind::UnknownMethod,
                         "entry method '" + prog_.entry + "' not found");
    const MethodDef& entry = *it->second;
    add_frame(state, entry.params, std::vector<Value>{}, entry.name);
    ++trace_.method_entries[entry.name];
    event(Rule::AddFrame, entry.loc);
    run_body(entry);
  }

 private:
  void event(Rule r, SourceLoc loc) {
    if (++trace_.steps > opts_.budget) {
      trace_.steps = opts_.budget;
      throw BudgetExceeded{};
    }
    if (opts_.observer) {
      TraceEvent ev{r, loc, state.frames.size(),
                    state.frames.empty() ? "" : state.frames.back().method};
      opts_.observer(ev, state);
    }
  }

  Frame& top() { return state.frames.back(); }

  Value eval(const ExprPtr& e) {
    try {
      return eval_expr(*e, state);
    } catch (RuntimeError& err) {
      err.set_loc(e->loc);
      throw;
    }
  }

  void enter_scope() { top().scopes.push_back(top().bindings.size()); }
  void leave_scope() {
    Frame& f = top();
    f.bindings.resize(f.scopes.back());
    f.scopes.pop_back();
  }

  Flow scoped(const StmtList& body) {
    enter_scope();
    Flow fl = seq(body);
    leave_scope();
    return fl;
  }

  Flow seq(const StmtList& body) {
    for (const auto& s : body)
      if (exec(*s) == Flow::Returned) return Flow::Returned;
    return Flow::Normal;
  }

  // Body and trailing return of the method in the top frame.
  void run_body(const MethodDef& m) {
    if (seq(m.body) == Flow::Returned) return;
    if (m.ret) do_return(m.ret, m.ret->loc);
  }

  enum class Catch { Discard, Bind, Slot };

  // The method invocation rule: AddFrame, body, Upd_vr, RemFrame.
  // With Catch::Slot the callee's returned value is handed back instead.
  std::optional<Value> invoke(const std::string& name, const ExprList& args,
                              SourceLoc loc, Catch mode,
                              const std::string& target = "") {
    auto it = env_.methods.find(name);
    if (it == env_.methods.end())
      throw RuntimeError(ErrorKind::UnknownMethod,
                         "unknown method '" + name + "'", loc);
    const MethodDef& m = *it->second;
    if (state.frames.size() >= opts_.max_depth)
      throw RuntimeError(ErrorKind::StackOverflow,
                         "call depth limit reached in '" + name + "'", loc);
    std::vector<Value> values;
    values.reserve(args.size());
    for (const auto& a : args) values.push_back(eval(a));
    try {
      add_frame(state, m.params, std::move(values), m.name);
    } catch (RuntimeError& err) {
      err.set_loc(loc);
      throw;
    }
    ++trace_.method_entries[m.name];
    event(Rule::AddFrame, loc);
    run_body(m);

    std::optional<Value> out;
    if (mode == Catch::Bind) {
      try {
        upd_vr(state, target);
      } catch (RuntimeError& err) {
        err.set_loc(loc);
        throw;
      }
      event(Rule::UpdVr, loc);
    } else if (mode == Catch::Slot) {
      if (!top().ret)
        throw RuntimeError(ErrorKind::MissingReturn,
                           "method '" + name + "' returned no value", loc);
      out = *top().ret;
    }
    rem_frame(state);
    event(Rule::RemFrame, loc);
    return out;
  }

  Flow do_return(const ExprPtr& value, SourceLoc loc) {
    if (auto* c = value->as<Call>()) {
      auto v = invoke(c->method, c->args, loc, Catch::Slot);
      upd_r(state, std::move(*v));
    } else {
      upd_r(state, eval(value));
    }
    event(Rule::Return, loc);
    return Flow::Returned;
  }

  void count_iteration(const Stmt& loop) {
    auto it = loop_ids_.find(&loop);
    if (it != loop_ids_.end()) ++trace_.loop_iterations[it->second];
  }

  bool condition(const ExprPtr& cond) {
    Value v = eval(cond);
    auto* b = v.as<bool>();
    if (!b) throw RuntimeError(ErrorKind::TypeMismatch, "condition is not boolean",
                               cond->loc);
    return *b;
  }

  // While rules, shared by while/do/for: evaluates cond, then runs the body
  // (and updates) for as long as it holds.
  Flow iterate(const Stmt& loop, const ExprPtr& cond, const StmtList& body,
               const StmtList* update) {
    while (true) {
      if (!condition(cond)) {
        event(Rule::WhileFalse, loop.loc);
        return Flow::Normal;
      }
      event(Rule::WhileTrue, loop.loc);
      count_iteration(loop);
      if (scoped(body) == Flow::Returned) return Flow::Returned;
      if (update && seq(*update) == Flow::Returned) return Flow::Returned;
    }
  }

  Flow exec(const Stmt& s) {
    if (auto* d = s.as<VarDecl>()) {
      if (auto* c = d->init->as<Call>()) {
        invoke(c->method, c->args, s.loc, Catch::Bind, d->name);
      } else {
        Value v = eval(d->init);
        top().bindings.emplace_back(d->name, std::move(v));
        event(Rule::Declaration, s.loc);
      }
      return Flow::Normal;
    }
    if (auto* a = s.as<Assign>()) {
      upd_v(state, a->target, eval(a->value));
      event(Rule::Assignment, s.loc);
      return Flow::Normal;
    }
    if (auto* a = s.as<AssignIndex>()) {
      assign_index(*a, s.loc);
      event(Rule::IndexAssignment, s.loc);
      return Flow::Normal;
    }
    if (auto* c = s.as<CallAssign>()) {
      if (c->target)
        invoke(c->method, c->args, s.loc, Catch::Bind, *c->target);
      else
        invoke(c->method, c->args, s.loc, Catch::Discard);
      return Flow::Normal;
    }
    if (auto* i = s.as<If>()) {
      if (condition(i->cond)) {
        event(Rule::IfTrue, s.loc);
        return scoped(i->then_body);
      }
      event(Rule::IfFalse, s.loc);
      if (i->else_body) return scoped(*i->else_body);
      return Flow::Normal;
    }
    if (auto* w = s.as<While>()) return iterate(s, w->cond, w->body, nullptr);
    if (auto* d = s.as<DoWhile>()) {
      // do S while (c)  ==  S; while (c) S
      event(Rule::DoFirst, s.loc);
      count_iteration(s);
      if (scoped(d->body) == Flow::Returned) return Flow::Returned;
      return iterate(s, d->cond, d->body, nullptr);
    }
    if (auto* f = s.as<For>()) {
      enter_scope();
      Flow fl = seq(f->init);
      if (fl == Flow::Normal) fl = iterate(s, f->cond, f->body, &f->update);
      leave_scope();
      return fl;
    }
    if (auto* fe = s.as<Foreach>()) return foreach(s, *fe);
    if (auto* b = s.as<Block>()) {
      event(Rule::Block, s.loc);
      return scoped(b->body);
    }
    if (auto* r = s.as<Return>()) return do_return(r->value, s.loc);
    if (auto* p = s.as<Print>()) {
      std::string line;
      for (const auto& item : p->items) {
        if (auto* text = std::get_if<std::string>(&item.item))
          line += *text;
        else
          line += render(eval(std::get<ExprPtr>(item.item)));
      }
      trace_.prints.push_back(std::move(line));
      event(Rule::Print, s.loc);
      return Flow::Normal;
    }
    return Flow::Normal;
  }

  void assign_index(const AssignIndex& a, SourceLoc loc) {
    Value idx = eval(a.index);
    Value val = eval(a.value);
    Value* slot = top().find(a.target);
    if (!slot)
      throw RuntimeError(ErrorKind::UnboundVariable,
                         "unbound variable '" + a.target + "'", loc);
    auto* seqv = std::get_if<SeqValue>(&slot->v);
    auto* n = idx.as<int32_t>();
    if (!seqv || seqv->is_list || !n)
      throw RuntimeError(ErrorKind::TypeMismatch,
                         "indexed store needs an array and an int", loc);
    if (*n < 0 || static_cast<size_t>(*n) >= seqv->cells->size())
      throw RuntimeError(ErrorKind::IndexOutOfBounds,
                         "index " + std::to_string(*n) +
                             " out of bounds for length " +
                             std::to_string(seqv->cells->size()),
                         loc);
    if (seqv->cells.use_count() > 1)
      seqv->cells = std::make_shared<std::vector<Value>>(*seqv->cells);
    (*seqv->cells)[static_cast<size_t>(*n)] = std::move(val);
  }

  // Arrays step an index, lists an iterator; both evaluate the collection
  // once, before the first element.
  Flow foreach(const Stmt& s, const Foreach& fe) {
    Value coll = eval(fe.collection);
    auto* seqv = coll.as<SeqValue>();
    if (!seqv)
      throw RuntimeError(ErrorKind::TypeMismatch,
                         "foreach over a non-collection", s.loc);
    auto cells = seqv->cells;
    for (size_t i = 0; i < cells->size(); ++i) {
      event(Rule::ForeachNext, s.loc);
      count_iteration(s);
      enter_scope();
      top().bindings.emplace_back(fe.elem, (*cells)[i]);
      Flow fl = seq(fe.body);
      leave_scope();
      if (fl == Flow::Returned) return fl;
    }
    event(Rule::ForeachEnd, s.loc);
    return Flow::Normal;
  }

  const Program& prog_;
  const RunOptions& opts_;
  ExecTrace& trace_;
  Env env_;
  std::unordered_map<const Stmt*, int> loop_ids_;
};

void run_machine(const Program& p, const RunOptions& opts, ExecTrace& trace) {
  Machine m(p, opts, trace);
  try {
    m.start();
    trace.status = RunStatus::Ok;
  } catch (BudgetExceeded&) {
    trace.status = RunStatus::BudgetExceeded;
  } catch (RuntimeError& err) {
    trace.status = RunStatus::RuntimeError;
    trace.error = err.kind();
    trace.error_loc = err.loc();
    trace.error_message = err.what();
  }
  if (!m.state.frames.empty()) {
    const Frame& entry = m.state.frames.front();
    trace.final_bindings = entry.bindings;
    if (trace.status == RunStatus::Ok) trace.result = entry.ret;
  }
  // Deep states are torn down here, on the big stack.
  m.state.frames.clear();
}

struct ThreadJob {
  const Program* program;
  const RunOptions* opts;
  ExecTrace* trace;
  std::exception_ptr failure;
};

void* thread_main(void* arg) {
  auto* job = static_cast<ThreadJob*>(arg);
  try {
    run_machine(*job->program, *job->opts, *job->trace);
  } catch (...) {
    job->failure = std::current_exception();
  }
  return nullptr;
}

// Room for max_depth nested activations of the tree walker.
constexpr size_t kStackBytesPerFrame = 2048;
constexpr size_t kMinStack = size_t{64} << 20;

}  // namespace

ExecTrace run(const Program& p, const RunOptions& opts) {
  ExecTrace trace;
  size_t bytes = std::max(kMinStack, opts.max_depth * kStackBytesPerFrame);
  void* stack = mmap(nullptr, bytes, PROT_READ | PROT_WRITE,
                     MAP_PRIVATE | MAP_ANONYMOUS | MAP_NORESERVE | MAP_STACK,
                     -1, 0);
  ThreadJob job{&p, &opts, &trace, nullptr};
  bool ran = false;
  if (stack != MAP_FAILED) {
    pthread_attr_t attr;
    pthread_attr_init(&attr);
    pthread_attr_setstack(&attr, stack, bytes);
    pthread_t th;
    if (pthread_create(&th, &attr, thread_main, &job) == 0) {
      pthread_join(th, nullptr);
      ran = true;
    }
    pthread_attr_destroy(&attr);
    munmap(stack, bytes);
  }
  if (!ran) run_machine(p, opts, trace);
  if (job.failure) std::rethrow_exception(job.failure);
  return trace;
}

}  // namespace loop2rec
