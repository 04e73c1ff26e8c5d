#include "loop2rec/verify.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <unordered_set>

#include "json.hpp"
#include "loop2rec/analysis.hpp"
#include "loop2rec/parser.hpp"

namespace loop2rec {

// ---------------------------------------------------------------------------
// Differential runs

std::string DiffReport::detail() const {
  if (equivalent()) return "";
  return observable + ": " + original_value + " vs " + transformed_value;
}

namespace {

std::string status_text(const ExecTrace& t) {
  if (t.status == RunStatus::RuntimeError && t.error)
    return std::string(to_string(*t.error)) + " at " + to_string(t.error_loc);
  return to_string(t.status);
}

DiffReport mismatch(DiffReport r, std::string observable, std::string a,
                    std::string b) {
  r.verdict = Verdict::Mismatch;
  r.observable = std::move(observable);
  r.original_value = std::move(a);
  r.transformed_value = std::move(b);
  return r;
}

const Value* binding(const ExecTrace& t, const std::string& name) {
  for (const auto& [n, v] : t.final_bindings)
    if (n == name) return &v;
  return nullptr;
}

}  // namespace

DiffReport compare_traces(const ExecTrace& original,
                          const ExecTrace& transformed,
                          const std::vector<std::string>& ignore) {
  DiffReport r;
  r.original = original;
  r.transformed = transformed;
  const ExecTrace& a = original;
  const ExecTrace& b = transformed;

  bool a_budget = a.status == RunStatus::BudgetExceeded;
  bool b_budget = b.status == RunStatus::BudgetExceeded;
  if (a_budget && b_budget) return r;
  if (a_budget != b_budget || a.status != b.status)
    return mismatch(r, "status", status_text(a), status_text(b));

  size_t n = std::min(a.prints.size(), b.prints.size());
  for (size_t i = 0; i < n; ++i)
    if (a.prints[i] != b.prints[i])
      return mismatch(r, "print[" + std::to_string(i) + "]", a.prints[i],
                      b.prints[i]);
  if (a.prints.size() != b.prints.size())
    return mismatch(r, "print count", std::to_string(a.prints.size()),
                    std::to_string(b.prints.size()));

  if (a.status == RunStatus::RuntimeError) {
    if (a.error != b.error)
      return mismatch(r, "error", status_text(a), status_text(b));
    return r;
  }

  auto ignored = [&](const std::string& name) {
    return std::find(ignore.begin(), ignore.end(), name) != ignore.end();
  };
  for (const auto& [name, va] : a.final_bindings) {
    if (ignored(name)) continue;
    const Value* vb = binding(b, name);
    if (!vb) return mismatch(r, "var " + name, render(va), "<unbound>");
    if (!identical(va, *vb))
      return mismatch(r, "var " + name, render(va), render(*vb));
  }
  for (const auto& [name, vb] : b.final_bindings) {
    if (ignored(name) || binding(a, name)) continue;
    return mismatch(r, "var " + name, "<unbound>", render(vb));
  }
  if (a.result.has_value() != b.result.has_value() ||
      (a.result && !identical(*a.result, *b.result)))
    return mismatch(r, "result", a.result ? render(*a.result) : "<none>",
                    b.result ? render(*b.result) : "<none>");
  return r;
}

DiffReport diff_run(const Program& p, const TransformOptions& opts,
                    uint64_t budget) {
  RunOptions ro;
  ro.budget = budget;
  TransformResult tr = transform_program(p, opts);
  ExecTrace original = run(p, ro);
  ExecTrace transformed = run(tr.program, ro);

  std::vector<std::string> before = all_identifiers(p);
  std::unordered_set<std::string> known(before.begin(), before.end());
  std::vector<std::string> fresh;
  for (const auto& id : all_identifiers(tr.program))
    if (!known.count(id)) fresh.push_back(id);

  DiffReport r = compare_traces(original, transformed, fresh);
  r.transformed_program = std::move(tr.program);
  r.loops = std::move(tr.report);
  return r;
}

// ---------------------------------------------------------------------------
// Tail position

namespace {

bool calls_self(const ExprPtr& e, const std::string& self);

bool any_self(const ExprList& es, const std::string& self) {
  for (const auto& e : es)
    if (calls_self(e, self)) return true;
  return false;
}

bool calls_self(const ExprPtr& e, const std::string& self) {
  if (!e) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Call>) {
          return x.method == self || any_self(x.args, self);
        } else if constexpr (std::is_same_v<T, Binary>) {
          return calls_self(x.lhs, self) || calls_self(x.rhs, self);
        } else if constexpr (std::is_same_v<T, Unary>) {
          return calls_self(x.operand, self);
        } else if constexpr (std::is_same_v<T, ArrayLit> ||
                             std::is_same_v<T, ListLit>) {
          return any_self(x.elements, self);
        } else if constexpr (std::is_same_v<T, Index>) {
          return calls_self(x.array, self) || calls_self(x.index, self);
        } else if constexpr (std::is_same_v<T, Length>) {
          return calls_self(x.collection, self);
        } else if constexpr (std::is_same_v<T, Builtin>) {
          return any_self(x.args, self);
        } else if constexpr (std::is_same_v<T, Cast>) {
          return calls_self(x.operand, self);
        } else {
          return false;
        }
      },
      e->node);
}

// A self-call is acceptable as `return self(..)` anywhere, or as a bare
// `self(..);` when nothing runs after it in a void method.
bool tail_ok_seq(const StmtList& body, const std::string& self,
                 bool tail_context);

bool tail_ok_stmt(const Stmt& s, const std::string& self, bool in_tail) {
  if (auto* r = s.as<Return>()) {
    if (auto* c = r->value->as<Call>()) return !any_self(c->args, self);
    return !calls_self(r->value, self);
  }
  if (auto* c = s.as<CallAssign>()) {
    if (any_self(c->args, self)) return false;
    if (c->method != self) return true;
    return in_tail && !c->target;
  }
  if (auto* d = s.as<VarDecl>()) return !calls_self(d->init, self);
  if (auto* a = s.as<Assign>()) return !calls_self(a->value, self);
  if (auto* a = s.as<AssignIndex>())
    return !calls_self(a->index, self) && !calls_self(a->value, self);
  if (auto* i = s.as<If>()) {
    if (calls_self(i->cond, self)) return false;
    if (!tail_ok_seq(i->then_body, self, in_tail)) return false;
    return !i->else_body || tail_ok_seq(*i->else_body, self, in_tail);
  }
  if (auto* b = s.as<Block>()) return tail_ok_seq(b->body, self, in_tail);
  if (auto* p = s.as<Print>()) {
    for (const auto& item : p->items)
      if (auto* e = std::get_if<ExprPtr>(&item.item))
        if (calls_self(*e, self)) return false;
    return true;
  }
  // loops: nothing inside them is in tail position
  if (auto* w = s.as<While>())
    return !calls_self(w->cond, self) && tail_ok_seq(w->body, self, false);
  if (auto* d = s.as<DoWhile>())
    return !calls_self(d->cond, self) && tail_ok_seq(d->body, self, false);
  if (auto* f = s.as<For>())
    return tail_ok_seq(f->init, self, false) && !calls_self(f->cond, self) &&
           tail_ok_seq(f->update, self, false) &&
           tail_ok_seq(f->body, self, false);
  if (auto* fe = s.as<Foreach>())
    return !calls_self(fe->collection, self) &&
           tail_ok_seq(fe->body, self, false);
  return true;
}

bool tail_ok_seq(const StmtList& body, const std::string& self,
                 bool tail_context) {
  for (size_t i = 0; i < body.size(); ++i) {
    bool last = i + 1 == body.size();
    if (!tail_ok_stmt(*body[i], self, tail_context && last)) return false;
  }
  return true;
}

}  // namespace

bool tail_position_check(const MethodDef& m) {
  bool void_tail = m.result == Type::Void() && !m.ret;
  if (!tail_ok_seq(m.body, m.name, void_tail)) return false;
  if (!m.ret) return true;
  if (auto* c = m.ret->as<Call>()) return !any_self(c->args, m.name);
  return !calls_self(m.ret, m.name);
}

// ---------------------------------------------------------------------------
// Iteration / call equality

bool IterationReport::ok() const {
  return std::all_of(loops.begin(), loops.end(),
                     [](const LoopCallCount& c) { return c.ok(); });
}

IterationReport iteration_call_equality(const ExecTrace& original,
                                        const ExecTrace& transformed,
                                        const std::vector<LoopReport>& loops) {
  IterationReport rep;
  for (const auto& l : loops) {
    LoopCallCount c;
    c.loop_id = l.loop_id;
    c.loop_method_name = l.loop_method_name;
    if (auto it = original.loop_iterations.find(l.loop_id);
        it != original.loop_iterations.end())
      c.iterations = it->second;
    if (auto it = transformed.method_entries.find(l.loop_method_name);
        it != transformed.method_entries.end())
      c.entries = it->second;
    rep.loops.push_back(c);
  }
  return rep;
}

IterationReport iteration_call_equality(const Program& p, uint64_t budget,
                                        const TransformOptions& opts) {
  RunOptions ro;
  ro.budget = budget;
  ExecTrace original = run(p, ro);
  if (original.status == RunStatus::BudgetExceeded)
    throw StepBudgetExceeded("original program exceeded the step budget");
  TransformResult tr = transform_program(p, opts);
  ExecTrace transformed = run(tr.program, ro);
  if (transformed.status == RunStatus::BudgetExceeded)
    throw StepBudgetExceeded("transformed program exceeded the step budget");
  return iteration_call_equality(original, transformed, tr.report);
}

// ---------------------------------------------------------------------------
// Loop erasure

namespace {

StmtList erase_in(const StmtList& body) {
  StmtList out;
  for (const auto& s : body) {
    if (auto* f = s->as<For>()) {
      if (!f->init.empty()) {
        bool decls = f->init.front()->is<VarDecl>();
        if (decls)
          out.push_back(make_stmt(Block{f->init}, s->loc));
        else
          out.insert(out.end(), f->init.begin(), f->init.end());
      }
      continue;
    }
    if (s->is_loop()) continue;
    if (auto* i = s->as<If>()) {
      If copy{i->cond, erase_in(i->then_body), std::nullopt};
      if (i->else_body) copy.else_body = erase_in(*i->else_body);
      out.push_back(make_stmt(std::move(copy), s->loc));
    } else if (auto* b = s->as<Block>()) {
      out.push_back(make_stmt(Block{erase_in(b->body)}, s->loc));
    } else {
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace

Program erase_loops(const Program& p) {
  Program out = p;
  for (auto& m : out.methods) m.body = erase_in(m.body);
  return out;
}

// ---------------------------------------------------------------------------
// Generator

namespace {

class Generator {
 public:
  explicit Generator(const GenConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {}

  Program program() {
    Program p;
    int helpers = below(cfg_.max_helpers + 1);
    for (int i = 0; i < helpers; ++i) p.methods.push_back(helper(i));
    p.methods.push_back(main_method());
    return p;
  }

 private:
  struct VarInfo {
    std::string name;
    Type type;
    int len = -1;  // arrays: fixed length
    Type under;    // Object: type of the stored value

    VarInfo(std::string n, Type t, int l = -1, Type u = Type::Void())
        : name(std::move(n)), type(std::move(t)), len(l), under(std::move(u)) {}
  };

  struct Helper {
    std::string name;
    Type result;
    std::vector<Type> params;
    bool has_loops;
  };

  // ---- randomness: plain modulo so results do not depend on the
  // standard library's distribution algorithms
  int below(int n) {
    return n <= 1 ? 0 : static_cast<int>(rng_() % static_cast<uint64_t>(n));
  }
  int range(int lo, int hi) { return lo + below(hi - lo + 1); }
  bool chance(int pct) { return below(100) < pct; }

  std::string fresh() { return "v" + std::to_string(next_var_++); }

  // ---- scopes
  size_t mark() const { return vars_.size(); }
  void release(size_t m) { vars_.erase(vars_.begin() + m, vars_.end()); }
  void declare(VarInfo v) { vars_.push_back(std::move(v)); }
  bool is_protected(const std::string& n) const { return protected_.count(n); }

  std::vector<const VarInfo*> visible(const Type& t) const {
    std::vector<const VarInfo*> out;
    for (const auto& v : vars_)
      if (v.type == t) out.push_back(&v);
    return out;
  }
  std::vector<const VarInfo*> assignable() const {
    std::vector<const VarInfo*> out;
    for (const auto& v : vars_) {
      if (is_protected(v.name)) continue;
      if (v.type.kind() == Type::Kind::Iterator) continue;
      if (v.type.kind() == Type::Kind::Array && v.len == 0) continue;
      out.push_back(&v);
    }
    return out;
  }
  const VarInfo* lookup(const std::string& n) const {
    for (auto it = vars_.rbegin(); it != vars_.rend(); ++it)
      if (it->name == n) return &*it;
    return nullptr;
  }

  // ---- expressions
  ExprPtr int_leaf() {
    auto vs = visible(Type::Int());
    if (!vs.empty() && chance(65)) return var(vs[below(vs.size())]->name);
    return int_lit(range(0, 9));
  }
  ExprPtr double_leaf() {
    auto vs = visible(Type::Double());
    if (!vs.empty() && chance(65)) return var(vs[below(vs.size())]->name);
    static const double kLits[] = {0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0};
    return double_lit(kLits[below(8)]);
  }
  ExprPtr bool_leaf() {
    auto vs = visible(Type::Bool());
    if (!vs.empty() && chance(50)) return var(vs[below(vs.size())]->name);
    return bool_lit(chance(50));
  }

  // Arrays of `elem` that have at least one cell.
  std::vector<const VarInfo*> indexable(const Type& elem) const {
    std::vector<const VarInfo*> out;
    for (const auto* v : visible(Type::ArrayOf(elem)))
      if (v->len > 0) out.push_back(v);
    return out;
  }
  std::vector<const VarInfo*> collections() const {
    std::vector<const VarInfo*> out;
    for (const auto& v : vars_)
      if (v.type.kind() == Type::Kind::Array ||
          v.type.kind() == Type::Kind::List)
        out.push_back(&v);
    return out;
  }
  std::vector<const VarInfo*> objects(const Type& under) const {
    std::vector<const VarInfo*> out;
    for (const auto& v : vars_)
      if (v.type == Type::Object() && v.under == under) out.push_back(&v);
    return out;
  }

  ExprPtr int_expr(int depth) {
    if (depth <= 0 || chance(35)) return int_leaf();
    switch (below(10)) {
      case 0: return binary(BinaryOp::Add, int_expr(depth - 1), int_expr(depth - 1));
      case 1: return binary(BinaryOp::Sub, int_expr(depth - 1), int_expr(depth - 1));
      case 2: return binary(BinaryOp::Mul, int_expr(depth - 1), int_leaf());
      case 3:
        return binary(BinaryOp::Div, int_expr(depth - 1), int_lit(range(1, 4)));
      case 4: return unary(UnaryOp::Neg, int_leaf());
      case 5: return builtin(BuiltinFn::Abs, {int_expr(depth - 1)});
      case 6: {
        auto cs = collections();
        if (cs.empty()) break;
        return make_expr(Length{var(cs[below(cs.size())]->name)});
      }
      case 7: {
        auto as = indexable(Type::Int());
        if (as.empty()) break;
        const VarInfo* a = as[below(as.size())];
        return make_expr(Index{var(a->name), int_lit(below(a->len))});
      }
      case 8:
        return make_expr(Cast{Type::Int(), double_expr(depth - 1)});
      case 9: {
        auto os = objects(Type::Int());
        if (os.empty()) break;
        return make_expr(Cast{Type::Int(), var(os[below(os.size())]->name)});
      }
    }
    return binary(BinaryOp::Add, int_leaf(), int_leaf());
  }

  ExprPtr double_expr(int depth) {
    if (depth <= 0 || chance(35)) return double_leaf();
    switch (below(9)) {
      case 0: return binary(BinaryOp::Add, double_expr(depth - 1), double_expr(depth - 1));
      case 1: return binary(BinaryOp::Sub, double_expr(depth - 1), double_expr(depth - 1));
      case 2: return binary(BinaryOp::Mul, double_expr(depth - 1), double_leaf());
      case 3: return binary(BinaryOp::Div, double_expr(depth - 1), double_leaf());
      case 4: return builtin(BuiltinFn::Abs, {double_expr(depth - 1)});
      case 5: return make_expr(Cast{Type::Double(), int_expr(depth - 1)});
      case 6: {
        auto as = indexable(Type::Double());
        if (as.empty()) break;
        const VarInfo* a = as[below(as.size())];
        return make_expr(Index{var(a->name), int_lit(below(a->len))});
      }
      case 7: return unary(UnaryOp::Neg, double_leaf());
      case 8: {
        auto os = objects(Type::Double());
        if (os.empty()) break;
        return make_expr(Cast{Type::Double(), var(os[below(os.size())]->name)});
      }
    }
    return binary(BinaryOp::Mul, double_leaf(), double_leaf());
  }

  BinaryOp comparison() {
    static const BinaryOp kOps[] = {BinaryOp::Lt, BinaryOp::Le, BinaryOp::Gt,
                                    BinaryOp::Ge, BinaryOp::Eq, BinaryOp::Ne};
    return kOps[below(6)];
  }

  ExprPtr bool_expr(int depth) {
    if (depth <= 0 || chance(25)) return bool_leaf();
    switch (below(6)) {
      case 0:
      case 1: return binary(comparison(), int_expr(depth - 1), int_expr(depth - 1));
      case 2: return binary(comparison(), double_expr(depth - 1), double_expr(depth - 1));
      case 3: return binary(BinaryOp::And, bool_expr(depth - 1), bool_expr(depth - 1));
      case 4: return binary(BinaryOp::Or, bool_expr(depth - 1), bool_expr(depth - 1));
      default: return unary(UnaryOp::Not, bool_expr(depth - 1));
    }
  }

  ExprPtr expr(const Type& t, int depth = 2) {
    switch (t.kind()) {
      case Type::Kind::Int: return int_expr(depth);
      case Type::Kind::Double: return double_expr(depth);
      case Type::Kind::Bool: return bool_expr(depth);
      default: break;
    }
    throw std::logic_error("generator: no expression for " + t.str());
  }

  ExprPtr collection_literal(bool is_list, const Type& elem, int len) {
    ExprList cells;
    for (int i = 0; i < len; ++i) cells.push_back(expr(elem, 1));
    if (is_list) return make_expr(ListLit{elem, std::move(cells)});
    return make_expr(ArrayLit{elem, std::move(cells)});
  }

  int collection_len() {
    if (cfg_.zero_trip) return 0;
    return range(0, cfg_.max_iterations);
  }

  Type prim() {
    switch (below(10)) {
      case 0: case 1: case 2: case 3: return Type::Int();
      case 4: case 5: case 6: return Type::Double();
      default: return Type::Bool();
    }
  }
  Type elem_type() { return chance(50) ? Type::Int() : Type::Double(); }

  // ---- statements
  StmtPtr declaration() {
    int roll = below(100);
    std::string name = fresh();
    if (roll < 78) {
      Type t = prim();
      auto init = expr(t);
      declare({name, t});
      return make_stmt(VarDecl{t, name, init});
    }
    if (roll < 88) {
      Type elem = elem_type();
      int len = range(1, 4);
      auto init = collection_literal(false, elem, len);
      declare({name, Type::ArrayOf(elem), len});
      return make_stmt(VarDecl{Type::ArrayOf(elem), name, init});
    }
    if (roll < 95) {
      Type elem = elem_type();
      auto init = collection_literal(true, elem, range(0, 4));
      declare({name, Type::ListOf(elem)});
      return make_stmt(VarDecl{Type::ListOf(elem), name, init});
    }
    Type under = elem_type();
    auto init = expr(under);
    declare({name, Type::Object(), -1, under});
    return make_stmt(VarDecl{Type::Object(), name, init});
  }

  StmtPtr assignment() {
    auto targets = assignable();
    if (targets.empty()) return declaration();
    const VarInfo* v = targets[below(targets.size())];
    const Type& t = v->type;
    if (t.is_primitive()) return make_stmt(Assign{v->name, expr(t)});
    if (t.kind() == Type::Kind::Object)
      return make_stmt(Assign{v->name, expr(v->under)});
    if (t.kind() == Type::Kind::Array) {
      if (chance(75))
        return make_stmt(AssignIndex{v->name, int_lit(below(v->len)),
                                     expr(t.elem())});
      return make_stmt(
          Assign{v->name, collection_literal(false, t.elem(), v->len)});
    }
    return make_stmt(
        Assign{v->name, collection_literal(true, t.elem(), range(0, 4))});
  }

  StmtPtr print_stmt() {
    std::vector<PrintItem> items;
    int n = range(1, 3);
    for (int i = 0; i < n; ++i) {
      if (chance(30)) items.push_back({std::string(" ")});
      auto vs = assignable();
      if (!vs.empty() && chance(60)) {
        items.push_back({std::string(vs[below(vs.size())]->name + "=")});
        items.push_back({ExprPtr(var(vs[below(vs.size())]->name))});
      } else {
        items.push_back({ExprPtr(expr(prim()))});
      }
    }
    return make_stmt(Print{std::move(items)});
  }

  // Helpers callable here: loop-carrying ones only outside loops.
  std::vector<const Helper*> callable(bool want_void) const {
    std::vector<const Helper*> out;
    for (const auto& h : helpers_) {
      if (h.has_loops && loop_depth_ > 0) continue;
      if ((h.result == Type::Void()) != want_void) continue;
      out.push_back(&h);
    }
    return out;
  }

  ExprList call_args(const Helper& h) {
    ExprList args;
    for (const auto& t : h.params) args.push_back(expr(t, 1));
    return args;
  }

  StmtPtr call_stmt() {
    if (chance(35)) {
      auto hs = callable(true);
      if (!hs.empty()) {
        const Helper* h = hs[below(hs.size())];
        return make_stmt(CallAssign{std::nullopt, h->name, call_args(*h)});
      }
    }
    auto hs = callable(false);
    if (hs.empty()) return assignment();
    const Helper* h = hs[below(hs.size())];
    std::vector<const VarInfo*> targets;
    for (const auto* v : assignable())
      if (v->type == h->result) targets.push_back(v);
    if (!targets.empty() && chance(60)) {
      return make_stmt(CallAssign{targets[below(targets.size())]->name,
                                  h->name, call_args(*h)});
    }
    std::string name = fresh();
    auto init = call(h->name, call_args(*h));
    declare({name, h->result});
    return make_stmt(VarDecl{h->result, name, init});
  }

  StmtPtr if_stmt(int budget) {
    auto cond = bool_expr(2);
    StmtList then_body = block(std::max(1, budget / 2));
    std::optional<StmtList> else_body;
    if (chance(45)) else_body = block(std::max(1, budget / 2));
    return make_stmt(If{cond, std::move(then_body), std::move(else_body)});
  }

  StmtList block(int budget) {
    size_t m = mark();
    StmtList out;
    int n = range(1, std::max(1, budget));
    for (int i = 0; i < n; ++i) statement(out, budget - 1);
    release(m);
    return out;
  }

  void statement(StmtList& out, int budget) {
    bool loop_ok = loops_left_ > 0 && loop_depth_ < cfg_.max_depth;
    int roll = below(100);
    if (loop_ok && roll < 30) return loop(out);
    if (roll < 45) return out.push_back(declaration());
    if (roll < 70) return out.push_back(assignment());
    if (roll < 78) return out.push_back(print_stmt());
    if (roll < 88) return out.push_back(call_stmt());
    if (roll < 96 && budget > 0) return out.push_back(if_stmt(budget));
    out.push_back(make_stmt(Block{block(std::max(1, budget))}));
  }

  // ---- loops
  int counter_bound() {
    if (cfg_.zero_trip) return 0;
    return range(0, cfg_.max_iterations);
  }

  StmtList body_with(int budget, StmtList tail = {}) {
    size_t m = mark();
    StmtList out;
    int n = range(1, std::max(1, budget));
    for (int i = 0; i < n; ++i) statement(out, budget - 1);
    release(m);
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
  }

  struct Guard {
    std::multiset<std::string>* set;
    std::vector<std::string> names;
    Guard(std::multiset<std::string>& s, std::vector<std::string> n)
        : set(&s), names(std::move(n)) {
      for (const auto& x : names) set->insert(x);
    }
    ~Guard() {
      for (const auto& x : names) set->erase(set->find(x));
    }
  };

  // Counter step; in unbounded mode sometimes the wrong way.
  StmtPtr step(const std::string& c, BinaryOp toward) {
    BinaryOp op = toward;
    if (cfg_.unbounded && chance(50))
      op = toward == BinaryOp::Sub ? BinaryOp::Add : BinaryOp::Sub;
    return make_stmt(Assign{c, binary(op, var(c), int_lit(1))});
  }

  // Optional extra conjunct on a counter guard.
  ExprPtr guard_with(ExprPtr base) {
    if (!cfg_.zero_trip && chance(20))
      return binary(BinaryOp::And, base, bool_expr(1));
    return base;
  }

  void loop(StmtList& out) {
    --loops_left_;
    const LoopWeights& w = cfg_.weights;
    int do_w = cfg_.zero_trip ? 0 : w.do_loop;
    int weights[] = {w.while_loop, do_w, w.for_loop, w.foreach_array,
                     w.foreach_list, w.iterator_while};
    int total = 0;
    for (int x : weights) total += std::max(0, x);
    int roll = below(std::max(1, total));
    int kind = 0;
    for (; kind < 5; ++kind) {
      roll -= std::max(0, weights[kind]);
      if (roll < 0) break;
    }
    ++loop_depth_;
    int budget = std::max(1, cfg_.max_stmts - loop_depth_);
    switch (kind) {
      case 0: while_loop(out, budget); break;
      case 1: do_loop(out, budget); break;
      case 2: for_loop(out, budget); break;
      case 3: foreach_loop(out, budget, false); break;
      case 4: foreach_loop(out, budget, true); break;
      default: iterator_loop(out, budget); break;
    }
    --loop_depth_;
  }

  void while_loop(StmtList& out, int budget) {
    std::string c = fresh();
    int k = counter_bound();
    out.push_back(make_stmt(VarDecl{Type::Int(), c, int_lit(k)}));
    declare({c, Type::Int()});
    Guard g(protected_, {c});
    ExprPtr cond = guard_with(binary(BinaryOp::Gt, var(c), int_lit(0)));
    StmtList body = body_with(budget, {step(c, BinaryOp::Sub)});
    out.push_back(make_stmt(While{cond, std::move(body)}));
  }

  void do_loop(StmtList& out, int budget) {
    std::string c = fresh();
    int k = counter_bound();
    out.push_back(make_stmt(VarDecl{Type::Int(), c, int_lit(k)}));
    declare({c, Type::Int()});
    Guard g(protected_, {c});
    StmtList body = body_with(budget, {step(c, BinaryOp::Sub)});
    ExprPtr cond = guard_with(binary(BinaryOp::Gt, var(c), int_lit(0)));
    out.push_back(make_stmt(DoWhile{std::move(body), cond}));
  }

  void for_loop(StmtList& out, int budget) {
    int k = counter_bound();
    int shape = below(3);
    if (shape == 0) {
      // for (int c = 0; c < k; c = c + 1)
      std::string c = fresh();
      size_t m = mark();
      declare({c, Type::Int()});
      Guard g(protected_, {c});
      ExprPtr cond = guard_with(binary(BinaryOp::Lt, var(c), int_lit(k)));
      StmtList body = body_with(budget);
      release(m);
      out.push_back(make_stmt(For{{make_stmt(VarDecl{Type::Int(), c, int_lit(0)})},
                                  cond,
                                  {step(c, BinaryOp::Add)},
                                  std::move(body)}));
    } else if (shape == 1) {
      // for (int c = 0, d = k; c < d; c = c + 1, d = d - 1)
      std::string c = fresh(), d = fresh();
      size_t m = mark();
      declare({c, Type::Int()});
      declare({d, Type::Int()});
      Guard g(protected_, {c, d});
      int hi = cfg_.zero_trip ? 0 : 2 * k;
      ExprPtr cond = binary(BinaryOp::Lt, var(c), var(d));
      StmtList body = body_with(budget);
      release(m);
      out.push_back(make_stmt(
          For{{make_stmt(VarDecl{Type::Int(), c, int_lit(0)}),
               make_stmt(VarDecl{Type::Int(), d, int_lit(hi)})},
              cond,
              {step(c, BinaryOp::Add), step(d, BinaryOp::Sub)},
              std::move(body)}));
    } else {
      // int c = 7; for (c = 0; c < k; c = c + 1)
      std::string c = fresh();
      out.push_back(make_stmt(VarDecl{Type::Int(), c, int_lit(range(0, 9))}));
      declare({c, Type::Int()});
      Guard g(protected_, {c});
      ExprPtr cond = guard_with(binary(BinaryOp::Lt, var(c), int_lit(k)));
      StmtList body = body_with(budget);
      out.push_back(make_stmt(For{{make_stmt(Assign{c, int_lit(0)})},
                                  cond,
                                  {step(c, BinaryOp::Add)},
                                  std::move(body)}));
    }
  }

  void foreach_loop(StmtList& out, int budget, bool is_list) {
    Type elem = elem_type();
    Type coll_t = is_list ? Type::ListOf(elem) : Type::ArrayOf(elem);
    ExprPtr coll;
    std::vector<std::string> guarded;
    std::vector<const VarInfo*> existing;
    for (const auto* v : visible(coll_t))
      if (!cfg_.zero_trip || v->len == 0) existing.push_back(v);
    if (!existing.empty() && chance(60)) {
      const VarInfo* v = existing[below(existing.size())];
      coll = var(v->name);
      guarded.push_back(v->name);
    } else if (chance(50)) {
      std::string n = fresh();
      int len = collection_len();
      out.push_back(make_stmt(
          VarDecl{coll_t, n, collection_literal(is_list, elem, len)}));
      declare({n, coll_t, is_list ? -1 : len});
      coll = var(n);
      guarded.push_back(n);
    } else {
      coll = collection_literal(is_list, elem, collection_len());
    }
    Guard g(protected_, guarded);
    std::string e = fresh();
    size_t m = mark();
    declare({e, elem});
    StmtList body = body_with(budget);
    release(m);
    out.push_back(make_stmt(Foreach{elem, e, coll, std::move(body)}));
  }

  void iterator_loop(StmtList& out, int budget) {
    Type elem = elem_type();
    std::string l = fresh(), it = fresh(), e = fresh();
    out.push_back(make_stmt(VarDecl{Type::ListOf(elem), l,
                                    collection_literal(true, elem, collection_len())}));
    declare({l, Type::ListOf(elem)});
    out.push_back(make_stmt(VarDecl{Type::IteratorOf(elem), it,
                                    builtin(BuiltinFn::Iterator, {var(l)})}));
    declare({it, Type::IteratorOf(elem)});
    Guard g(protected_, {l, it});
    size_t m = mark();
    declare({e, elem});
    StmtList body = body_with(budget);
    release(m);
    body.insert(body.begin(), make_stmt(VarDecl{elem, e, builtin(BuiltinFn::Next, {var(it)})}));
    out.push_back(make_stmt(
        While{builtin(BuiltinFn::HasNext, {var(it)}), std::move(body)}));
  }

  // ---- methods
  StmtList method_body(int stmts, bool ensure_loop) {
    StmtList out;
    for (int i = 0; i < stmts; ++i) statement(out, cfg_.max_stmts);
    if (ensure_loop && loops_left_ == cfg_.max_loops && loops_left_ > 0)
      loop(out);
    return out;
  }

  MethodDef helper(int index) {
    MethodDef m;
    m.name = "h" + std::to_string(index);
    int r = below(3);
    m.result = r == 0 ? Type::Int() : r == 1 ? Type::Double() : Type::Void();
    vars_.clear();
    int np = range(1, 3);
    std::vector<Type> ptypes;
    for (int i = 0; i < np; ++i) {
      Type t = prim();
      std::string n = fresh();
      m.params.push_back({n, t});
      declare({n, t});
      ptypes.push_back(t);
    }
    loops_left_ = below(3);
    int loops_before = loops_left_;
    // early return guarded by a parameter test
    if (m.result != Type::Void() && chance(50)) {
      StmtList then_body;
      then_body.push_back(make_stmt(Return{expr(m.result)}));
      m.body.push_back(make_stmt(If{bool_expr(1), std::move(then_body), std::nullopt}));
    }
    StmtList rest = method_body(range(1, 3), false);
    m.body.insert(m.body.end(), rest.begin(), rest.end());
    if (m.result != Type::Void()) m.ret = expr(m.result);
    helpers_.push_back({m.name, m.result, ptypes, loops_left_ != loops_before});
    vars_.clear();
    return m;
  }

  MethodDef main_method() {
    MethodDef m;
    m.name = "main";
    m.result = Type::Void();
    vars_.clear();
    loops_left_ = cfg_.max_loops;
    StmtList out;
    int decls = range(2, 4);
    for (int i = 0; i < decls; ++i) out.push_back(declaration());
    StmtList rest = method_body(range(2, cfg_.max_stmts + 2), true);
    out.insert(out.end(), rest.begin(), rest.end());
    out.push_back(print_stmt());
    m.body = std::move(out);
    return m;
  }

  GenConfig cfg_;
  std::mt19937_64 rng_;
  int next_var_ = 0;
  int loops_left_ = 0;
  int loop_depth_ = 0;
  std::vector<VarInfo> vars_;
  std::multiset<std::string> protected_;
  std::vector<Helper> helpers_;
};

}  // namespace

Program generate(const GenConfig& cfg) { return Generator(cfg).program(); }

// ---------------------------------------------------------------------------
// Campaign

bool FuzzSummary::all_passed() const {
  return mismatches.empty() && equivalent == total && tail_ok == total &&
         iter_call_ok == total && budget_exceeded == 0;
}

FuzzSummary fuzz_campaign(int n, const GenConfig& base,
                          const FuzzOptions& opts) {
  FuzzSummary s;
  for (int i = 0; i < n; ++i) {
    GenConfig cfg = base;
    cfg.seed = base.seed + static_cast<uint64_t>(i);
    ++s.total;
    auto fail = [&](std::string detail) {
      s.mismatches.push_back({cfg.seed, std::move(detail)});
      if (!s.first_failing_seed) s.first_failing_seed = cfg.seed;
    };

    Program p = generate(cfg);
    auto errors = check_semantics(p);
    if (!errors.empty()) {
      fail("generated program rejected: " + errors.front().format("gen"));
      continue;
    }
    DiffReport d;
    try {
      d = diff_run(p, opts.transform, opts.budget);
    } catch (const std::exception& e) {
      fail(std::string("transform failed: ") + e.what());
      continue;
    }
    bool budget = d.original.status == RunStatus::BudgetExceeded ||
                  d.transformed.status == RunStatus::BudgetExceeded;
    if (budget) ++s.budget_exceeded;

    bool tail = true;
    for (const auto& l : d.loops) {
      const MethodDef* g = d.transformed_program.find(l.loop_method_name);
      ++s.generated_methods;
      if (!g || !tail_position_check(*g)) tail = false;
    }
    if (tail) ++s.tail_ok;

    bool iter_ok = !budget && iteration_call_equality(d.original, d.transformed,
                                                      d.loops).ok();
    if (iter_ok) ++s.iter_call_ok;

    if (d.equivalent()) {
      ++s.equivalent;
      if (!tail) fail("generated method not tail recursive");
      else if (!iter_ok && !budget) fail("iteration count differs from call count");
    } else {
      fail(d.detail());
    }
  }
  return s;
}

std::string to_json(const FuzzSummary& s) {
  nlohmann::json mism = nlohmann::json::array();
  for (const auto& m : s.mismatches)
    mism.push_back({{"seed", m.seed}, {"detail", m.detail}});
  nlohmann::json j = {{"total", s.total},
                      {"equivalent", s.equivalent},
                      {"mismatches", mism},
                      {"tail_ok", s.tail_ok},
                      {"iter_call_ok", s.iter_call_ok},
                      {"budget_exceeded", s.budget_exceeded}};
  j["first_failing_seed"] =
      s.first_failing_seed ? nlohmann::json(*s.first_failing_seed)
                           : nlohmann::json(nullptr);
  return j.dump(2);
}

std::string to_json(const DiffReport& r) {
  nlohmann::json counters_a = r.original.method_entries;
  nlohmann::json counters_b = r.transformed.method_entries;
  nlohmann::json loops = nlohmann::json::array();
  for (const auto& l : r.loops) {
    uint64_t iters = 0, entries = 0;
    if (auto it = r.original.loop_iterations.find(l.loop_id);
        it != r.original.loop_iterations.end())
      iters = it->second;
    if (auto it = r.transformed.method_entries.find(l.loop_method_name);
        it != r.transformed.method_entries.end())
      entries = it->second;
    loops.push_back({{"id", l.loop_id},
                     {"kind", to_string(l.kind)},
                     {"loopMethod", l.loop_method_name},
                     {"iterations", iters},
                     {"entries", entries}});
  }
  nlohmann::json j = {
      {"verdict", r.equivalent() ? "Equivalent" : "Mismatch"},
      {"original", {{"status", to_string(r.original.status)},
                    {"steps", r.original.steps},
                    {"prints", r.original.prints.size()},
                    {"methodEntries", counters_a}}},
      {"transformed", {{"status", to_string(r.transformed.status)},
                       {"steps", r.transformed.steps},
                       {"prints", r.transformed.prints.size()},
                       {"methodEntries", counters_b}}},
      {"loops", loops}};
  if (!r.equivalent())
    j["mismatch"] = {{"observable", r.observable},
                     {"original", r.original_value},
                     {"transformed", r.transformed_value}};
  return j.dump(2);
}

}  // namespace loop2rec
