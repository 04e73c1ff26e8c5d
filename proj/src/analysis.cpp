#include "loop2rec/analysis.hpp"

#include <algorithm>
#include <functional>
#include <unordered_map>

#include "json.hpp"
#include "loop2rec/parser.hpp"

namespace loop2rec {

std::string to_string(const Packing& p) {
  switch (p.kind) {
    case PackingKind::None: return "None";
    case PackingKind::Single: return "Single(" + p.var + ")";
    case PackingKind::ObjectArray: return "ObjectArray";
  }
  return "?";
}

const char* to_string(LoopKind k) {
  switch (k) {
    case LoopKind::While: return "while";
    case LoopKind::Do: return "do";
    case LoopKind::For: return "for";
    case LoopKind::ForeachArray: return "foreach-array";
    case LoopKind::ForeachList: return "foreach-list";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Name supply

NameSupply::NameSupply(const Program& p) {
  for (auto& id : all_identifiers(p)) taken_.insert(id);
}

bool NameSupply::taken(const std::string& name) const {
  return taken_.count(name) > 0 || is_reserved_word(name);
}

std::string NameSupply::peek(const std::string& base) const {
  if (!taken(base)) return base;
  for (int i = 2;; ++i) {
    std::string c = base + std::to_string(i);
    if (!taken(c)) return c;
  }
}

std::string NameSupply::fresh(const std::string& base) {
  std::string name = peek(base);
  taken_.insert(name);
  return name;
}

std::pair<std::string, std::string> fresh_names(const std::string& base,
                                                const Program& program) {
  NameSupply names(program);
  return {names.peek(base + "_loop"), names.peek("result")};
}

namespace {

void append_unique(std::vector<std::string>& out, const std::string& name) {
  if (std::find(out.begin(), out.end(), name) == out.end())
    out.push_back(name);
}

// Collects uses, assignment targets and declarations of a statement region.
// Loops are visited in the order their generated method runs them: body
// (plus updates) before the condition.
class VarWalker {
 public:
  std::vector<std::string> uses;
  std::vector<std::string> writes;
  std::unordered_set<std::string> declared;

  void seq(const StmtList& body) {
    for (const auto& s : body) stmt(*s);
  }

  void expr(const ExprPtr& e) {
    if (!e) return;
    std::visit([&](const auto& x) { node(x); }, e->node);
  }

  void stmt(const Stmt& s) {
    std::visit([&](const auto& x) { node(x); }, s.node);
  }

 private:
  void use(const std::string& n) { append_unique(uses, n); }
  void write(const std::string& n) {
    use(n);
    append_unique(writes, n);
  }
  void exprs(const ExprList& es) {
    for (const auto& e : es) expr(e);
  }

  void node(const IntLit&) {}
  void node(const DoubleLit&) {}
  void node(const BoolLit&) {}
  void node(const Var& x) { use(x.name); }
  void node(const Binary& x) {
    expr(x.lhs);
    expr(x.rhs);
  }
  void node(const Unary& x) { expr(x.operand); }
  void node(const ArrayLit& x) { exprs(x.elements); }
  void node(const ListLit& x) { exprs(x.elements); }
  void node(const Index& x) {
    expr(x.array);
    expr(x.index);
  }
  void node(const Length& x) { expr(x.collection); }
  void node(const Builtin& x) { exprs(x.args); }
  void node(const Cast& x) { expr(x.operand); }
  void node(const Call& x) { exprs(x.args); }

  void node(const VarDecl& x) {
    expr(x.init);
    declared.insert(x.name);
  }
  void node(const Assign& x) {
    expr(x.value);
    write(x.target);
  }
  void node(const AssignIndex& x) {
    expr(x.index);
    expr(x.value);
    write(x.target);
  }
  void node(const CallAssign& x) {
    exprs(x.args);
    if (x.target) write(*x.target);
  }
  void node(const If& x) {
    expr(x.cond);
    seq(x.then_body);
    if (x.else_body) seq(*x.else_body);
  }
  void node(const While& x) {
    seq(x.body);
    expr(x.cond);
  }
  void node(const DoWhile& x) {
    seq(x.body);
    expr(x.cond);
  }
  void node(const For& x) {
    seq(x.init);
    seq(x.body);
    seq(x.update);
    expr(x.cond);
  }
  void node(const Foreach& x) {
    expr(x.collection);
    declared.insert(x.elem);
    seq(x.body);
  }
  void node(const Block& x) { seq(x.body); }
  void node(const Return& x) { expr(x.value); }
  void node(const Print& x) {
    for (const auto& item : x.items)
      if (auto* e = std::get_if<ExprPtr>(&item.item)) expr(*e);
  }
};

std::vector<std::string> free_only(const std::vector<std::string>& names,
                                   const VarWalker& w) {
  std::vector<std::string> out;
  for (const auto& n : names)
    if (!w.declared.count(n)) out.push_back(n);
  return out;
}

// Variables visible just before `target`, in declaration order.
class ScopeFinder {
 public:
  explicit ScopeFinder(const Stmt* target) : target_(target) {}

  std::optional<std::vector<TypedVar>> find(const MethodDef& m) {
    vars_.clear();
    for (const auto& p : m.params) vars_.push_back({p.name, p.type});
    if (seq(m.body)) return vars_;
    return std::nullopt;
  }

 private:
  bool seq(const StmtList& body) {
    size_t mark = vars_.size();
    for (const auto& s : body)
      if (stmt(*s)) return true;
    vars_.resize(mark);
    return false;
  }

  bool stmt(const Stmt& s) {
    if (&s == target_) return true;
    if (auto* d = s.as<VarDecl>()) {
      vars_.push_back({d->name, d->type});
    } else if (auto* i = s.as<If>()) {
      return seq(i->then_body) || (i->else_body && seq(*i->else_body));
    } else if (auto* w = s.as<While>()) {
      return seq(w->body);
    } else if (auto* d = s.as<DoWhile>()) {
      return seq(d->body);
    } else if (auto* f = s.as<For>()) {
      size_t mark = vars_.size();
      for (const auto& init : f->init)
        if (auto* v = init->as<VarDecl>()) vars_.push_back({v->name, v->type});
      if (seq(f->body)) return true;
      vars_.resize(mark);
    } else if (auto* fe = s.as<Foreach>()) {
      size_t mark = vars_.size();
      vars_.push_back({fe->elem, fe->elem_type});
      if (seq(fe->body)) return true;
      vars_.resize(mark);
    } else if (auto* b = s.as<Block>()) {
      return seq(b->body);
    }
    return false;
  }

  const Stmt* target_;
  std::vector<TypedVar> vars_;
};

std::vector<TypedVar> scope_at(const Stmt& loop, const MethodDef& m) {
  auto found = ScopeFinder(&loop).find(m);
  if (!found)
    throw std::invalid_argument("loop does not belong to method '" + m.name +
                                "'");
  return *found;
}

// Reads of a statement, excluding names that only appear as the target of
// a plain assignment or a call assignment.
void statement_reads(const Stmt& s, std::unordered_set<std::string>& out);

void expr_reads(const ExprPtr& e, std::unordered_set<std::string>& out) {
  if (!e) return;
  VarWalker w;
  w.expr(e);
  out.insert(w.uses.begin(), w.uses.end());
}

void list_reads(const StmtList& body, std::unordered_set<std::string>& out) {
  for (const auto& s : body) statement_reads(*s, out);
}

void statement_reads(const Stmt& s, std::unordered_set<std::string>& out) {
  if (auto* d = s.as<VarDecl>()) {
    expr_reads(d->init, out);
  } else if (auto* a = s.as<Assign>()) {
    expr_reads(a->value, out);
  } else if (auto* a = s.as<AssignIndex>()) {
    out.insert(a->target);
    expr_reads(a->index, out);
    expr_reads(a->value, out);
  } else if (auto* c = s.as<CallAssign>()) {
    for (const auto& e : c->args) expr_reads(e, out);
  } else if (auto* i = s.as<If>()) {
    expr_reads(i->cond, out);
    list_reads(i->then_body, out);
    if (i->else_body) list_reads(*i->else_body, out);
  } else if (auto* w = s.as<While>()) {
    expr_reads(w->cond, out);
    list_reads(w->body, out);
  } else if (auto* d = s.as<DoWhile>()) {
    list_reads(d->body, out);
    expr_reads(d->cond, out);
  } else if (auto* f = s.as<For>()) {
    list_reads(f->init, out);
    expr_reads(f->cond, out);
    list_reads(f->update, out);
    list_reads(f->body, out);
  } else if (auto* fe = s.as<Foreach>()) {
    expr_reads(fe->collection, out);
    list_reads(fe->body, out);
  } else if (auto* b = s.as<Block>()) {
    list_reads(b->body, out);
  } else if (auto* r = s.as<Return>()) {
    expr_reads(r->value, out);
  } else if (auto* p = s.as<Print>()) {
    for (const auto& item : p->items)
      if (auto* e = std::get_if<ExprPtr>(&item.item)) expr_reads(*e, out);
  }
}

// Reads that happen after `target` completes, within one method.
class AfterReads {
 public:
  explicit AfterReads(const Stmt* target) : target_(target) {}

  bool seq(const StmtList& body, std::unordered_set<std::string>& out) {
    for (size_t i = 0; i < body.size(); ++i) {
      if (stmt(*body[i], out)) {
        for (size_t j = i + 1; j < body.size(); ++j)
          statement_reads(*body[j], out);
        return true;
      }
    }
    return false;
  }

 private:
  bool stmt(const Stmt& s, std::unordered_set<std::string>& out) {
    if (&s == target_) return true;
    if (auto* i = s.as<If>())
      return seq(i->then_body, out) || (i->else_body && seq(*i->else_body, out));
    if (auto* b = s.as<Block>()) return seq(b->body, out);
    const StmtList* body = nullptr;
    if (auto* w = s.as<While>()) body = &w->body;
    if (auto* d = s.as<DoWhile>()) body = &d->body;
    if (auto* f = s.as<For>()) body = &f->body;
    if (auto* fe = s.as<Foreach>()) body = &fe->body;
    if (body && seq(*body, out)) {
      // The enclosing loop may run again. Names declared in its body are
      // redeclared before any read on the next pass.
      std::unordered_set<std::string> again;
      statement_reads(s, again);
      VarWalker w;
      w.seq(*body);
      for (const auto& n : again)
        if (!w.declared.count(n)) out.insert(n);
      return true;
    }
    return false;
  }

  const Stmt* target_;
};

// The per-iteration work of a loop as its generated method performs it.
struct LoopShape {
  StmtList step;
  ExprPtr cond;
  // Names whose scope ends with the loop.
  std::vector<TypedVar> scoped;
};

std::optional<Type> lookup_in(const std::vector<TypedVar>& vars,
                              const std::string& name) {
  for (auto it = vars.rbegin(); it != vars.rend(); ++it)
    if (it->name == name) return it->type;
  return std::nullopt;
}

Type collection_type(const Foreach& f, const std::vector<TypedVar>& scope,
                     const Program& program) {
  auto t = expr_type(*f.collection, program, [&](const std::string& n) {
    return lookup_in(scope, n);
  });
  if (!t || (t->kind() != Type::Kind::Array && t->kind() != Type::Kind::List))
    throw std::invalid_argument("foreach collection is not an array or list");
  return *t;
}

bool assigns(const StmtList& body, const std::string& name) {
  VarWalker w;
  w.seq(body);
  return std::find(w.writes.begin(), w.writes.end(), name) != w.writes.end();
}

LoopShape shape_of(const Stmt& loop, LoopKind kind, const Type& coll_type,
                   const ForeachNames& names) {
  LoopShape sh;
  if (auto* w = loop.as<While>()) {
    sh.step = w->body;
    sh.cond = w->cond;
  } else if (auto* d = loop.as<DoWhile>()) {
    sh.step = d->body;
    sh.cond = d->cond;
  } else if (auto* f = loop.as<For>()) {
    sh.step = f->body;
    sh.step.insert(sh.step.end(), f->update.begin(), f->update.end());
    sh.cond = f->cond;
    for (const auto& init : f->init)
      if (auto* v = init->as<VarDecl>()) sh.scoped.push_back({v->name, v->type});
  } else if (auto* fe = loop.as<Foreach>()) {
    const Type& elem = fe->elem_type;
    if (kind == LoopKind::ForeachArray) {
      std::string coll = names.collection;
      if (coll.empty()) coll = fe->collection->as<Var>()->name;
      else sh.scoped.push_back({coll, coll_type});
      sh.scoped.push_back({names.index, Type::Int()});
      sh.step.push_back(make_stmt(VarDecl{
          elem, fe->elem,
          make_expr(Index{var(coll), var(names.index)})}));
      sh.step.insert(sh.step.end(), fe->body.begin(), fe->body.end());
      sh.step.push_back(make_stmt(Assign{
          names.index,
          binary(BinaryOp::Add, var(names.index), int_lit(1))}));
      sh.cond = binary(BinaryOp::Lt, var(names.index),
                       make_expr(Length{var(coll)}));
    } else {
      sh.scoped.push_back({names.iterator, Type::IteratorOf(elem)});
      sh.step.push_back(make_stmt(VarDecl{
          elem, fe->elem, builtin(BuiltinFn::Next, {var(names.iterator)})}));
      sh.step.insert(sh.step.end(), fe->body.begin(), fe->body.end());
      sh.cond = builtin(BuiltinFn::HasNext, {var(names.iterator)});
    }
  } else {
    throw std::invalid_argument("statement is not a loop");
  }
  return sh;
}

std::vector<std::string> live_after_impl(const Stmt& loop,
                                         const MethodDef& method,
                                         const Program& program,
                                         const std::vector<std::string>& mod,
                                         const std::vector<TypedVar>& scope,
                                         const std::vector<TypedVar>& scoped) {
  std::unordered_set<std::string> reads;
  AfterReads(&loop).seq(method.body, reads);
  expr_reads(method.ret, reads);
  bool entry = method.name == program.entry;
  std::vector<std::string> out;
  // declaration order = order of the visible scope
  for (const auto& v : scope) {
    if (std::find(mod.begin(), mod.end(), v.name) == mod.end()) continue;
    if (lookup_in(scoped, v.name)) continue;
    if (entry || reads.count(v.name)) out.push_back(v.name);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<std::string> used_vars(const StmtList& body, const ExprPtr& cond,
                                   const StmtList& extra) {
  VarWalker w;
  w.seq(body);
  w.seq(extra);
  w.expr(cond);
  return free_only(w.uses, w);
}

std::vector<std::string> modified_vars(const StmtList& body,
                                       const StmtList& extra) {
  VarWalker w;
  w.seq(body);
  w.seq(extra);
  return free_only(w.writes, w);
}

LoopKind loop_kind(const Stmt& loop, const MethodDef& method,
                   const Program& program) {
  if (loop.is<While>()) return LoopKind::While;
  if (loop.is<DoWhile>()) return LoopKind::Do;
  if (loop.is<For>()) return LoopKind::For;
  if (auto* fe = loop.as<Foreach>()) {
    Type t = collection_type(*fe, scope_at(loop, method), program);
    return t.kind() == Type::Kind::Array ? LoopKind::ForeachArray
                                         : LoopKind::ForeachList;
  }
  throw std::invalid_argument("statement is not a loop");
}

std::vector<std::string> live_after(const Stmt& loop, const MethodDef& method,
                                    const Program& program) {
  NameSupply names(program);
  AnalysisOptions opts;
  LoopAnalysis a = analyze_loop(loop, method, program, names, opts);
  std::vector<std::string> out;
  for (const auto& v : a.live_after) out.push_back(v.name);
  return out;
}

LoopAnalysis analyze_loop(const Stmt& loop, const MethodDef& method,
                          const Program& program, const AnalysisOptions& opts) {
  NameSupply names(program);
  return analyze_loop(loop, method, program, names, opts);
}

LoopAnalysis analyze_loop(const Stmt& loop, const MethodDef& method,
                          const Program& program, NameSupply& names,
                          const AnalysisOptions& opts) {
  std::vector<TypedVar> scope = scope_at(loop, method);
  LoopAnalysis a;
  a.loop_method_name = names.fresh(method.name + "_loop");
  a.result_var_name = NameSupply(program).peek("result");

  Type coll_type;
  if (auto* fe = loop.as<Foreach>()) {
    coll_type = collection_type(*fe, scope, program);
    a.kind = coll_type.kind() == Type::Kind::Array ? LoopKind::ForeachArray
                                                   : LoopKind::ForeachList;
    if (auto* v = fe->collection->as<Var>()) {
      if (assigns(fe->body, v->name))
        throw UnsupportedConstruct(
            loop.loc, "foreach body assigns its collection '" + v->name + "'");
    }
    if (a.kind == LoopKind::ForeachArray) {
      if (!fe->collection->is<Var>())
        a.foreach.collection = names.fresh("collection");
      a.foreach.index = names.fresh("index");
    } else {
      a.foreach.iterator = names.fresh("it");
    }
  } else {
    a.kind = loop_kind(loop, method, program);
  }

  LoopShape sh = shape_of(loop, a.kind, coll_type, a.foreach);
  std::vector<TypedVar> visible = scope;
  visible.insert(visible.end(), sh.scoped.begin(), sh.scoped.end());
  auto typed = [&](const std::vector<std::string>& names_in) {
    std::vector<TypedVar> out;
    for (const auto& n : names_in) {
      auto t = lookup_in(visible, n);
      if (!t)
        throw std::invalid_argument("variable '" + n +
                                    "' used by loop is not in scope");
      out.push_back({n, *t});
    }
    return out;
  };

  a.params = typed(used_vars(sh.step, sh.cond));
  std::vector<std::string> mod = modified_vars(sh.step);
  a.modified = typed(mod);
  a.live_after =
      typed(live_after_impl(loop, method, program, mod, scope, sh.scoped));

  if (!opts.optimize) {
    a.packing = {PackingKind::ObjectArray, ""};
    a.returned = a.params;
    return a;
  }
  if (a.live_after.empty()) {
    a.packing = {PackingKind::None, ""};
  } else if (a.live_after.size() == 1) {
    a.packing = {PackingKind::Single, a.live_after[0].name};
  } else {
    a.packing = {PackingKind::ObjectArray, ""};
  }
  for (const auto& p : a.params)
    if (std::find(a.live_after.begin(), a.live_after.end(), p) !=
        a.live_after.end())
      a.returned.push_back(p);
  return a;
}

namespace {

void collect(const StmtList& body, const MethodDef& m,
             std::vector<LoopSite>& out) {
  for (const auto& s : body) {
    if (s->is_loop()) out.push_back({s.get(), &m, static_cast<int>(out.size())});
    if (auto* i = s->as<If>()) {
      collect(i->then_body, m, out);
      if (i->else_body) collect(*i->else_body, m, out);
    } else if (auto* w = s->as<While>()) {
      collect(w->body, m, out);
    } else if (auto* d = s->as<DoWhile>()) {
      collect(d->body, m, out);
    } else if (auto* f = s->as<For>()) {
      collect(f->body, m, out);
    } else if (auto* fe = s->as<Foreach>()) {
      collect(fe->body, m, out);
    } else if (auto* b = s->as<Block>()) {
      collect(b->body, m, out);
    }
  }
}

nlohmann::json vars_json(const std::vector<TypedVar>& vs) {
  auto arr = nlohmann::json::array();
  for (const auto& v : vs) arr.push_back({{"name", v.name}, {"type", v.type.str()}});
  return arr;
}

}  // namespace

std::vector<LoopSite> collect_loops(const Program& p) {
  std::vector<LoopSite> out;
  for (const auto& m : p.methods) collect(m.body, m, out);
  return out;
}

std::string analyses_to_json(const std::vector<LoopSite>& sites,
                             const std::vector<LoopAnalysis>& analyses) {
  nlohmann::json loops = nlohmann::json::array();
  for (size_t i = 0; i < sites.size() && i < analyses.size(); ++i) {
    const auto& a = analyses[i];
    nlohmann::json packing = {{"kind", to_string(a.packing)}};
    if (a.packing.kind == PackingKind::Single) {
      packing = {{"kind", "Single"}, {"var", a.packing.var}};
    } else {
      packing = {{"kind", a.packing.kind == PackingKind::None ? "None"
                                                              : "ObjectArray"}};
    }
    loops.push_back({{"id", sites[i].id},
                     {"method", sites[i].method->name},
                     {"line", sites[i].loop->loc.line},
                     {"kind", to_string(a.kind)},
                     {"params", vars_json(a.params)},
                     {"modified", vars_json(a.modified)},
                     {"liveAfter", vars_json(a.live_after)},
                     {"packing", packing},
                     {"loopMethod", a.loop_method_name},
                     {"resultVar", a.result_var_name}});
  }
  return nlohmann::json{{"loops", loops}}.dump(2);
}

}  // namespace loop2rec
