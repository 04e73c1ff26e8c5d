#include "loop2rec/transform.hpp"

#include <stdexcept>
#include <unordered_map>

namespace loop2rec {

const char* to_string(Mutant m) {
  switch (m) {
    case Mutant::None: return "none";
    case Mutant::DropForUpdate: return "drop-for-update";
    case Mutant::SwapCondCheck: return "swap-cond-check";
    case Mutant::OmitModifiedVar: return "omit-modified-var";
  }
  return "?";
}

namespace {

// Applies the OmitModifiedVar mutant to a copy of the analysis.
LoopAnalysis effective(const LoopAnalysis& a, const TransformOptions& opts) {
  if (opts.mutant != Mutant::OmitModifiedVar || a.returned.empty()) return a;
  LoopAnalysis m = a;
  m.returned.pop_back();
  if (opts.optimize) {
    if (m.returned.empty())
      m.packing = {PackingKind::None, ""};
    else if (m.returned.size() == 1)
      m.packing = {PackingKind::Single, m.returned[0].name};
  }
  return m;
}

ExprList arguments(const LoopAnalysis& a) {
  ExprList args;
  for (const auto& p : a.params) args.push_back(var(p.name));
  return args;
}

Type result_type(const LoopAnalysis& a) {
  switch (a.packing.kind) {
    case PackingKind::None: return Type::Void();
    case PackingKind::Single: return a.returned.at(0).type;
    case PackingKind::ObjectArray: return Type::ObjectArray();
  }
  return Type::Void();
}

// First call plus catching and updating the returned variables.
StmtList invoke(const LoopAnalysis& a) {
  const std::string& m = a.loop_method_name;
  switch (a.packing.kind) {
    case PackingKind::None:
      return {make_stmt(CallAssign{std::nullopt, m, arguments(a)})};
    case PackingKind::Single:
      return {make_stmt(CallAssign{a.packing.var, m, arguments(a)})};
    case PackingKind::ObjectArray: {
      StmtList out;
      out.push_back(make_stmt(VarDecl{Type::ObjectArray(), a.result_var_name,
                                      call(m, arguments(a))}));
      for (size_t i = 0; i < a.returned.size(); ++i) {
        const TypedVar& v = a.returned[i];
        auto cell = make_expr(Index{var(a.result_var_name),
                                    int_lit(static_cast<int32_t>(i))});
        out.push_back(
            make_stmt(Assign{v.name, make_expr(Cast{v.type, cell})}));
      }
      return out;
    }
  }
  return {};
}

StmtPtr guarded(const ExprPtr& cond, StmtList body) {
  return make_stmt(If{cond, std::move(body), std::nullopt});
}

bool declares(const StmtList& stmts) {
  for (const auto& s : stmts)
    if (s->is<VarDecl>()) return true;
  return false;
}

// Do/for/foreach callers get a new block unless it would be empty of
// declarations and optimization is on.
StmtList maybe_block(StmtList stmts, const TransformOptions& opts) {
  if (opts.optimize && !declares(stmts)) return stmts;
  return {make_stmt(Block{std::move(stmts)})};
}

// Generated method: `step`, then the guarded tail call, then the return of
// the handed-back variables.
MethodDef make_method(const LoopAnalysis& a, const StmtList& step,
                      const ExprPtr& cond, SourceLoc loc) {
  MethodDef m;
  m.name = a.loop_method_name;
  m.result = result_type(a);
  m.loc = loc;
  for (const auto& p : a.params) m.params.push_back({p.name, p.type});

  StmtPtr tail;
  if (a.packing.kind == PackingKind::None) {
    tail = guarded(cond, {make_stmt(CallAssign{std::nullopt, m.name,
                                               arguments(a)})});
  } else {
    tail = guarded(cond, {make_stmt(Return{call(m.name, arguments(a))})});
  }
  m.body = step;
  m.body.push_back(tail);

  switch (a.packing.kind) {
    case PackingKind::None: break;
    case PackingKind::Single: m.ret = var(a.packing.var); break;
    case PackingKind::ObjectArray: {
      ExprList cells;
      for (const auto& v : a.returned) cells.push_back(var(v.name));
      m.ret = make_expr(ArrayLit{Type::Object(), std::move(cells)});
      break;
    }
  }
  return m;
}

bool swapped(const TransformOptions& opts) {
  return opts.mutant == Mutant::SwapCondCheck;
}

// The caller's first call: guarded by cond, or unguarded under the mutant.
StmtList first_call(const ExprPtr& cond, const LoopAnalysis& a,
                    const TransformOptions& opts) {
  if (swapped(opts)) return invoke(a);
  return {guarded(cond, invoke(a))};
}

}  // namespace

LoopRewrite transform_while(const Stmt& loop, const MethodDef&,
                            const LoopAnalysis& analysis,
                            const TransformOptions& opts) {
  const auto* w = loop.as<While>();
  if (!w) throw std::invalid_argument("transform_while: not a while loop");
  LoopAnalysis a = effective(analysis, opts);
  LoopRewrite r;
  if (swapped(opts))
    r.replacement = {make_stmt(Block{invoke(a)}, loop.loc)};
  else
    r.replacement = {make_stmt(If{w->cond, invoke(a), std::nullopt}, loop.loc)};
  r.method = make_method(a, w->body, w->cond, loop.loc);
  return r;
}

LoopRewrite transform_do(const Stmt& loop, const MethodDef&,
                         const LoopAnalysis& analysis,
                         const TransformOptions& opts) {
  const auto* d = loop.as<DoWhile>();
  if (!d) throw std::invalid_argument("transform_do: not a do loop");
  LoopAnalysis a = effective(analysis, opts);
  LoopRewrite r;
  if (swapped(opts))
    r.replacement = {make_stmt(Block{{guarded(d->cond, invoke(a))}}, loop.loc)};
  else
    r.replacement = maybe_block(invoke(a), opts);
  r.method = make_method(a, d->body, d->cond, loop.loc);
  return r;
}

LoopRewrite transform_for(const Stmt& loop, const MethodDef&,
                          const LoopAnalysis& analysis,
                          const TransformOptions& opts) {
  const auto* f = loop.as<For>();
  if (!f) throw std::invalid_argument("transform_for: not a for loop");
  LoopAnalysis a = effective(analysis, opts);
  LoopRewrite r;
  StmtList caller = f->init;
  for (auto& s : first_call(f->cond, a, opts)) caller.push_back(s);
  r.replacement = swapped(opts) ? StmtList{make_stmt(Block{caller})}
                                : maybe_block(caller, opts);
  StmtList step = f->body;
  if (opts.mutant != Mutant::DropForUpdate)
    step.insert(step.end(), f->update.begin(), f->update.end());
  r.method = make_method(a, step, f->cond, loop.loc);
  return r;
}

LoopRewrite transform_foreach_array(const Stmt& loop, const MethodDef&,
                                    const LoopAnalysis& analysis,
                                    const TransformOptions& opts) {
  const auto* fe = loop.as<Foreach>();
  if (!fe || analysis.kind != LoopKind::ForeachArray)
    throw std::invalid_argument("transform_foreach_array: not an array foreach");
  LoopAnalysis a = effective(analysis, opts);
  const std::string& index = a.foreach.index;
  std::string coll = a.foreach.collection;

  StmtList caller;
  if (!coll.empty()) {
    const TypedVar* hoisted = nullptr;
    for (const auto& p : a.params)
      if (p.name == coll) hoisted = &p;
    Type t = hoisted ? hoisted->type : Type::ArrayOf(fe->elem_type);
    caller.push_back(make_stmt(VarDecl{t, coll, fe->collection}));
  } else {
    coll = fe->collection->as<Var>()->name;
  }
  caller.push_back(make_stmt(VarDecl{Type::Int(), index, int_lit(0)}));
  ExprPtr cond =
      binary(BinaryOp::Lt, var(index), make_expr(Length{var(coll)}));
  for (auto& s : first_call(cond, a, opts)) caller.push_back(s);

  LoopRewrite r;
  r.replacement = maybe_block(caller, opts);
  StmtList step;
  step.push_back(make_stmt(VarDecl{
      fe->elem_type, fe->elem, make_expr(Index{var(coll), var(index)})}));
  step.insert(step.end(), fe->body.begin(), fe->body.end());
  step.push_back(make_stmt(
      Assign{index, binary(BinaryOp::Add, var(index), int_lit(1))}));
  r.method = make_method(a, step, cond, loop.loc);
  return r;
}

LoopRewrite transform_foreach_iterable(const Stmt& loop, const MethodDef&,
                                       const LoopAnalysis& analysis,
                                       const TransformOptions& opts) {
  const auto* fe = loop.as<Foreach>();
  if (!fe || analysis.kind != LoopKind::ForeachList)
    throw std::invalid_argument(
        "transform_foreach_iterable: not a list foreach");
  LoopAnalysis a = effective(analysis, opts);
  const std::string& it = a.foreach.iterator;

  StmtList caller;
  caller.push_back(make_stmt(VarDecl{Type::IteratorOf(fe->elem_type), it,
                                     builtin(BuiltinFn::Iterator,
                                             {fe->collection})}));
  ExprPtr cond = builtin(BuiltinFn::HasNext, {var(it)});
  for (auto& s : first_call(cond, a, opts)) caller.push_back(s);

  LoopRewrite r;
  r.replacement = maybe_block(caller, opts);
  StmtList step;
  step.push_back(make_stmt(
      VarDecl{fe->elem_type, fe->elem, builtin(BuiltinFn::Next, {var(it)})}));
  step.insert(step.end(), fe->body.begin(), fe->body.end());
  r.method = make_method(a, step, cond, loop.loc);
  return r;
}

namespace {

class Rewriter {
 public:
  Rewriter(const std::unordered_map<const Stmt*, size_t>& index,
           const std::vector<LoopAnalysis>& analyses,
           const TransformOptions& opts)
      : index_(index), analyses_(analyses), opts_(opts) {}

  std::vector<MethodDef> generated;

  StmtList seq(const StmtList& body, const MethodDef& m) {
    StmtList out;
    for (const auto& s : body) {
      for (auto& r : stmt(s, m)) out.push_back(std::move(r));
    }
    return out;
  }

 private:
  StmtList stmt(const StmtPtr& s, const MethodDef& m) {
    if (auto* i = s->as<If>()) {
      If copy{i->cond, seq(i->then_body, m), std::nullopt};
      if (i->else_body) copy.else_body = seq(*i->else_body, m);
      return {make_stmt(std::move(copy), s->loc)};
    }
    if (auto* b = s->as<Block>())
      return {make_stmt(Block{seq(b->body, m)}, s->loc)};
    if (!s->is_loop()) return {s};

    const LoopAnalysis& a = analyses_.at(index_.at(s.get()));
    LoopRewrite r;
    if (auto* w = s->as<While>()) {
      Stmt inner{While{w->cond, seq(w->body, m)}, s->loc};
      r = transform_while(inner, m, a, opts_);
    } else if (auto* d = s->as<DoWhile>()) {
      Stmt inner{DoWhile{seq(d->body, m), d->cond}, s->loc};
      r = transform_do(inner, m, a, opts_);
    } else if (auto* f = s->as<For>()) {
      Stmt inner{For{f->init, f->cond, f->update, seq(f->body, m)}, s->loc};
      r = transform_for(inner, m, a, opts_);
    } else {
      auto* fe = s->as<Foreach>();
      Stmt inner{Foreach{fe->elem_type, fe->elem, fe->collection,
                         seq(fe->body, m)},
                 s->loc};
      r = a.kind == LoopKind::ForeachArray
              ? transform_foreach_array(inner, m, a, opts_)
              : transform_foreach_iterable(inner, m, a, opts_);
    }
    generated.push_back(std::move(r.method));
    return r.replacement;
  }

  const std::unordered_map<const Stmt*, size_t>& index_;
  const std::vector<LoopAnalysis>& analyses_;
  TransformOptions opts_;
};

}  // namespace

TransformResult transform_program(const Program& p,
                                  const TransformOptions& opts) {
  std::vector<LoopSite> sites = collect_loops(p);
  NameSupply names(p);
  AnalysisOptions aopts{opts.optimize};
  std::vector<LoopAnalysis> analyses;
  std::unordered_map<const Stmt*, size_t> index;
  for (const auto& site : sites) {
    index[site.loop] = analyses.size();
    analyses.push_back(
        analyze_loop(*site.loop, *site.method, p, names, aopts));
  }

  TransformResult result;
  result.program.entry = p.entry;
  Rewriter rw(index, analyses, opts);
  for (const auto& m : p.methods) {
    MethodDef copy = m;
    copy.body = rw.seq(m.body, m);
    result.program.methods.push_back(std::move(copy));
  }
  for (auto& g : rw.generated) result.program.methods.push_back(std::move(g));

  for (size_t i = 0; i < sites.size(); ++i) {
    const LoopAnalysis& a = analyses[i];
    result.report.push_back({sites[i].id, sites[i].loop->loc,
                             sites[i].method->name, a.kind,
                             a.loop_method_name, a.packing});
  }
  return result;
}

}  // namespace loop2rec
