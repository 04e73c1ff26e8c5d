#pragma once

// Variable sets and fresh names needed to turn one loop into a method.

#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "loop2rec/syntax.hpp"

namespace loop2rec {

struct TypedVar {
  std::string name;
  Type type;
  friend bool operator==(const TypedVar&, const TypedVar&) = default;
};

enum class PackingKind { None, Single, ObjectArray };

struct Packing {
  PackingKind kind = PackingKind::None;
  std::string var;  // set for Single

  friend bool operator==(const Packing&, const Packing&) = default;
};

std::string to_string(const Packing& p);  // "None", "Single(b)", "ObjectArray"

enum class LoopKind { While, Do, For, ForeachArray, ForeachList };

const char* to_string(LoopKind k);

// Rejected input that check_semantics accepts.
class UnsupportedConstruct : public std::runtime_error {
 public:
  UnsupportedConstruct(SourceLoc loc, const std::string& what)
      : std::runtime_error(what), loc_(loc) {}
  SourceLoc loc() const { return loc_; }

 private:
  SourceLoc loc_;
};

// Fresh variables introduced for a foreach traversal.
struct ForeachNames {
  std::string index;       // arrays: position counter
  std::string collection;  // arrays: hoisted collection, empty if not hoisted
  std::string iterator;    // lists: cursor
};

struct LoopAnalysis {
  LoopKind kind = LoopKind::While;
  std::vector<TypedVar> params;
  std::vector<TypedVar> modified;
  std::vector<TypedVar> live_after;
  Packing packing;
  // Variables the generated method hands back, in params order.
  std::vector<TypedVar> returned;
  std::string loop_method_name;
  std::string result_var_name;
  ForeachNames foreach;
};

struct AnalysisOptions {
  bool optimize = true;
};

// Allocates identifiers absent from a program: base, base2, base3, ...
class NameSupply {
 public:
  explicit NameSupply(const Program& p);

  bool taken(const std::string& name) const;
  // First free candidate; reserves it.
  std::string fresh(const std::string& base);
  // First free candidate without reserving it.
  std::string peek(const std::string& base) const;

 private:
  std::unordered_set<std::string> taken_;
};

// Names free in body, extra and cond (declared outside them), first-use
// order. Statements are visited body, then extra, then cond; in an
// assignment the right-hand side comes before the target.
std::vector<std::string> used_vars(const StmtList& body, const ExprPtr& cond,
                                   const StmtList& extra = {});

// Members of used_vars(body, -, extra) assigned in body or extra, in
// first-write order.
std::vector<std::string> modified_vars(const StmtList& body,
                                       const StmtList& extra = {});

// Modified variables of `loop` that are read after it in `method`, in
// declaration order. Reads in the rest of every enclosing sequence, in the
// whole of every enclosing loop, and in the method's trailing return count.
// In the program's entry method every variable still in scope is read at
// the end of the body.
std::vector<std::string> live_after(const Stmt& loop, const MethodDef& method,
                                    const Program& program);

// (`<base>_loop[N]`, `result[N]`) absent from every identifier of program.
std::pair<std::string, std::string> fresh_names(const std::string& base,
                                                const Program& program);

// Throws UnsupportedConstruct when a foreach body assigns its collection.
LoopAnalysis analyze_loop(const Stmt& loop, const MethodDef& method,
                          const Program& program,
                          const AnalysisOptions& opts = {});

// Same, drawing fresh names from a shared supply so that several loops of
// one program get distinct names.
LoopAnalysis analyze_loop(const Stmt& loop, const MethodDef& method,
                          const Program& program, NameSupply& names,
                          const AnalysisOptions& opts);

LoopKind loop_kind(const Stmt& loop, const MethodDef& method,
                   const Program& program);

struct LoopSite {
  const Stmt* loop;
  const MethodDef* method;
  int id;  // pre-order position over the whole program
};

// Every loop in the program: methods in order, outer loops before the
// loops nested in them.
std::vector<LoopSite> collect_loops(const Program& p);

// {"loops":[{"id","method","line","kind","params","modified","liveAfter",
//  "packing","loopMethod","resultVar"}]}
std::string analyses_to_json(const std::vector<LoopSite>& sites,
                             const std::vector<LoopAnalysis>& analyses);

}  // namespace loop2rec
