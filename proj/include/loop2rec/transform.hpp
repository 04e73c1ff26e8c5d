#pragma once

// Loop-to-tail-recursion rewriting. Every loop becomes a guarded first call
// to a generated method whose body runs one iteration and then either calls
// itself in tail position or hands back the loop's live variables.

#include <string>
#include <vector>

#include "loop2rec/analysis.hpp"
#include "loop2rec/syntax.hpp"

namespace loop2rec {

// Deliberately broken variants used to check that the differential harness
// notices wrong rewrites.
enum class Mutant {
  None,
  DropForUpdate,    // for-loop updates left out of the generated method
  SwapCondCheck,    // while/for/foreach callers unguarded, do callers guarded
  OmitModifiedVar,  // last returned variable not handed back
};

const char* to_string(Mutant m);

struct TransformOptions {
  bool optimize = true;
  Mutant mutant = Mutant::None;
};

struct LoopReport {
  int loop_id = 0;  // pre-order index, see collect_loops
  SourceLoc loc;
  std::string method;  // method that contained the loop
  LoopKind kind = LoopKind::While;
  std::string loop_method_name;
  Packing packing;
};

struct TransformResult {
  Program program;
  std::vector<LoopReport> report;  // ordered by loop_id
};

// Rewrites every loop, innermost first. Generated methods are appended after
// the original methods in the order they are created.
// Throws UnsupportedConstruct.
TransformResult transform_program(const Program& p,
                                  const TransformOptions& opts = {});

struct LoopRewrite {
  StmtList replacement;
  MethodDef method;
};

// Per-kind rewrites. `loop` must already be free of nested loops and
// `analysis` must come from analyze_loop on the original loop.
LoopRewrite transform_while(const Stmt& loop, const MethodDef& method,
                            const LoopAnalysis& analysis,
                            const TransformOptions& opts = {});
LoopRewrite transform_do(const Stmt& loop, const MethodDef& method,
                         const LoopAnalysis& analysis,
                         const TransformOptions& opts = {});
LoopRewrite transform_for(const Stmt& loop, const MethodDef& method,
                          const LoopAnalysis& analysis,
                          const TransformOptions& opts = {});
LoopRewrite transform_foreach_array(const Stmt& loop, const MethodDef& method,
                                    const LoopAnalysis& analysis,
                                    const TransformOptions& opts = {});
LoopRewrite transform_foreach_iterable(const Stmt& loop,
                                       const MethodDef& method,
                                       const LoopAnalysis& analysis,
                                       const TransformOptions& opts = {});

}  // namespace loop2rec
