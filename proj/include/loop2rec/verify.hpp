#pragma once

// Differential checks between a program and its transformed form, plus a
// random program generator for fuzzing them.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "loop2rec/interpreter.hpp"
#include "loop2rec/syntax.hpp"
#include "loop2rec/transform.hpp"

namespace loop2rec {

enum class Verdict { Equivalent, Mismatch };

struct DiffReport {
  Verdict verdict = Verdict::Equivalent;
  // First differing observable: "print[3]", "var b", "result", "status",
  // "error". Empty when equivalent.
  std::string observable;
  std::string original_value;
  std::string transformed_value;
  ExecTrace original;
  ExecTrace transformed;
  Program transformed_program;
  std::vector<LoopReport> loops;

  bool equivalent() const { return verdict == Verdict::Equivalent; }
  // One line, e.g. "var b: 2 vs 3".
  std::string detail() const;
};

// Compares two runs. Names in `ignore` are left out of the binding
// comparison. Both runs exceeding the budget counts as equivalent; so do
// runtime errors of the same kind after identical prints.
DiffReport compare_traces(const ExecTrace& original,
                          const ExecTrace& transformed,
                          const std::vector<std::string>& ignore = {});

// Runs p and transform_program(p). Throws UnsupportedConstruct.
DiffReport diff_run(const Program& p, const TransformOptions& opts = {},
                    uint64_t budget = 1'000'000);

// Every call to m.name inside m is the operand of a return, or a bare call
// that is the last thing a void m does.
bool tail_position_check(const MethodDef& m);

class StepBudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LoopCallCount {
  int loop_id = 0;
  std::string loop_method_name;
  uint64_t iterations = 0;  // original run
  uint64_t entries = 0;     // generated method, transformed run
  bool ok() const { return iterations == entries; }
};

struct IterationReport {
  std::vector<LoopCallCount> loops;
  bool ok() const;
};

// Throws StepBudgetExceeded if either run does not finish.
IterationReport iteration_call_equality(const Program& p,
                                        uint64_t budget = 1'000'000,
                                        const TransformOptions& opts = {});

// Same, from traces that are already available.
IterationReport iteration_call_equality(const ExecTrace& original,
                                        const ExecTrace& transformed,
                                        const std::vector<LoopReport>& loops);

struct LoopWeights {
  int while_loop = 3;
  int do_loop = 2;
  int for_loop = 3;
  int foreach_array = 2;
  int foreach_list = 2;
  int iterator_while = 1;  // while (hasNext(it)) { T e = next(it); ... }
};

struct GenConfig {
  uint64_t seed = 0;
  int max_depth = 3;  // loop nesting
  int max_stmts = 4;  // statements per block, before loops
  int max_loops = 5;  // loops per method
  int max_helpers = 2;
  int max_iterations = 5;  // bound of counters and collection sizes
  LoopWeights weights;
  // Every while/for/foreach starts with a false guard; no do-loops.
  bool zero_trip = false;
  // Some counters move away from their bound, so loops may never end.
  bool unbounded = false;
};

// Deterministic in cfg. Output passes check_semantics and, unless
// cfg.unbounded, terminates without runtime errors.
Program generate(const GenConfig& cfg);

// Replaces every loop by what running it zero times leaves behind. Only
// meaningful when no loop would run (do-loops always run once).
Program erase_loops(const Program& p);

struct FuzzMismatch {
  uint64_t seed;
  std::string detail;
};

struct FuzzSummary {
  int total = 0;
  int equivalent = 0;
  std::vector<FuzzMismatch> mismatches;
  int tail_ok = 0;       // programs whose generated methods all pass
  int iter_call_ok = 0;  // programs with matching iteration/entry counts
  int budget_exceeded = 0;
  int generated_methods = 0;
  std::optional<uint64_t> first_failing_seed;

  bool all_passed() const;
};

struct FuzzOptions {
  uint64_t budget = 1'000'000;
  TransformOptions transform;
};

// Seeds base.seed .. base.seed + n - 1.
FuzzSummary fuzz_campaign(int n, const GenConfig& base,
                          const FuzzOptions& opts = {});

// {total, equivalent, mismatches:[{seed, detail}], tail_ok, iter_call_ok,
//  budget_exceeded, first_failing_seed}
std::string to_json(const FuzzSummary& s);
std::string to_json(const DiffReport& r);

}  // namespace loop2rec
