#pragma once

// Big-step interpreter over a stack of frames. Every rule application is one
// step; the run stops with BudgetExceeded once the budget is spent.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "loop2rec/syntax.hpp"

namespace loop2rec {

struct Value;

struct VoidValue {
  friend bool operator==(const VoidValue&, const VoidValue&) = default;
};

// Arrays and lists. Cells are shared until written (value semantics).
struct SeqValue {
  bool is_list = false;
  Type elem;
  std::shared_ptr<std::vector<Value>> cells;
};

// List cursor. Copies of an iterator share the cursor, as Java references do.
struct IterCursor {
  std::shared_ptr<const std::vector<Value>> cells;
  size_t pos = 0;
  Type elem;
};
using IterValue = std::shared_ptr<IterCursor>;

struct Value {
  std::variant<VoidValue, int32_t, double, bool, SeqValue, IterValue> v;

  Value() = default;
  static Value Int(int32_t x) { return Value(x); }
  static Value Double(double x) { return Value(x); }
  static Value Bool(bool x) { return Value(x); }

  bool is_void() const { return std::holds_alternative<VoidValue>(v); }
  template <class T>
  const T* as() const {
    return std::get_if<T>(&v);
  }

 private:
  template <class T>
  explicit Value(T x) : v(std::move(x)) {}
  friend Value make_seq(bool, Type, std::vector<Value>);
  friend Value make_iter(IterValue);
};

Value make_seq(bool is_list, Type elem, std::vector<Value> cells);
Value make_iter(IterValue it);

// Dynamic type; arrays and lists report their element type.
Type runtime_type(const Value& v);

// Text used by print: ints in decimal, doubles in shortest round-trip form
// without a forced ".0" (NaN, Infinity, -Infinity), collections as [a, b].
std::string render(const Value& v);

// Exact equality: doubles compare bit-for-bit, collections element-wise,
// iterators by remaining contents and position.
bool identical(const Value& a, const Value& b);

enum class ErrorKind {
  EmptyState,
  SingleFrame,
  MissingReturn,
  UnboundVariable,
  TypeMismatch,
  DivisionByZero,
  IndexOutOfBounds,
  ArityMismatch,
  UnknownMethod,
  CastFailure,
  IteratorExhausted,
  StackOverflow,
};

const char* to_string(ErrorKind k);

class RuntimeError : public std::runtime_error {
 public:
  RuntimeError(ErrorKind kind, std::string message, SourceLoc loc = {})
      : std::runtime_error(std::move(message)), kind_(kind), loc_(loc) {}
  ErrorKind kind() const { return kind_; }
  SourceLoc loc() const { return loc_; }
  void set_loc(SourceLoc loc) {
    if (!loc_.known()) loc_ = loc;
  }

 private:
  ErrorKind kind_;
  SourceLoc loc_;
};

struct Frame {
  std::string method;
  std::vector<std::pair<std::string, Value>> bindings;
  std::optional<Value> ret;  // the return slot
  std::vector<size_t> scopes;  // binding counts at block entries

  const Value* find(const std::string& name) const;
  Value* find(const std::string& name);
};

struct State {
  std::vector<Frame> frames;
};

// Method environment: name -> definition.
struct Env {
  std::unordered_map<std::string, const MethodDef*> methods;
};

// Upd_e: adds or replaces one method.
void upd_e(Env& env, const MethodDef& m);
Env load(const Program& p);

// Upd_v: rebinds (or binds) `name` in the top frame.
void upd_v(State& s, const std::string& name, Value value);
// Upd_r: stores the returned value in the top frame.
void upd_r(State& s, Value value);
// Upd_vr: binds `name` in the penultimate frame to the top frame's return
// slot. Creates the binding when absent.
void upd_vr(State& s, const std::string& name);
// AddFrame with already evaluated arguments.
void add_frame(State& s, const std::vector<Param>& params,
               std::vector<Value> args, std::string method = "");
// AddFrame evaluating the arguments in the current top frame first.
void add_frame(State& s, const std::vector<Param>& params, const ExprList& args,
               std::string method = "");
void rem_frame(State& s);

// Eval over the top frame. Calls are not expressions here; they are run by
// the statement rules.
Value eval_expr(const Expr& e, const State& s);

enum class Rule {
  NewMethod,
  Declaration,
  Assignment,
  IndexAssignment,
  AddFrame,
  UpdVr,
  RemFrame,
  IfTrue,
  IfFalse,
  WhileTrue,
  WhileFalse,
  DoFirst,
  ForeachNext,
  ForeachEnd,
  Block,
  Return,
  Print,
};

const char* to_string(Rule r);

struct TraceEvent {
  Rule rule;
  SourceLoc loc;
  size_t depth;  // number of frames after the rule applied
  std::string method;
};

// Called after each rule application with the resulting state.
using TraceObserver = std::function<void(const TraceEvent&, const State&)>;

struct RunOptions {
  uint64_t budget = 1'000'000;
  size_t max_depth = 1'000'000;
  TraceObserver observer;
};

enum class RunStatus { Ok, BudgetExceeded, RuntimeError };

const char* to_string(RunStatus s);

struct ExecTrace {
  RunStatus status = RunStatus::Ok;
  std::vector<std::string> prints;
  // Entry frame at the end of the run, return slot excluded.
  std::vector<std::pair<std::string, Value>> final_bindings;
  std::optional<Value> result;  // entry method's return value
  std::map<int, uint64_t> loop_iterations;  // by collect_loops id
  std::map<std::string, uint64_t> method_entries;
  uint64_t steps = 0;

  std::optional<ErrorKind> error;
  SourceLoc error_loc;
  std::string error_message;
};

// Runs the entry method from an empty state on a thread with a large stack.
// Never throws for program faults; they are reported in the trace.
ExecTrace run(const Program& p, const RunOptions& opts = {});

}  // namespace loop2rec
