#pragma once

// Abstract syntax of MiniJava-L: a small call-by-value imperative language
// with while/do/for/foreach loops, typed locals, arrays and lists.
//
// Nodes are immutable once built and shared through shared_ptr<const T>, so
// rewriting passes copy only the spine they change.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace loop2rec {

struct SourceLoc {
  int line = 0;  // 0 means "synthesized"
  int column = 0;

  bool known() const { return line > 0; }
  friend bool operator==(const SourceLoc&, const SourceLoc&) = default;
};

std::string to_string(const SourceLoc& loc);

// ---------------------------------------------------------------------------
// Static types

class Type {
 public:
  enum class Kind { Int, Double, Bool, Object, Array, List, Iterator, Void };

  static Type Int() { return Type(Kind::Int); }
  static Type Double() { return Type(Kind::Double); }
  static Type Bool() { return Type(Kind::Bool); }
  static Type Object() { return Type(Kind::Object); }
  static Type Void() { return Type(Kind::Void); }
  static Type ArrayOf(Type elem) { return Type(Kind::Array, std::move(elem)); }
  static Type ListOf(Type elem) { return Type(Kind::List, std::move(elem)); }
  static Type IteratorOf(Type elem) {
    return Type(Kind::Iterator, std::move(elem));
  }
  static Type ObjectArray() { return ArrayOf(Object()); }

  Type() : Type(Kind::Void) {}

  Kind kind() const { return kind_; }
  // Element type of Array/List/Iterator. Precondition: has_elem().
  const Type& elem() const { return *elem_; }
  bool has_elem() const { return elem_ != nullptr; }

  bool is_numeric() const { return kind_ == Kind::Int || kind_ == Kind::Double; }
  bool is_primitive() const { return is_numeric() || kind_ == Kind::Bool; }
  bool is_object_array() const {
    return kind_ == Kind::Array && elem_->kind_ == Kind::Object;
  }

  std::string str() const;

  friend bool operator==(const Type& a, const Type& b);
  friend bool operator!=(const Type& a, const Type& b) { return !(a == b); }

 private:
  explicit Type(Kind k) : kind_(k) {}
  Type(Kind k, Type elem)
      : kind_(k), elem_(std::make_shared<const Type>(std::move(elem))) {}

  Kind kind_;
  std::shared_ptr<const Type> elem_;
};

// ---------------------------------------------------------------------------
// Expressions

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;
using ExprList = std::vector<ExprPtr>;

enum class BinaryOp { Add, Sub, Mul, Div, Eq, Ne, Lt, Le, Gt, Ge, And, Or };
enum class UnaryOp { Neg, Not };
enum class BuiltinFn { Abs, Nan, Iterator, HasNext, Next };

const char* spelling(BinaryOp op);
const char* spelling(UnaryOp op);
const char* spelling(BuiltinFn fn);

struct IntLit {
  int32_t value;
};
// Literals are always finite and non-negative; negation is a Unary node.
struct DoubleLit {
  double value;
};
struct BoolLit {
  bool value;
};
struct Var {
  std::string name;
};
struct Binary {
  BinaryOp op;
  ExprPtr lhs, rhs;
};
struct Unary {
  UnaryOp op;
  ExprPtr operand;
};
struct ArrayLit {
  Type elem;
  ExprList elements;
};
struct ListLit {
  Type elem;
  ExprList elements;
};
struct Index {
  ExprPtr array, index;
};
struct Length {
  ExprPtr collection;
};
struct Builtin {
  BuiltinFn fn;
  ExprList args;
};
struct Cast {
  Type target;
  ExprPtr operand;
};
// Method invocation. Only legal as a whole declaration initializer or a
// return operand; assignments of call results use CallAssign.
struct Call {
  std::string method;
  ExprList args;
};

struct Expr {
  using Node = std::variant<IntLit, DoubleLit, BoolLit, Var, Binary, Unary,
                            ArrayLit, ListLit, Index, Length, Builtin, Cast,
                            Call>;
  Node node;
  SourceLoc loc;

  template <class T>
  const T* as() const {
    return std::get_if<T>(&node);
  }
  template <class T>
  bool is() const {
    return std::holds_alternative<T>(node);
  }
};

// ---------------------------------------------------------------------------
// Statements

struct Stmt;
using StmtPtr = std::shared_ptr<const Stmt>;
using StmtList = std::vector<StmtPtr>;

struct VarDecl {
  Type type;
  std::string name;
  ExprPtr init;
};
struct Assign {
  std::string target;
  ExprPtr value;
};
struct AssignIndex {
  std::string target;
  ExprPtr index, value;
};
struct CallAssign {
  std::optional<std::string> target;
  std::string method;
  ExprList args;
};
struct If {
  ExprPtr cond;
  StmtList then_body;
  std::optional<StmtList> else_body;
};
struct While {
  ExprPtr cond;
  StmtList body;
};
struct DoWhile {
  StmtList body;
  ExprPtr cond;
};
// init holds VarDecls (all of one type) or Assigns, never a mix.
struct For {
  StmtList init;
  ExprPtr cond;
  StmtList update;  // Assign | CallAssign
  StmtList body;
};
struct Foreach {
  Type elem_type;
  std::string elem;
  ExprPtr collection;
  StmtList body;
};
struct Block {
  StmtList body;
};
struct Return {
  ExprPtr value;
};
// print(a, "text", b) writes the rendered items followed by a newline.
struct PrintItem {
  std::variant<std::string, ExprPtr> item;
};
struct Print {
  std::vector<PrintItem> items;
};

struct Stmt {
  using Node = std::variant<VarDecl, Assign, AssignIndex, CallAssign, If, While,
                            DoWhile, For, Foreach, Block, Return, Print>;
  Node node;
  SourceLoc loc;

  template <class T>
  const T* as() const {
    return std::get_if<T>(&node);
  }
  template <class T>
  bool is() const {
    return std::holds_alternative<T>(node);
  }
  bool is_loop() const {
    return is<While>() || is<DoWhile>() || is<For>() || is<Foreach>();
  }
};

// ---------------------------------------------------------------------------
// Methods and programs

struct Param {
  std::string name;
  Type type;
  friend bool operator==(const Param&, const Param&) = default;
};

struct MethodDef {
  std::string name;
  Type result = Type::Void();
  std::vector<Param> params;
  StmtList body;
  ExprPtr ret;  // trailing `return e;`, null when absent
  SourceLoc loc;

  const Param* find_param(std::string_view n) const;
};

struct Program {
  std::vector<MethodDef> methods;
  std::string entry = "main";

  const MethodDef* find(std::string_view name) const;
};

// ---------------------------------------------------------------------------
// Construction helpers

ExprPtr make_expr(Expr::Node node, SourceLoc loc = {});
StmtPtr make_stmt(Stmt::Node node, SourceLoc loc = {});

ExprPtr int_lit(int32_t v);
ExprPtr double_lit(double v);
ExprPtr bool_lit(bool v);
ExprPtr var(std::string name);
ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr unary(UnaryOp op, ExprPtr operand);
ExprPtr builtin(BuiltinFn fn, ExprList args);
ExprPtr call(std::string method, ExprList args);

// ---------------------------------------------------------------------------
// Queries

// Exact AST equality; names compare verbatim, source locations are ignored.
bool structural_eq(const Program& a, const Program& b);
bool structural_eq(const MethodDef& a, const MethodDef& b);
bool structural_eq(const StmtList& a, const StmtList& b);
bool structural_eq(const Stmt& a, const Stmt& b);
bool structural_eq(const ExprPtr& a, const ExprPtr& b);

// Every identifier spelled in the program: method names, parameters,
// declared locals and variable references.
std::vector<std::string> all_identifiers(const Program& p);

// True if any While/DoWhile/For/Foreach occurs in the statements.
bool contains_loop(const StmtList& body);
bool contains_loop(const Program& p);

// Deterministic source text; parse(pretty_print(p)) reproduces p.
std::string pretty_print(const Program& p);
std::string pretty_print(const MethodDef& m);
std::string pretty_print(const Stmt& s, int indent = 0);
std::string pretty_print(const Expr& e);

// Shortest decimal text that reads back to exactly `v`.
std::string format_double(double v);

}  // namespace loop2rec
