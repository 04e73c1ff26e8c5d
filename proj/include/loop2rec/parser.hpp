#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "loop2rec/syntax.hpp"

namespace loop2rec {

// First lexical or grammatical violation in a source text.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, std::string expected, std::string found);

  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& expected() const { return expected_; }
  const std::string& found() const { return found_; }

  // "file:line:col: message"
  std::string format(std::string_view file) const;

 private:
  int line_;
  int column_;
  std::string expected_;
  std::string found_;
};

// Parses MiniJava-L source. Throws ParseError; never crashes on any input.
Program parse(std::string_view text);

struct SemanticError {
  SourceLoc loc;
  std::string method;
  std::string message;

  std::string format(std::string_view file) const;
};

// Declared-before-use, no shadowing, static typing, call placement and
// foreach collection types. Empty result means the program is well-formed.
std::vector<SemanticError> check_semantics(const Program& p);

using VarTypeLookup =
    std::function<std::optional<Type>(const std::string& name)>;

// Static type of `e`, or nullopt when it is ill-typed or refers to unknown
// names. Does not enforce call placement.
std::optional<Type> expr_type(const Expr& e, const Program& p,
                              const VarTypeLookup& lookup);

// Builtin function names are reserved and cannot name methods or variables.
bool is_reserved_word(std::string_view word);

}  // namespace loop2rec
