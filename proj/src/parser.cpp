#include "loop2rec/parser.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <unordered_set>

namespace loop2rec {

namespace {

std::string describe(std::string_view expected, std::string_view found) {
  return "expected " + std::string(expected) + ", found " +
         (found.empty() ? std::string("end of input")
                        : "'" + std::string(found) + "'");
}

}  // namespace

ParseError::ParseError(int line, int column, std::string expected,
                       std::string found)
    : std::runtime_error(describe(expected, found)),
      line_(line),
      column_(column),
      expected_(std::move(expected)),
      found_(std::move(found)) {}

std::string ParseError::format(std::string_view file) const {
  return std::string(file) + ":" + std::to_string(line_) + ":" +
         std::to_string(column_) + ": " + what();
}

namespace {

constexpr std::array kKeywords = {
    "int",   "double", "boolean", "Object", "void",  "List",   "Iterator",
    "new",   "if",     "else",    "while",  "do",    "for",    "return",
    "print", "true",   "false",   "abs",    "nan",   "length", "iterator",
    "hasNext", "next"};

enum class Tok { Ident, Int, Double, String, Punct, End };

struct Token {
  Tok kind;
  std::string text;  // identifier, punctuation or literal spelling
  SourceLoc loc;
  int32_t int_value = 0;
  double double_value = 0;
};

[[noreturn]] void fail(SourceLoc loc, std::string expected, std::string found) {
  throw ParseError(loc.line, loc.column, std::move(expected), std::move(found));
}

std::string printable(char c) {
  auto u = static_cast<unsigned char>(c);
  if (u >= 0x20 && u < 0x7f) return std::string(1, c);
  char buf[8];
  std::snprintf(buf, sizeof buf, "\\x%02x", u);
  return buf;
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      SourceLoc loc{line_, col_};
      if (pos_ >= src_.size()) {
        out.push_back({Tok::End, "", loc});
        return out;
      }
      char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                src_[pos_] == '_'))
          advance();
        out.push_back({Tok::Ident, std::string(src_.substr(start, pos_ - start)),
                       loc});
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        out.push_back(number(loc));
      } else if (c == '"') {
        out.push_back(string(loc));
      } else {
        out.push_back(punct(loc));
      }
    }
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  bool at(std::string_view s) const { return src_.substr(pos_, s.size()) == s; }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (at("//")) {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  bool digit_at(size_t i) const {
    return i < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i]));
  }

  Token number(SourceLoc loc) {
    size_t start = pos_;
    bool is_double = false;
    while (digit_at(pos_)) advance();
    if (pos_ < src_.size() && src_[pos_] == '.' && digit_at(pos_ + 1)) {
      is_double = true;
      advance();
      while (digit_at(pos_)) advance();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (digit_at(look)) {
        is_double = true;
        while (pos_ < look) advance();
        while (digit_at(pos_)) advance();
      }
    }
    std::string text(src_.substr(start, pos_ - start));
    Token t{is_double ? Tok::Double : Tok::Int, text, loc};
    const char* b = text.data();
    const char* e = b + text.size();
    if (is_double) {
      auto [p, ec] = std::from_chars(b, e, t.double_value);
      if (ec != std::errc() || p != e || !std::isfinite(t.double_value))
        fail(loc, "finite double literal", text);
    } else {
      auto [p, ec] = std::from_chars(b, e, t.int_value);
      if (ec != std::errc() || p != e) fail(loc, "32-bit int literal", text);
    }
    return t;
  }

  Token string(SourceLoc loc) {
    advance();  // opening quote
    std::string value;
    for (;;) {
      if (pos_ >= src_.size() || src_[pos_] == '\n')
        fail(loc, "closing '\"'", pos_ >= src_.size() ? "" : "newline");
      char c = src_[pos_];
      if (c == '"') {
        advance();
        break;
      }
      if (c == '\\') {
        advance();
        if (pos_ >= src_.size()) fail(loc, "escape sequence", "");
        char esc = src_[pos_];
        switch (esc) {
          case 'n': value += '\n'; break;
          case 't': value += '\t'; break;
          case '"': value += '"'; break;
          case '\\': value += '\\'; break;
          default:
            fail({line_, col_}, "escape sequence", printable(esc));
        }
        advance();
        continue;
      }
      value += c;
      advance();
    }
    Token t{Tok::String, value, loc};
    return t;
  }

  Token punct(SourceLoc loc) {
    static constexpr std::array kTwo = {"<=", ">=", "==", "!=", "&&",
                                        "||", "++", "--"};
    for (const char* p : kTwo) {
      if (at(p)) {
        advance();
        advance();
        return {Tok::Punct, p, loc};
      }
    }
    char c = src_[pos_];
    if (std::string_view("(){}[];,:<>=+-*/!").find(c) != std::string_view::npos) {
      advance();
      return {Tok::Punct, std::string(1, c), loc};
    }
    fail(loc, "token", printable(c));
  }

  std::string_view src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

enum class SeqKind { MethodBody, IfBranch, Block, LoopBody };

constexpr int kMaxNesting = 200;

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Program program() {
    Program p;
    std::unordered_set<std::string> names;
    while (peek().kind != Tok::End) {
      MethodDef m = method();
      if (!names.insert(m.name).second)
        throw ParseError(m.loc.line, m.loc.column,
                         "unique method name (duplicate method '" + m.name + "')",
                         m.name);
      p.methods.push_back(std::move(m));
    }
    return p;
  }

 private:
  // --- token helpers -------------------------------------------------------

  const Token& peek(size_t ahead = 0) const {
    size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  bool is_punct(std::string_view p, size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::Punct && t.text == p;
  }
  bool is_word(std::string_view w, size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::Ident && t.text == w;
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool accept(std::string_view p) {
    if (!is_punct(p)) return false;
    next();
    return true;
  }
  [[noreturn]] void unexpected(std::string expected) const {
    fail(peek().loc, std::move(expected), peek().text);
  }
  const Token& expect(std::string_view p) {
    if (!is_punct(p)) unexpected("'" + std::string(p) + "'");
    return next();
  }
  void expect_word(std::string_view w) {
    if (!is_word(w)) unexpected("'" + std::string(w) + "'");
    next();
  }
  std::string identifier() {
    const Token& t = peek();
    if (t.kind != Tok::Ident || is_reserved_word(t.text))
      unexpected("identifier");
    return next().text;
  }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p(p) {
      if (++p.depth_ > kMaxNesting) p.unexpected("shallower nesting");
    }
    ~DepthGuard() { --p.depth_; }
    Parser& p;
  };

  // --- types ---------------------------------------------------------------

  bool starts_type(size_t ahead = 0) const {
    const Token& t = peek(ahead);
    if (t.kind != Tok::Ident) return false;
    static const std::unordered_set<std::string> kTypeWords = {
        "int", "double", "boolean", "Object", "void", "List", "Iterator"};
    return kTypeWords.count(t.text) > 0;
  }

  Type type(bool allow_void = false) {
    DepthGuard guard(*this);
    SourceLoc loc = peek().loc;
    Type t;
    if (is_word("int")) {
      next();
      t = Type::Int();
    } else if (is_word("double")) {
      next();
      t = Type::Double();
    } else if (is_word("boolean")) {
      next();
      t = Type::Bool();
    } else if (is_word("Object")) {
      next();
      t = Type::Object();
    } else if (is_word("void")) {
      next();
      if (!allow_void || is_punct("[")) fail(loc, "non-void type", "void");
      return Type::Void();
    } else if (is_word("List") || is_word("Iterator")) {
      bool list = next().text == "List";
      expect("<");
      Type elem = type();
      expect(">");
      t = list ? Type::ListOf(std::move(elem)) : Type::IteratorOf(std::move(elem));
    } else {
      unexpected("type");
    }
    while (is_punct("[") && is_punct("]", 1)) {
      next();
      next();
      t = Type::ArrayOf(std::move(t));
    }
    return t;
  }

  // --- methods -------------------------------------------------------------

  MethodDef method() {
    MethodDef m;
    m.loc = peek().loc;
    m.result = type(/*allow_void=*/true);
    m.loc = peek().loc;
    m.name = identifier();
    expect("(");
    if (!is_punct(")")) {
      do {
        Param p;
        p.type = type();
        SourceLoc at = peek().loc;
        p.name = identifier();
        if (m.find_param(p.name))
          throw ParseError(at.line, at.column,
                           "distinct parameter names (duplicate parameter '" +
                               p.name + "')",
                           p.name);
        m.params.push_back(std::move(p));
      } while (accept(","));
    }
    expect(")");
    expect("{");
    m.body = sequence(SeqKind::MethodBody, false);
    expect("}");
    if (!m.body.empty()) {
      if (auto* r = m.body.back()->as<Return>()) {
        m.ret = r->value;
        m.body.pop_back();
      }
    }
    return m;
  }

  // --- statements ----------------------------------------------------------

  // Parses statements up to (not including) the closing '}'.
  StmtList sequence(SeqKind kind, bool in_loop) {
    StmtList out;
    while (!is_punct("}")) {
      if (peek().kind == Tok::End) unexpected("'}'");
      StmtPtr s = statement(kind, in_loop);
      bool is_return = s->is<Return>();
      out.push_back(std::move(s));
      if (is_return && !is_punct("}"))
        throw ParseError(out.back()->loc.line, out.back()->loc.column,
                         "return as the last statement of a method or "
                         "if-branch",
                         "return");
    }
    return out;
  }

  // Loop and if bodies: a braced sequence or a single statement.
  StmtList body(SeqKind kind, bool in_loop) {
    if (accept("{")) {
      StmtList out = sequence(kind, in_loop);
      expect("}");
      return out;
    }
    StmtList out;
    out.push_back(statement(kind, in_loop));
    return out;
  }

  StmtPtr statement(SeqKind kind, bool in_loop) {
    DepthGuard guard(*this);
    const Token& t = peek();
    SourceLoc loc = t.loc;
    if (is_punct("{")) {
      next();
      StmtList inner = sequence(SeqKind::Block, in_loop);
      expect("}");
      return make_stmt(Block{std::move(inner)}, loc);
    }
    if (is_word("if")) {
      next();
      expect("(");
      ExprPtr cond = expression();
      expect(")");
      StmtList then_body = body(SeqKind::IfBranch, in_loop);
      std::optional<StmtList> else_body;
      if (is_word("else")) {
        next();
        else_body = body(SeqKind::IfBranch, in_loop);
      }
      return make_stmt(If{cond, std::move(then_body), std::move(else_body)},
                       loc);
    }
    if (is_word("while")) {
      next();
      expect("(");
      ExprPtr cond = expression();
      expect(")");
      return make_stmt(While{cond, body(SeqKind::LoopBody, true)}, loc);
    }
    if (is_word("do")) {
      next();
      StmtList b = body(SeqKind::LoopBody, true);
      expect_word("while");
      expect("(");
      ExprPtr cond = expression();
      expect(")");
      expect(";");
      return make_stmt(DoWhile{std::move(b), cond}, loc);
    }
    if (is_word("for")) return for_statement(loc);
    if (is_word("return")) {
      if (in_loop)
        throw ParseError(loc.line, loc.column,
                         "statement (return not allowed inside loop)",
                         "return");
      if (kind != SeqKind::MethodBody && kind != SeqKind::IfBranch)
        throw ParseError(loc.line, loc.column,
                         "return as the last statement of a method or "
                         "if-branch",
                         "return");
      next();
      ExprPtr value = expression();
      expect(";");
      return make_stmt(Return{value}, loc);
    }
    if (is_word("print")) {
      next();
      expect("(");
      Print p;
      if (!is_punct(")")) {
        do {
          if (peek().kind == Tok::String)
            p.items.push_back({next().text});
          else
            p.items.push_back({expression()});
        } while (accept(","));
      }
      expect(")");
      expect(";");
      return make_stmt(std::move(p), loc);
    }
    if (starts_type()) {
      StmtPtr d = declaration(type());
      expect(";");
      return d;
    }
    StmtPtr s = simple_statement();
    expect(";");
    return s;
  }

  StmtPtr declaration(Type t) {
    SourceLoc loc = peek().loc;
    std::string name = identifier();
    expect("=");
    ExprPtr init = expression();
    return make_stmt(VarDecl{std::move(t), std::move(name), init}, loc);
  }

  // x = e | x = m(..) | m(..) | a[i] = e | x++ | x--
  StmtPtr simple_statement() {
    SourceLoc loc = peek().loc;
    if (peek().kind != Tok::Ident || is_reserved_word(peek().text))
      unexpected("statement");
    std::string name = identifier();
    if (is_punct("(")) {
      ExprList args = arguments();
      return make_stmt(CallAssign{std::nullopt, std::move(name), std::move(args)},
                       loc);
    }
    if (is_punct("++") || is_punct("--")) {
      BinaryOp op = next().text == "++" ? BinaryOp::Add : BinaryOp::Sub;
      return make_stmt(Assign{name, binary(op, var(name), int_lit(1))}, loc);
    }
    if (accept("[")) {
      ExprPtr index = expression();
      expect("]");
      expect("=");
      ExprPtr value = expression();
      return make_stmt(AssignIndex{std::move(name), index, value}, loc);
    }
    expect("=");
    ExprPtr value = expression();
    if (auto* c = value->as<Call>())
      return make_stmt(CallAssign{std::move(name), c->method, c->args}, loc);
    return make_stmt(Assign{std::move(name), value}, loc);
  }

  StmtPtr for_statement(SourceLoc loc) {
    next();  // for
    expect("(");
    // foreach: type ident ':'
    size_t save = pos_;
    if (starts_type()) {
      Type t = type();
      if (peek().kind == Tok::Ident && is_punct(":", 1)) {
        std::string elem = identifier();
        expect(":");
        ExprPtr coll = expression();
        expect(")");
        return make_stmt(
            Foreach{std::move(t), std::move(elem), coll,
                    body(SeqKind::LoopBody, true)},
            loc);
      }
      pos_ = save;
    }
    StmtList init;
    if (!is_punct(";")) {
      if (starts_type()) {
        Type t = type();
        do {
          init.push_back(declaration(t));
        } while (accept(","));
      } else {
        do {
          StmtPtr s = simple_statement();
          if (!s->is<Assign>()) fail(s->loc, "assignment in for-init", "call");
          init.push_back(std::move(s));
        } while (accept(","));
      }
    }
    expect(";");
    ExprPtr cond = is_punct(";") ? bool_lit(true) : expression();
    expect(";");
    StmtList update;
    if (!is_punct(")")) {
      do {
        StmtPtr s = simple_statement();
        if (s->is<AssignIndex>())
          fail(s->loc, "assignment or call in for-update", "indexed assignment");
        update.push_back(std::move(s));
      } while (accept(","));
    }
    expect(")");
    return make_stmt(For{std::move(init), cond, std::move(update),
                         body(SeqKind::LoopBody, true)},
                     loc);
  }

  // --- expressions ---------------------------------------------------------

  ExprList arguments() {
    expect("(");
    ExprList args;
    if (!is_punct(")")) {
      do {
        args.push_back(expression());
      } while (accept(","));
    }
    expect(")");
    return args;
  }

  ExprPtr expression() {
    DepthGuard guard(*this);
    return logical_or();
  }

  template <class Next>
  ExprPtr left_assoc(
      Next next_level,
      std::initializer_list<std::pair<const char*, BinaryOp>> ops) {
    ExprPtr lhs = (this->*next_level)();
    for (;;) {
      bool matched = false;
      for (const auto& [text, op] : ops) {
        if (is_punct(text)) {
          SourceLoc loc = next().loc;
          ExprPtr rhs = (this->*next_level)();
          lhs = make_expr(Binary{op, lhs, rhs}, loc);
          matched = true;
          break;
        }
      }
      if (!matched) return lhs;
    }
  }

  ExprPtr logical_or() {
    return left_assoc(&Parser::logical_and, {{"||", BinaryOp::Or}});
  }
  ExprPtr logical_and() {
    return left_assoc(&Parser::equality, {{"&&", BinaryOp::And}});
  }
  ExprPtr equality() {
    return left_assoc(&Parser::relational,
                      {{"==", BinaryOp::Eq}, {"!=", BinaryOp::Ne}});
  }
  ExprPtr relational() {
    return left_assoc(&Parser::additive,
                      {{"<=", BinaryOp::Le},
                       {">=", BinaryOp::Ge},
                       {"<", BinaryOp::Lt},
                       {">", BinaryOp::Gt}});
  }
  ExprPtr additive() {
    return left_assoc(&Parser::multiplicative,
                      {{"+", BinaryOp::Add}, {"-", BinaryOp::Sub}});
  }
  ExprPtr multiplicative() {
    return left_assoc(&Parser::unary_expr,
                      {{"*", BinaryOp::Mul}, {"/", BinaryOp::Div}});
  }

  ExprPtr unary_expr() {
    DepthGuard guard(*this);
    SourceLoc loc = peek().loc;
    if (accept("-")) return make_expr(Unary{UnaryOp::Neg, unary_expr()}, loc);
    if (accept("!")) return make_expr(Unary{UnaryOp::Not, unary_expr()}, loc);
    if (is_punct("(") && starts_type(1)) {
      next();
      Type t = type();
      expect(")");
      return make_expr(Cast{std::move(t), unary_expr()}, loc);
    }
    return postfix();
  }

  ExprPtr postfix() {
    ExprPtr e = primary();
    while (is_punct("[")) {
      SourceLoc loc = next().loc;
      ExprPtr index = expression();
      expect("]");
      e = make_expr(Index{e, index}, loc);
    }
    return e;
  }

  ExprPtr builtin_call(BuiltinFn fn, size_t arity, SourceLoc loc) {
    ExprList args = arguments();
    if (args.size() != arity)
      fail(loc, std::to_string(arity) + " argument(s) to " + spelling(fn),
           std::to_string(args.size()) + " argument(s)");
    return make_expr(Builtin{fn, std::move(args)}, loc);
  }

  ExprPtr primary() {
    const Token& t = peek();
    SourceLoc loc = t.loc;
    switch (t.kind) {
      case Tok::Int: {
        int32_t v = next().int_value;
        return make_expr(IntLit{v}, loc);
      }
      case Tok::Double: {
        double v = next().double_value;
        return make_expr(DoubleLit{v}, loc);
      }
      case Tok::Punct:
        if (accept("(")) {
          ExprPtr e = expression();
          expect(")");
          return e;
        }
        unexpected("expression");
      case Tok::String:
        fail(loc, "expression", "\"" + t.text + "\"");
      case Tok::End:
        unexpected("expression");
      case Tok::Ident:
        break;
    }
    const std::string& w = t.text;
    if (w == "true" || w == "false") {
      next();
      return make_expr(BoolLit{w == "true"}, loc);
    }
    if (w == "new") {
      next();
      Type ty = type();
      expect("{");
      ExprList elems;
      if (!is_punct("}")) {
        do {
          elems.push_back(expression());
        } while (accept(","));
      }
      expect("}");
      if (ty.kind() == Type::Kind::Array)
        return make_expr(ArrayLit{ty.elem(), std::move(elems)}, loc);
      if (ty.kind() == Type::Kind::List)
        return make_expr(ListLit{ty.elem(), std::move(elems)}, loc);
      fail(loc, "array or list type after 'new'", ty.str());
    }
    if (w == "abs") return next(), builtin_call(BuiltinFn::Abs, 1, loc);
    if (w == "nan") return next(), builtin_call(BuiltinFn::Nan, 0, loc);
    if (w == "iterator") return next(), builtin_call(BuiltinFn::Iterator, 1, loc);
    if (w == "hasNext") return next(), builtin_call(BuiltinFn::HasNext, 1, loc);
    if (w == "next") return next(), builtin_call(BuiltinFn::Next, 1, loc);
    if (w == "length") {
      next();
      ExprList args = arguments();
      if (args.size() != 1)
        fail(loc, "1 argument(s) to length",
             std::to_string(args.size()) + " argument(s)");
      return make_expr(Length{args[0]}, loc);
    }
    std::string name = identifier();
    if (is_punct("(")) return make_expr(Call{name, arguments()}, loc);
    return make_expr(Var{std::move(name)}, loc);
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
  int depth_ = 0;
};

}  // namespace

bool is_reserved_word(std::string_view word) {
  for (const char* k : kKeywords)
    if (word == k) return true;
  return false;
}

Program parse(std::string_view text) {
  Parser p(Lexer(text).run());
  return p.program();
}

}  // namespace loop2rec
