#include <cctype>
#include <map>
#include <optional>
#include <set>

#include "zec/program.hpp"

namespace zec {

ParseError::ParseError(int l, int c, const std::string& tok, const std::string& message)
    : std::runtime_error("line " + std::to_string(l) + ", column " + std::to_string(c) + ": " + message +
                         (tok.empty() ? std::string() : " near '" + tok + "'")),
      line(l),
      column(c),
      token(tok) {}

bool is_supported_negation(std::string_view f, std::size_t arity) {
  if (f == "not_stoppedIn" || f == "not_startedIn") return arity == 3;
  if (f == "not_holdsAt") return arity == 2 || arity == 3;
  if (f == "not_happens") return arity == 2;
  return false;
}

namespace {

enum class Tok { Name, Var, Number, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_blank();
      Token t;
      t.line = line_;
      t.col = col_;
      if (pos_ >= src_.size()) {
        t.kind = Tok::End;
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (std::islower(static_cast<unsigned char>(c))) {
        t.kind = Tok::Name;
        t.text = ident();
      } else if (std::isupper(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Tok::Var;
        t.text = ident();
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        t.kind = Tok::Number;
        t.text = number();
      } else if (c == '\'') {
        t.kind = Tok::Name;
        t.text = quoted();
      } else {
        t.kind = Tok::Punct;
        t.text = punct();
      }
      out.push_back(std::move(t));
    }
  }

 private:
  char peek(std::size_t k = 0) const { return pos_ + k < src_.size() ? src_[pos_ + k] : '\0'; }

  void advance(std::size_t n = 1) {
    for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  void skip_blank() {
    for (;;) {
      char c = peek();
      if (c == '%') {
        while (pos_ < src_.size() && peek() != '\n') advance();
      } else if (c != '\0' && std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        return;
      }
    }
  }

  std::string ident() {
    std::string s;
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') {
      s.push_back(peek());
      advance();
    }
    return s;
  }

  std::string number() {
    std::string s;
    while (std::isdigit(static_cast<unsigned char>(peek()))) {
      s.push_back(peek());
      advance();
    }
    if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
      s.push_back('.');
      advance();
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        s.push_back(peek());
        advance();
      }
    }
    return s;
  }

  std::string quoted() {
    int l = line_, c = col_;
    advance();
    std::string s;
    while (peek() != '\'') {
      if (peek() == '\0' || peek() == '\n') throw ParseError(l, c, s, "unterminated quoted atom");
      s.push_back(peek());
      advance();
    }
    advance();
    return s;
  }

  std::string punct() {
    static const char* multi[] = {".<>.", ".=<.", ".>=.", ".=.", ".<.", ".>.", ":-", "?-"};
    for (const char* m : multi) {
      std::string_view mv(m);
      if (src_.substr(pos_, mv.size()) == mv) {
        advance(mv.size());
        return std::string(mv);
      }
    }
    char c = peek();
    static const std::string single = "(),.!+-*/";
    if (single.find(c) == std::string::npos) {
      throw ParseError(line_, col_, std::string(1, c), "unexpected character");
    }
    advance();
    return std::string(1, c);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

bool is_relop(const std::string& s) {
  return s == ".=." || s == ".<>." || s == ".<." || s == ".=<." || s == ".>=." || s == ".>.";
}

class Parser {
 public:
  explicit Parser(std::string_view text) : toks_(Lexer(text).run()) {}

  ModelProgram program() {
    ModelProgram p;
    while (cur().kind != Tok::End) {
      if (is_punct("?-")) {
        p.add_query(query());
      } else {
        p.add_clause(clause());
      }
    }
    return p;
  }

  Query query() {
    reset_vars();
    Query q;
    const Token& start = cur();
    expect("?-");
    if (cur().kind == Tok::End || is_punct(".")) fail(cur(), "empty query");
    for (;;) {
      if (is_punct("!")) {
        next();
        q.directives.push_back(directive());
      } else {
        q.goals.push_back(literal());
      }
      if (is_punct(",")) {
        next();
        continue;
      }
      break;
    }
    if (is_punct(".")) {
      next();
    } else if (cur().kind != Tok::End && !is_punct("?-")) {
      fail(cur(), "expected ',' or '.'");
    }
    q.var_names = names_;
    q.num_vars = static_cast<std::uint32_t>(names_.size());
    (void)start;
    return q;
  }

  bool at_end() const { return cur().kind == Tok::End; }

 private:
  const Token& cur() const { return toks_[pos_]; }
  void next() {
    if (pos_ + 1 < toks_.size()) ++pos_;
  }
  bool is_punct(const char* p) const { return cur().kind == Tok::Punct && cur().text == p; }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    throw ParseError(t.line, t.col, t.kind == Tok::End ? "<end of input>" : t.text, msg);
  }

  void expect(const char* p) {
    if (!is_punct(p)) fail(cur(), std::string("expected '") + p + "'");
    next();
  }

  void reset_vars() {
    vars_.clear();
    names_.clear();
  }

  Term variable(const std::string& name) {
    if (name == "_") {
      names_.push_back("_");
      return make_var(static_cast<VarId>(names_.size() - 1));
    }
    auto [it, inserted] = vars_.try_emplace(name, static_cast<VarId>(names_.size()));
    if (inserted) names_.push_back(name);
    return make_var(it->second);
  }

  Clause clause() {
    reset_vars();
    Clause c;
    const Token& start = cur();
    c.line = start.line;
    if (is_punct("!")) fail(cur(), "directives are only allowed in queries");
    c.head = literal();
    Rel rel;
    if (!c.head->is_compound() || constraint_relation(c.head->id, rel)) fail(start, "clause head must be an atom");
    if (c.head->name().rfind("not_", 0) == 0) fail(start, "cannot define a negation built-in");
    if (is_punct(":-")) {
      next();
      for (;;) {
        if (is_punct("!")) fail(cur(), "directives are only allowed in queries");
        c.body.push_back(literal());
        if (!is_punct(",")) break;
        next();
      }
    }
    expect(".");
    c.var_names = names_;
    c.num_vars = static_cast<std::uint32_t>(names_.size());
    return c;
  }

  Directive directive() {
    const Token& t = cur();
    if (t.kind != Tok::Name) fail(t, "expected directive name");
    Directive d;
    d.name = t.text;
    if (d.name != "incr_max_time") fail(t, "unknown directive");
    next();
    expect("(");
    d.args.push_back(expr());
    while (is_punct(",")) {
      next();
      d.args.push_back(expr());
    }
    expect(")");
    return d;
  }

  Term literal() {
    const Token& start = cur();
    Term lhs = expr();
    if (cur().kind == Tok::Punct && is_relop(cur().text)) {
      Symbol op = intern(cur().text);
      next();
      Term rhs = expr();
      return make_compound(op, {lhs, rhs});
    }
    if (!lhs->is_compound() || is_arith_functor(lhs->id, lhs->arity())) fail(start, "expected an atom or a constraint");
    const std::string& f = lhs->name();
    if (f.rfind("not_", 0) == 0 && !is_supported_negation(f, lhs->arity())) {
      fail(start, "unsupported negation " + f + "/" + std::to_string(lhs->arity()));
    }
    return lhs;
  }

  Term expr() {
    Term t = product();
    while (is_punct("+") || is_punct("-")) {
      Symbol op = cur().text == "+" ? sym::plus() : sym::minus();
      next();
      Term r = product();
      if (t->is_num() && r->is_num()) {
        t = make_num(op == sym::plus() ? Rational(t->num + r->num) : Rational(t->num - r->num));
      } else {
        t = make_compound(op, {t, r});
      }
    }
    return t;
  }

  Term product() {
    Term t = unary();
    while (is_punct("*") || is_punct("/")) {
      const Token op_tok = cur();
      bool mul = op_tok.text == "*";
      next();
      Term r = unary();
      if (mul) {
        if (t->is_num() && r->is_num()) {
          t = make_num(t->num * r->num);
        } else if (!t->is_num() && !r->is_num()) {
          fail(op_tok, "nonlinear multiplication");
        } else {
          t = make_compound(sym::times(), {t, r});
        }
      } else {
        if (!r->is_num()) fail(op_tok, "nonlinear division");
        if (r->num == 0) fail(op_tok, "division by zero");
        if (t->is_num()) {
          t = make_num(t->num / r->num);
        } else {
          t = make_compound(sym::divide(), {t, r});
        }
      }
    }
    return t;
  }

  Term unary() {
    if (is_punct("-")) {
      next();
      Term t = unary();
      if (t->is_num()) return make_num(-t->num);
      return make_compound(sym::neg(), {t});
    }
    return primary();
  }

  Term primary() {
    const Token t = cur();
    switch (t.kind) {
      case Tok::Number:
        next();
        return make_num(parse_decimal(t.text));
      case Tok::Var:
        next();
        return variable(t.text);
      case Tok::Name: {
        next();
        Symbol f = intern(t.text);
        if (!is_punct("(")) return make_atom(f);
        next();
        std::vector<Term> args;
        args.push_back(expr());
        while (is_punct(",")) {
          next();
          args.push_back(expr());
        }
        expect(")");
        return make_compound(f, std::move(args));
      }
      case Tok::Punct:
        if (t.text == "(") {
          next();
          Term e = expr();
          expect(")");
          return e;
        }
        fail(t, "unexpected token");
      case Tok::End:
        fail(t, "unexpected end of input");
    }
    fail(t, "unexpected token");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::map<std::string, VarId> vars_;
  std::vector<std::string> names_;
};

}  // namespace

ModelProgram parse_program(std::string_view text) { return Parser(text).program(); }

Query parse_query(std::string_view text) {
  Parser p(text);
  Query q = p.query();
  if (!p.at_end()) throw ParseError(0, 0, "", "trailing input after query");
  q.text = std::string(text);
  return q;
}

}  // namespace zec
