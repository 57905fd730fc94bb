// SPDX-License-Identifier: Apache-2.0
#include "hakf/fragment.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>

#include "hakf/error.hpp"

namespace hakf::fragment {

namespace {

std::string render_term(const Term& term) {
  struct Visitor {
    std::string operator()(const Var& v) const { return v.name; }
    std::string operator()(const Number& n) const { return format_number(n.value); }
    std::string operator()(const Dist& d) const { return "dist(" + d.a + ", " + d.b + ")"; }
  };
  return std::visit(Visitor{}, term);
}

std::string render_expr(const Expr& expr) {
  std::string out = render_term(expr.lhs);
  if (expr.minus) out += " - " + render_term(*expr.minus);
  return out;
}

std::string render_item(const BodyItem& item) {
  if (const auto* atom = std::get_if<EventAtom>(&item)) {
    return "simple_event(" + atom->label + ", " + atom->time_var + ", " + atom->loc_var + ")";
  }
  const auto& cmp = std::get<Comparison>(item);
  return render_expr(cmp.lhs) + (cmp.op == CmpOp::ge ? " >= " : " =< ") + render_expr(cmp.rhs);
}

enum class Tok { atom, var, number, lparen, rparen, comma, neck, period, ge, le, minus, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::end: return "end of input";
    default: return "'" + t.text + "'";
  }
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> tokens;
    while (true) {
      skip_blank();
      Token t;
      t.line = line_;
      t.column = column_;
      if (pos_ >= text_.size()) {
        t.kind = Tok::end;
        tokens.push_back(t);
        return tokens;
      }
      char c = text_[pos_];
      if (std::islower(static_cast<unsigned char>(c))) {
        t.kind = Tok::atom;
        t.text = take_word();
      } else if (std::isupper(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Tok::var;
        t.text = take_word();
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        t.kind = Tok::number;
        t.text = take_number();
      } else if (c == '(') {
        t = punct(Tok::lparen, 1);
      } else if (c == ')') {
        t = punct(Tok::rparen, 1);
      } else if (c == ',') {
        t = punct(Tok::comma, 1);
      } else if (c == '.') {
        t = punct(Tok::period, 1);
      } else if (c == '-') {
        t = punct(Tok::minus, 1);
      } else if (text_.substr(pos_, 2) == ":-") {
        t = punct(Tok::neck, 2);
      } else if (text_.substr(pos_, 2) == ">=") {
        t = punct(Tok::ge, 2);
      } else if (text_.substr(pos_, 2) == "=<") {
        t = punct(Tok::le, 2);
      } else {
        throw SyntaxError(ErrorCode::syntax_error, line_, column_, {},
                          "unexpected character '" + std::string(1, c) + "' at line " +
                              std::to_string(line_) + ", column " + std::to_string(column_));
      }
      tokens.push_back(std::move(t));
    }
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_blank() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '%') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  Token punct(Tok kind, std::size_t width) {
    Token t;
    t.kind = kind;
    t.line = line_;
    t.column = column_;
    t.text = std::string(text_.substr(pos_, width));
    for (std::size_t i = 0; i < width; ++i) advance();
    return t;
  }

  std::string take_word() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      advance();
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string take_number() {
    std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
    };
    digits();
    if (pos_ + 1 < text_.size() && text_[pos_] == '.' &&
        std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) {
      advance();
      digits();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_;
      std::size_t save_col = column_;
      advance();
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) advance();
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        digits();
      } else {
        pos_ = save;
        column_ = save_col;
      }
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  RuleSet run() {
    RuleSet set;
    while (peek().kind != Tok::end) set.rules.push_back(rule());
    return set;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(index_ + ahead, tokens_.size() - 1);
    return tokens_[i];
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    const Token& t = peek();
    std::string list;
    for (const auto& e : expected) list += (list.empty() ? "" : ", ") + e;
    throw SyntaxError(ErrorCode::syntax_error, t.line, t.column, expected,
                      "syntax error at line " + std::to_string(t.line) + ", column " +
                          std::to_string(t.column) + ": expected " + list + " but found " +
                          describe(t));
  }

  Token expect(Tok kind, const char* what) {
    if (peek().kind != kind) fail({what});
    return tokens_[index_++];
  }

  void expect_atom(std::string_view name) {
    if (peek().kind != Tok::atom || peek().text != name) fail({"'" + std::string(name) + "'"});
    ++index_;
  }

  Rule rule() {
    Rule r;
    expect_atom("complex_event");
    expect(Tok::lparen, "'('");
    r.head.name = expect(Tok::atom, "atom").text;
    expect(Tok::comma, "','");
    r.head.start_var = expect(Tok::var, "variable").text;
    expect(Tok::comma, "','");
    r.head.end_var = expect(Tok::var, "variable").text;
    expect(Tok::rparen, "')'");
    expect(Tok::neck, "':-'");
    r.body.push_back(item());
    while (true) {
      if (peek().kind == Tok::comma) {
        ++index_;
        r.body.push_back(item());
      } else if (peek().kind == Tok::period) {
        ++index_;
        return r;
      } else {
        fail({"','", "'.'"});
      }
    }
  }

  BodyItem item() {
    if (peek().kind == Tok::atom && peek().text == "simple_event") {
      ++index_;
      EventAtom atom;
      expect(Tok::lparen, "'('");
      atom.label = expect(Tok::atom, "atom").text;
      expect(Tok::comma, "','");
      atom.time_var = expect(Tok::var, "variable").text;
      expect(Tok::comma, "','");
      atom.loc_var = expect(Tok::var, "variable").text;
      expect(Tok::rparen, "')'");
      return atom;
    }
    Comparison cmp;
    cmp.lhs = expr();
    if (peek().kind == Tok::ge) {
      cmp.op = CmpOp::ge;
    } else if (peek().kind == Tok::le) {
      cmp.op = CmpOp::le;
    } else {
      fail({"'>='", "'=<'", "'-'"});
    }
    ++index_;
    cmp.rhs = expr();
    return cmp;
  }

  Expr expr() {
    Expr e;
    e.lhs = term();
    if (peek().kind == Tok::minus) {
      ++index_;
      e.minus = term();
    }
    return e;
  }

  Term term() {
    const Token& t = peek();
    if (t.kind == Tok::var) {
      ++index_;
      return Var{t.text};
    }
    if (t.kind == Tok::number) {
      ++index_;
      return Number{to_double(t.text)};
    }
    if (t.kind == Tok::minus && peek(1).kind == Tok::number) {
      std::string digits = peek(1).text;
      index_ += 2;
      return Number{-to_double(digits)};
    }
    if (t.kind == Tok::atom && t.text == "dist") {
      ++index_;
      Dist d;
      expect(Tok::lparen, "'('");
      d.a = expect(Tok::var, "variable").text;
      expect(Tok::comma, "','");
      d.b = expect(Tok::var, "variable").text;
      expect(Tok::rparen, "')'");
      return d;
    }
    fail({"'simple_event'", "'dist'", "variable", "number"});
  }

  static double to_double(const std::string& text) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    (void)ptr;
    if (ec != std::errc()) value = std::strtod(text.c_str(), nullptr);
    return value;
  }

  std::vector<Token> tokens_;
  std::size_t index_ = 0;
};

}  // namespace

std::string render(const Rule& rule) {
  std::string out = "complex_event(" + rule.head.name + ", " + rule.head.start_var + ", " +
                    rule.head.end_var + ") :- ";
  for (std::size_t i = 0; i < rule.body.size(); ++i) {
    if (i != 0) out += ", ";
    out += render_item(rule.body[i]);
  }
  out += ".";
  return out;
}

std::string render(const RuleSet& rules) {
  std::string out;
  for (std::size_t i = 0; i < rules.rules.size(); ++i) {
    if (i != 0) out += "\n";
    out += render(rules.rules[i]);
  }
  return out;
}

RuleSet parse(std::string_view text) { return Parser(Lexer(text).run()).run(); }

}  // namespace hakf::fragment
