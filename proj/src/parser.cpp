// Recursive-descent parser for the formula language.
//
//   formula     := disjunction ('->' formula)?
//   disjunction := until ('|' until)*
//   until       := conjunction ('until' interval conjunction)?
//   conjunction := unary ('&' unary)*
//   unary       := '!' unary | 'alw' interval unary | 'ev' interval unary | atom
//   atom        := 'true' | predicate | '(' formula ')'
//   predicate   := sum ('<=' | '>=') number
//   sum         := product (('+' | '-') product)*
//   product     := sign ('*' sign)*          one factor must be a literal
//   sign        := '-' sign | primary        '-' literal folds into the literal
//   primary     := number | channel | 'norm' '(' sum (',' sum)* ')'
//                | 'clamp' '(' sum ',' number ',' number ')' | '(' sum ')'
//
// `#` starts a comment that runs to the end of the line.

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include "stlad/error.hpp"
#include "stlad/stl.hpp"

namespace stlad {
namespace {

enum class Tok {
  Ident, Number, LParen, RParen, LBracket, RBracket, Comma,
  Plus, Minus, Star, Le, Ge, Amp, Pipe, Bang, Arrow, End
};

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
  std::size_t line = 1;
  std::size_t column = 1;
};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t line = 1, col = 1, i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    Token t{Tok::End, {}, 0.0, line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' ||
                                src[j] == '.'))
        ++j;
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(i, j - i));
      out.push_back(t);
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0.0;
      auto res = std::from_chars(src.data() + i, src.data() + src.size(), v);
      if (res.ec != std::errc() || res.ptr == src.data() + i)
        throw ParseError("malformed number", line, col);
      std::size_t n = static_cast<std::size_t>(res.ptr - (src.data() + i));
      t.kind = Tok::Number;
      t.number = v;
      t.text = std::string(src.substr(i, n));
      out.push_back(t);
      advance(n);
      continue;
    }
    auto two = src.substr(i, 2);
    if (two == "<=") t.kind = Tok::Le;
    else if (two == ">=") t.kind = Tok::Ge;
    else if (two == "->") t.kind = Tok::Arrow;
    if (t.kind != Tok::End) {
      t.text = std::string(two);
      out.push_back(t);
      advance(2);
      continue;
    }
    switch (c) {
      case '(': t.kind = Tok::LParen; break;
      case ')': t.kind = Tok::RParen; break;
      case '[': t.kind = Tok::LBracket; break;
      case ']': t.kind = Tok::RBracket; break;
      case ',': t.kind = Tok::Comma; break;
      case '+': t.kind = Tok::Plus; break;
      case '-': t.kind = Tok::Minus; break;
      case '*': t.kind = Tok::Star; break;
      case '&': t.kind = Tok::Amp; break;
      case '|': t.kind = Tok::Pipe; break;
      case '!': t.kind = Tok::Bang; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", line, col);
    }
    t.text = std::string(1, c);
    out.push_back(t);
    advance(1);
  }
  out.push_back(Token{Tok::End, "end of input", 0.0, line, col});
  return out;
}

bool is_keyword(const std::string& s) {
  return s == "true" || s == "alw" || s == "ev" || s == "until" || s == "norm" || s == "clamp";
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Formula parse_all() {
    Formula f = formula();
    if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "' after formula");
    return f;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }
  bool at_ident(const char* word) const { return peek().kind == Tok::Ident && peek().text == word; }

  [[noreturn]] void fail(const std::string& msg) const { fail_at(peek(), msg); }
  [[noreturn]] static void fail_at(const Token& t, const std::string& msg) {
    throw ParseError(msg, t.line, t.column);
  }

  const Token& expect(Tok k, const char* what) {
    if (peek().kind != k) fail(std::string("expected ") + what + ", found '" + peek().text + "'");
    return next();
  }

  Formula formula() {
    Formula lhs = disjunction();
    if (peek().kind == Tok::Arrow) {
      next();
      Formula rhs = formula();
      return Formula::disjunction({Formula::negation(std::move(lhs)), std::move(rhs)});
    }
    return lhs;
  }

  Formula disjunction() {
    std::vector<Formula> parts{until_expr()};
    while (peek().kind == Tok::Pipe) {
      next();
      parts.push_back(until_expr());
    }
    return parts.size() == 1 ? parts.front() : Formula::disjunction(std::move(parts));
  }

  Formula until_expr() {
    Formula lhs = conjunction();
    if (at_ident("until")) {
      next();
      Interval i = interval();
      Formula rhs = conjunction();
      return Formula::until(i, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Formula conjunction() {
    std::vector<Formula> parts{unary()};
    while (peek().kind == Tok::Amp) {
      next();
      parts.push_back(unary());
    }
    return parts.size() == 1 ? parts.front() : Formula::conjunction(std::move(parts));
  }

  Formula unary() {
    if (peek().kind == Tok::Bang) {
      next();
      return Formula::negation(unary());
    }
    if (at_ident("alw")) {
      next();
      Interval i = interval();
      return Formula::always(i, unary());
    }
    if (at_ident("ev")) {
      next();
      Interval i = interval();
      return Formula::eventually(i, unary());
    }
    return atom();
  }

  Formula atom() {
    if (at_ident("true")) {
      next();
      return Formula::truth();
    }
    if (peek().kind == Tok::LParen) {
      // Either a parenthesised formula or a predicate whose signal starts
      // with '('. Try the predicate first and fall back.
      std::size_t save = pos_;
      try {
        return predicate();
      } catch (const ParseError&) {
        pos_ = save;
      }
      next();
      Formula f = formula();
      expect(Tok::RParen, "')'");
      return f;
    }
    return predicate();
  }

  Formula predicate() {
    SignalExpr h = sum();
    const Token& op = peek();
    if (op.kind != Tok::Le && op.kind != Tok::Ge)
      fail("expected '<=' or '>=' after signal expression, found '" + op.text + "'");
    bool ge = op.kind == Tok::Ge;
    next();
    const Token& at = peek();
    double u = signed_number();
    if (!(u >= -1.0 && u <= 1.0)) fail_at(at, "threshold " + at.text + " is outside [-1, 1]");
    // h >= u  <=>  -h <= -u
    if (ge) return Formula::predicate(SignalExpr::negate(std::move(h)), -u);
    return Formula::predicate(std::move(h), u);
  }

  Interval interval() {
    const Token& open = expect(Tok::LBracket, "'[' to open an interval");
    double lo = signed_number();
    expect(Tok::Comma, "',' inside interval");
    double hi = signed_number();
    expect(Tok::RBracket, "']' to close an interval");
    if (lo < 0.0 || hi < 0.0) fail_at(open, "interval bounds must be non-negative");
    if (hi < lo) fail_at(open, "interval upper bound is below its lower bound");
    return Interval(lo, hi);
  }

  double signed_number() {
    bool neg = false;
    if (peek().kind == Tok::Minus) {
      next();
      neg = true;
    }
    const Token& t = expect(Tok::Number, "a number");
    return neg ? -t.number : t.number;
  }

  SignalExpr sum() {
    SignalExpr lhs = product();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      bool plus = next().kind == Tok::Plus;
      SignalExpr rhs = product();
      lhs = plus ? SignalExpr::sum(std::move(lhs), std::move(rhs))
                 : SignalExpr::difference(std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  SignalExpr product() {
    SignalExpr lhs = sign();
    while (peek().kind == Tok::Star) {
      const Token& star = next();
      SignalExpr rhs = sign();
      if (lhs.kind() == SignalExpr::Kind::Const) {
        lhs = SignalExpr::scale(lhs.value(), std::move(rhs));
      } else if (rhs.kind() == SignalExpr::Kind::Const) {
        lhs = SignalExpr::scale(rhs.value(), std::move(lhs));
      } else {
        fail_at(star, "multiplication needs a numeric literal on one side");
      }
    }
    return lhs;
  }

  SignalExpr sign() {
    if (peek().kind == Tok::Minus) {
      next();
      if (peek().kind == Tok::Number) return SignalExpr::constant(-next().number);
      return SignalExpr::negate(sign());
    }
    return primary();
  }

  SignalExpr primary() {
    const Token& t = peek();
    if (t.kind == Tok::Number) {
      next();
      return SignalExpr::constant(t.number);
    }
    if (t.kind == Tok::LParen) {
      next();
      SignalExpr e = sum();
      expect(Tok::RParen, "')'");
      return e;
    }
    if (t.kind == Tok::Ident) {
      if (t.text == "norm") {
        next();
        expect(Tok::LParen, "'(' after norm");
        std::vector<SignalExpr> parts{sum()};
        while (peek().kind == Tok::Comma) {
          next();
          parts.push_back(sum());
        }
        expect(Tok::RParen, "')' to close norm");
        return SignalExpr::norm(std::move(parts));
      }
      if (t.text == "clamp") {
        next();
        expect(Tok::LParen, "'(' after clamp");
        SignalExpr e = sum();
        expect(Tok::Comma, "',' in clamp");
        const Token& at = peek();
        double lo = signed_number();
        expect(Tok::Comma, "',' in clamp");
        double hi = signed_number();
        expect(Tok::RParen, "')' to close clamp");
        if (!(hi > lo)) fail_at(at, "clamp needs lower < upper");
        return SignalExpr::clamp_scale(lo, hi, std::move(e));
      }
      if (is_keyword(t.text)) fail("keyword '" + t.text + "' cannot be used as a channel name");
      next();
      return SignalExpr::channel(t.text);
    }
    fail("expected a signal expression, found '" + t.text + "'");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

Formula parse_formula(std::string_view text) {
  return Parser(lex(text)).parse_all();
}

}  // namespace stlad
