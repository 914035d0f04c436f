#include <algorithm>
#include <cctype>

#include "confcheck/expr.hpp"

namespace confcheck {

namespace {

class Parser {
 public:
  Parser(std::string_view text, std::span<const std::string> coords, std::span<const std::string> params,
         bool allowIdentifiers)
      : text_(text), coords_(coords), params_(params), allowIdentifiers_(allowIdentifiers) {}

  Expr run() {
    skipSpace();
    if (pos_ >= text_.size()) fail("empty expression");
    Expr e = expression();
    skipSpace();
    if (pos_ < text_.size()) fail(std::string("unexpected '") + text_[pos_] + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError("syntax error: " + what, pos_); }

  void skipSpace() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skipSpace();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr expression() {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = lhs + term();
      } else if (accept('-')) {
        lhs = lhs - term();
      } else {
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = lhs * unary();
      } else if (accept('/')) {
        skipSpace();
        const std::size_t at = pos_;
        Expr rhs = unary();
        if (rhs.isZero()) throw ParseError("division by literal zero", at);
        lhs = lhs / rhs;
      } else {
        return lhs;
      }
    }
  }

  Expr unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (accept('^')) {
      skipSpace();
      const std::size_t at = pos_;
      Expr exponent = unary();  // right-associative, admits a leading sign
      try {
        return pow(base, exponent);
      } catch (const DomainError& err) {
        throw ParseError(err.what(), at);
      }
    }
    return base;
  }

  Expr primary() {
    skipSpace();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expression();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return numberLiteral();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail(std::string("unexpected '") + c + "'");
  }

  Expr numberLiteral() {
    const std::size_t start = pos_;
    std::string digits;
    std::size_t fractionDigits = 0;
    bool seenDot = false;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        digits.push_back(c);
        if (seenDot) ++fractionDigits;
      } else if (c == '.' && !seenDot) {
        seenDot = true;
      } else {
        break;
      }
      ++pos_;
    }
    if (digits.empty()) {
      pos_ = start;
      fail("malformed number");
    }
    long exponent = 0;
    if (pos_ + 1 < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      int sign = 1;
      if (text_[look] == '+' || text_[look] == '-') {
        sign = text_[look] == '-' ? -1 : 1;
        ++look;
      }
      if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
        long value = 0;
        while (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
          value = value * 10 + (text_[look] - '0');
          if (value > 400) {
            pos_ = look;
            fail("exponent out of range");
          }
          ++look;
        }
        exponent = sign * value;
        pos_ = look;
      }
    }
    Rational q(mpz_class(digits, 10));
    exponent -= static_cast<long>(fractionDigits);
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(exponent < 0 ? -exponent : exponent));
    if (exponent < 0) {
      q /= Rational(scale);
    } else {
      q *= Rational(scale);
    }
    q.canonicalize();
    return number(q);
  }

  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string name(text_.substr(start, pos_ - start));
    static constexpr std::pair<std::string_view, int> kFunctions[] = {
        {"exp", 0}, {"log", 1}, {"sin", 2}, {"cos", 3}, {"sqrt", 4}};
    for (const auto& [fname, code] : kFunctions) {
      if (name != fname) continue;
      if (!accept('(')) fail("expected '(' after " + name);
      Expr arg = expression();
      if (!accept(')')) fail("expected ')'");
      switch (code) {
        case 0: return exp(arg);
        case 1: return log(arg);
        case 2: return sin(arg);
        case 3: return cos(arg);
        default: return sqrt(arg);
      }
    }
    if (allowIdentifiers_) {
      if (std::find(coords_.begin(), coords_.end(), name) != coords_.end()) return coordinate(name);
      if (std::find(params_.begin(), params_.end(), name) != params_.end()) return parameter(name);
    }
    throw ParseError("undeclared identifier '" + name + "'", start);
  }

  std::string_view text_;
  std::span<const std::string> coords_;
  std::span<const std::string> params_;
  bool allowIdentifiers_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text, std::span<const std::string> coordinates,
           std::span<const std::string> parameters) {
  return Parser(text, coordinates, parameters, true).run();
}

Rational parseRational(std::string_view text) {
  Expr e = Parser(text, {}, {}, false).run();
  if (!e.isNumber()) throw ParseError("expected a rational constant", 0);
  return e.number();
}

}  // namespace confcheck
