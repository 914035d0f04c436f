#pragma once

// Closed-form scalar expressions over chart coordinates and named parameters.
//
// Expressions are hash-consed DAG nodes: every constructor returns the
// canonical representative, so structural equality is pointer equality and
// shared subtrees are stored once. Nodes live for the lifetime of the process.

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <gmpxx.h>

namespace confcheck {

using Rational = mpq_class;

enum class Kind : std::uint8_t { Number, Symbol, Add, Mul, Pow, Func };
enum class Func : std::uint8_t { Exp, Log, Sin, Cos };
enum class SymbolKind : std::uint8_t { Coordinate, Parameter };

struct SymbolInfo {
  std::string name;
  SymbolKind kind;
  int id;  // process-wide symbol index, used for dependency masks
};

struct Node {
  Kind kind = Kind::Number;
  Func func = Func::Exp;
  std::variant<std::monostate, Rational, SymbolInfo> payload;
  std::vector<const Node*> children;
  std::size_t hash = 0;
  // Bit i set when symbol with id i occurs in the subtree (ids >= 64 share bit 63).
  std::uint64_t symbols = 0;
  std::uint64_t size = 1;  // tree size estimate, saturating
};

/// Handle to an interned expression node. Cheap to copy.
class Expr {
 public:
  Expr();  // the number 0
  explicit Expr(const Node* node) : node_(node) {}
  Expr(long value);  // NOLINT(google-explicit-constructor)
  Expr(const Rational& value);  // NOLINT(google-explicit-constructor)

  const Node* node() const { return node_; }
  Kind kind() const { return node_->kind; }
  std::size_t arity() const { return node_->children.size(); }
  Expr child(std::size_t i) const { return Expr(node_->children[i]); }

  bool isNumber() const { return node_->kind == Kind::Number; }
  bool isZero() const;
  bool isOne() const;
  const Rational& number() const;
  const SymbolInfo& symbol() const;
  Func func() const { return node_->func; }

  bool dependsOn(const Expr& symbol) const;

  friend bool operator==(const Expr& a, const Expr& b) { return a.node_ == b.node_; }
  friend bool operator!=(const Expr& a, const Expr& b) { return a.node_ != b.node_; }

 private:
  const Node* node_;
};

/// Deterministic total order on canonical expressions (independent of addresses).
int compare(const Expr& a, const Expr& b);

struct ExprLess {
  bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

// Canonicalizing constructors.
Expr number(const Rational& value);
Expr symbol(std::string_view name, SymbolKind kind);
Expr coordinate(std::string_view name);
Expr parameter(std::string_view name);
Expr add(std::vector<Expr> terms);
Expr mul(std::vector<Expr> factors);
Expr pow(const Expr& base, const Expr& exponent);
Expr apply(Func f, const Expr& arg);
Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr sqrt(const Expr& a);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr& operator+=(Expr& a, const Expr& b);
Expr& operator-=(Expr& a, const Expr& b);
Expr& operator*=(Expr& a, const Expr& b);

/// Exact partial derivative with respect to a coordinate symbol (memoized).
Expr diff(const Expr& e, const Expr& coordinate);

/// Rebuilds the tree through the canonical constructors. Idempotent.
Expr simplify(const Expr& e);

/// Replaces symbols according to the map (keys must be symbol expressions).
Expr substitute(const Expr& e, const std::map<Expr, Expr, ExprLess>& replacements);

std::string toString(const Expr& e);

/// Number of distinct interned nodes reachable from e.
std::size_t dagSize(const Expr& e);

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Parses the expression grammar. Identifiers must be declared coordinates,
/// declared parameters or one of the function names exp, log, sin, cos, sqrt.
Expr parse(std::string_view text, std::span<const std::string> coordinates,
           std::span<const std::string> parameters);

/// Parses a purely numeric literal expression (no identifiers) exactly.
Rational parseRational(std::string_view text);

// ---------------------------------------------------------------------------
// Numeric evaluation

class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChartPoint {
  std::map<std::string, double> coordinates;
  std::map<std::string, double> parameters;

  double lookup(const SymbolInfo& s) const;
};

/// Double-precision value of e at p. Throws DomainError outside the real domain.
double evalAt(const Expr& e, const ChartPoint& p);

/// A set of expressions flattened to a straight-line program so that shared
/// subexpressions are evaluated once per point.
class Tape {
 public:
  Tape() = default;
  explicit Tape(std::span<const Expr> roots);

  std::size_t outputs() const { return outputs_.size(); }
  std::size_t instructions() const { return code_.size(); }

  /// Evaluates every root at p into out (resized to outputs()).
  void evaluate(const ChartPoint& p, std::vector<double>& out) const;
  std::vector<double> evaluate(const ChartPoint& p) const;

 private:
  struct Instr {
    const Node* node;
    std::uint32_t first;  // into args_
    std::uint32_t count;
  };
  std::vector<Instr> code_;
  std::vector<std::uint32_t> args_;
  std::vector<std::uint32_t> outputs_;
};

}  // namespace confcheck

template <>
struct std::hash<confcheck::Expr> {
  std::size_t operator()(const confcheck::Expr& e) const noexcept {
    return std::hash<const void*>{}(e.node());
  }
};
