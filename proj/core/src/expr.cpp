#include "confcheck/expr.hpp"

#include <algorithm>
#include <deque>
#include <mutex>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace confcheck {

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

std::size_t hashMpz(const mpz_class& z) {
  std::size_t h = static_cast<std::size_t>(mpz_sgn(z.get_mpz_t()) + 7);
  const std::size_t limbs = mpz_size(z.get_mpz_t());
  for (std::size_t i = 0; i < limbs; ++i) h = mix(h, mpz_getlimbn(z.get_mpz_t(), i));
  return h;
}

std::size_t hashRational(const Rational& q) {
  return mix(hashMpz(q.get_num()), hashMpz(q.get_den()));
}

bool payloadEqual(const Node& a, const Node& b) {
  if (a.payload.index() != b.payload.index()) return false;
  if (const auto* q = std::get_if<Rational>(&a.payload)) return *q == std::get<Rational>(b.payload);
  if (const auto* s = std::get_if<SymbolInfo>(&a.payload)) {
    const auto& t = std::get<SymbolInfo>(b.payload);
    return s->name == t.name && s->kind == t.kind;
  }
  return true;
}

struct NodeHash {
  std::size_t operator()(const Node* n) const { return n->hash; }
};
struct NodeEq {
  bool operator()(const Node* a, const Node* b) const {
    return a->kind == b->kind && a->func == b->func && a->children == b->children &&
           payloadEqual(*a, *b);
  }
};

struct Pool {
  std::mutex mutex;
  std::deque<Node> storage;
  std::unordered_set<const Node*, NodeHash, NodeEq> table;
  std::unordered_map<std::string, int> symbolIds;
};

Pool& pool() {
  static Pool* p = new Pool();  // intentionally leaked: nodes outlive static destructors
  return *p;
}

const Node* intern(Node candidate) {
  std::size_t h = mix(static_cast<std::size_t>(candidate.kind) * 31 + 1,
                      static_cast<std::size_t>(candidate.func));
  if (const auto* q = std::get_if<Rational>(&candidate.payload)) h = mix(h, hashRational(*q));
  if (const auto* s = std::get_if<SymbolInfo>(&candidate.payload)) {
    h = mix(h, std::hash<std::string>{}(s->name));
    h = mix(h, static_cast<std::size_t>(s->kind));
  }
  std::uint64_t size = 1;
  for (const Node* c : candidate.children) {
    h = mix(h, c->hash);
    candidate.symbols |= c->symbols;
    size = std::min<std::uint64_t>(size + c->size, std::uint64_t{1} << 62);
  }
  candidate.hash = h;
  candidate.size = size;

  Pool& p = pool();
  std::lock_guard lock(p.mutex);
  if (auto it = p.table.find(&candidate); it != p.table.end()) return *it;
  p.storage.push_back(std::move(candidate));
  const Node* stored = &p.storage.back();
  p.table.insert(stored);
  return stored;
}

const Node* makeNumber(const Rational& q) {
  Node n;
  n.kind = Kind::Number;
  Rational c = q;
  c.canonicalize();
  n.payload = std::move(c);
  return intern(std::move(n));
}

const Node* makeCompound(Kind kind, std::vector<const Node*> children, Func f = Func::Exp) {
  Node n;
  n.kind = kind;
  n.func = f;
  n.children = std::move(children);
  return intern(std::move(n));
}

int kindRank(Kind k) {
  switch (k) {
    case Kind::Number: return 0;
    case Kind::Symbol: return 1;
    case Kind::Func: return 2;
    case Kind::Pow: return 3;
    case Kind::Mul: return 4;
    case Kind::Add: return 5;
  }
  return 6;
}

const Rational& rationalOf(const Node* n) { return std::get<Rational>(n->payload); }

bool isIntegerNumber(const Node* n) {
  return n->kind == Kind::Number && rationalOf(n).get_den() == 1;
}

// Multiplicative decomposition of a factor into (base, exponent).
std::pair<Expr, Expr> splitPower(const Expr& f) {
  if (f.kind() == Kind::Pow) return {f.child(0), f.child(1)};
  return {f, Expr(1L)};
}

// Additive decomposition of a term into (coefficient, rest).
std::pair<Rational, Expr> splitCoefficient(const Expr& t) {
  if (t.kind() == Kind::Mul && t.child(0).isNumber()) {
    const Node* n = t.node();
    if (n->children.size() == 2) return {t.child(0).number(), t.child(1)};
    std::vector<const Node*> rest(n->children.begin() + 1, n->children.end());
    return {t.child(0).number(), Expr(makeCompound(Kind::Mul, std::move(rest)))};
  }
  return {Rational(1), t};
}

Expr scaleTerm(const Rational& c, const Expr& rest) {
  if (c == 1) return rest;
  std::vector<const Node*> children{makeNumber(c)};
  if (rest.kind() == Kind::Mul) {
    children.insert(children.end(), rest.node()->children.begin(), rest.node()->children.end());
  } else {
    children.push_back(rest.node());
  }
  return Expr(makeCompound(Kind::Mul, std::move(children)));
}

// Exact integer power of a rational; the exponent is bounded to keep numbers small.
bool exactPower(const Rational& base, const Rational& exponent, Rational& out) {
  if (exponent.get_den() != 1 || !exponent.get_num().fits_slong_p()) return false;
  long e = exponent.get_num().get_si();
  if (e > 256 || e < -256) return false;
  if (base == 0) {
    if (e < 0) throw DomainError("division by zero in constant power");
    out = e == 0 ? Rational(1) : Rational(0);
    return true;
  }
  mpz_class num, den;
  const unsigned long ae = static_cast<unsigned long>(e < 0 ? -e : e);
  mpz_pow_ui(num.get_mpz_t(), base.get_num().get_mpz_t(), ae);
  mpz_pow_ui(den.get_mpz_t(), base.get_den().get_mpz_t(), ae);
  out = e < 0 ? Rational(den, num) : Rational(num, den);
  out.canonicalize();
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------

Expr::Expr() : node_(makeNumber(Rational(0))) {}
Expr::Expr(long value) : node_(makeNumber(Rational(value))) {}
Expr::Expr(const Rational& value) : node_(makeNumber(value)) {}

bool Expr::isZero() const { return isNumber() && rationalOf(node_) == 0; }
bool Expr::isOne() const { return isNumber() && rationalOf(node_) == 1; }
const Rational& Expr::number() const { return rationalOf(node_); }
const SymbolInfo& Expr::symbol() const { return std::get<SymbolInfo>(node_->payload); }

bool Expr::dependsOn(const Expr& s) const {
  const int id = s.symbol().id;
  const std::uint64_t bit = std::uint64_t{1} << std::min(id, 63);
  if ((node_->symbols & bit) == 0) return false;
  if (id < 63) return true;
  // Shared overflow bit: fall back to a traversal.
  std::vector<const Node*> stack{node_};
  std::unordered_set<const Node*> seen;
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    if (n->kind == Kind::Symbol && Expr(n) == s) return true;
    for (const Node* c : n->children) stack.push_back(c);
  }
  return false;
}

int compare(const Expr& a, const Expr& b) {
  if (a == b) return 0;
  const Node* x = a.node();
  const Node* y = b.node();
  if (x->kind != y->kind) return kindRank(x->kind) < kindRank(y->kind) ? -1 : 1;
  switch (x->kind) {
    case Kind::Number: return cmp(rationalOf(x), rationalOf(y)) < 0 ? -1 : 1;
    case Kind::Symbol: {
      const auto& s = a.symbol();
      const auto& t = b.symbol();
      if (s.name != t.name) return s.name < t.name ? -1 : 1;
      return s.kind < t.kind ? -1 : 1;
    }
    default: break;
  }
  if (x->func != y->func) return x->func < y->func ? -1 : 1;
  if (x->hash != y->hash) return x->hash < y->hash ? -1 : 1;
  const std::size_t n = std::min(x->children.size(), y->children.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (int c = compare(Expr(x->children[i]), Expr(y->children[i])); c != 0) return c;
  }
  return x->children.size() < y->children.size() ? -1 : 1;
}

Expr number(const Rational& value) { return Expr(makeNumber(value)); }

Expr symbol(std::string_view name, SymbolKind kind) {
  Pool& p = pool();
  int id;
  {
    std::lock_guard lock(p.mutex);
    auto [it, inserted] =
        p.symbolIds.try_emplace(std::string(name), static_cast<int>(p.symbolIds.size()));
    id = it->second;
  }
  Node n;
  n.kind = Kind::Symbol;
  n.payload = SymbolInfo{std::string(name), kind, id};
  n.symbols = std::uint64_t{1} << std::min(id, 63);
  return Expr(intern(std::move(n)));
}

Expr coordinate(std::string_view name) { return symbol(name, SymbolKind::Coordinate); }
Expr parameter(std::string_view name) { return symbol(name, SymbolKind::Parameter); }

Expr add(std::vector<Expr> terms) {
  Rational constant(0);
  std::vector<std::pair<Expr, Rational>> collected;
  std::unordered_map<const Node*, std::size_t> index;

  std::vector<Expr> flat;
  flat.reserve(terms.size());
  for (const Expr& t : terms) {
    if (t.kind() == Kind::Add) {
      for (const Node* c : t.node()->children) flat.emplace_back(c);
    } else {
      flat.push_back(t);
    }
  }
  for (const Expr& t : flat) {
    if (t.isNumber()) {
      constant += t.number();
      continue;
    }
    auto [coef, rest] = splitCoefficient(t);
    auto [it, inserted] = index.try_emplace(rest.node(), collected.size());
    if (inserted) {
      collected.emplace_back(rest, coef);
    } else {
      collected[it->second].second += coef;
    }
  }
  std::erase_if(collected, [](const auto& pr) { return pr.second == 0; });
  std::sort(collected.begin(), collected.end(),
            [](const auto& l, const auto& r) { return compare(l.first, r.first) < 0; });

  std::vector<const Node*> children;
  children.reserve(collected.size() + 1);
  if (constant != 0) children.push_back(makeNumber(constant));
  for (const auto& [rest, coef] : collected) children.push_back(scaleTerm(coef, rest).node());
  if (children.empty()) return Expr(0L);
  if (children.size() == 1) return Expr(children.front());
  return Expr(makeCompound(Kind::Add, std::move(children)));
}

Expr mul(std::vector<Expr> factors) {
  Rational coef(1);
  std::vector<std::pair<Expr, std::vector<Expr>>> bases;
  std::unordered_map<const Node*, std::size_t> index;

  std::vector<Expr> flat;
  flat.reserve(factors.size());
  for (const Expr& f : factors) {
    if (f.kind() == Kind::Mul) {
      for (const Node* c : f.node()->children) flat.emplace_back(c);
    } else {
      flat.push_back(f);
    }
  }
  for (const Expr& f : flat) {
    if (f.isNumber()) {
      if (f.isZero()) return Expr(0L);
      coef *= f.number();
      continue;
    }
    auto [base, exponent] = splitPower(f);
    auto [it, inserted] = index.try_emplace(base.node(), bases.size());
    if (inserted) {
      bases.emplace_back(base, std::vector<Expr>{exponent});
    } else {
      bases[it->second].second.push_back(exponent);
    }
  }

  std::vector<Expr> out;
  out.reserve(bases.size());
  for (auto& [base, exponents] : bases) {
    Expr e = exponents.size() == 1 ? exponents.front() : add(std::move(exponents));
    Expr p = pow(base, e);
    if (p.isNumber()) {
      if (p.isZero()) return Expr(0L);
      coef *= p.number();
    } else if (p.kind() == Kind::Mul) {
      for (const Node* c : p.node()->children) {
        if (Expr(c).isNumber()) {
          coef *= rationalOf(c);
        } else {
          out.emplace_back(c);
        }
      }
    } else {
      out.push_back(p);
    }
  }
  // Combining can expose repeated bases again (e.g. from distributed powers).
  bool repeated = false;
  {
    std::unordered_set<const Node*> seen;
    for (const Expr& f : out) repeated |= !seen.insert(splitPower(f).first.node()).second;
  }
  if (repeated) {
    out.insert(out.begin(), number(coef));
    return mul(std::move(out));
  }
  std::sort(out.begin(), out.end(), [](const Expr& l, const Expr& r) {
    auto [lb, le] = splitPower(l);
    auto [rb, re] = splitPower(r);
    if (int c = compare(lb, rb); c != 0) return c < 0;
    return compare(le, re) < 0;
  });

  if (coef == 0) return Expr(0L);
  if (out.empty()) return number(coef);
  if (out.size() == 1) {
    if (coef == 1) return out.front();
    if (out.front().kind() == Kind::Add) {
      std::vector<Expr> distributed;
      distributed.reserve(out.front().arity());
      for (const Node* t : out.front().node()->children) distributed.push_back(mul({number(coef), Expr(t)}));
      return add(std::move(distributed));
    }
  }
  std::vector<const Node*> children;
  children.reserve(out.size() + 1);
  if (coef != 1) children.push_back(makeNumber(coef));
  for (const Expr& f : out) children.push_back(f.node());
  return Expr(makeCompound(Kind::Mul, std::move(children)));
}

Expr pow(const Expr& base, const Expr& exponent) {
  if (exponent.isNumber()) {
    if (exponent.isZero()) return Expr(1L);
    if (exponent.isOne()) return base;
  }
  if (base.isNumber()) {
    if (base.isOne()) return Expr(1L);
    if (base.isZero()) {
      if (exponent.isNumber() && exponent.number() > 0) return Expr(0L);
      if (exponent.isNumber()) throw DomainError("zero raised to a non-positive power");
    }
    if (exponent.isNumber()) {
      Rational out;
      if (exactPower(base.number(), exponent.number(), out)) return number(out);
    }
  }
  if (isIntegerNumber(exponent.node())) {
    if (base.kind() == Kind::Pow) return pow(base.child(0), mul({base.child(1), exponent}));
    if (base.kind() == Kind::Mul) {
      std::vector<Expr> parts;
      parts.reserve(base.arity());
      for (const Node* f : base.node()->children) parts.push_back(pow(Expr(f), exponent));
      return mul(std::move(parts));
    }
  }
  return Expr(makeCompound(Kind::Pow, {base.node(), exponent.node()}));
}

Expr apply(Func f, const Expr& a) {
  switch (f) {
    case Func::Exp:
      if (a.isZero()) return Expr(1L);
      if (a.kind() == Kind::Func && a.func() == Func::Log) return a.child(0);
      break;
    case Func::Log:
      if (a.isOne()) return Expr(0L);
      if (a.kind() == Kind::Func && a.func() == Func::Exp) return a.child(0);
      break;
    case Func::Sin:
      if (a.isZero()) return Expr(0L);
      break;
    case Func::Cos:
      if (a.isZero()) return Expr(1L);
      break;
  }
  return Expr(makeCompound(Kind::Func, {a.node()}, f));
}

Expr exp(const Expr& a) { return apply(Func::Exp, a); }
Expr log(const Expr& a) { return apply(Func::Log, a); }
Expr sin(const Expr& a) { return apply(Func::Sin, a); }
Expr cos(const Expr& a) { return apply(Func::Cos, a); }
Expr sqrt(const Expr& a) { return pow(a, number(Rational(1, 2))); }

Expr operator+(const Expr& a, const Expr& b) { return add({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return add({a, mul({Expr(-1L), b})}); }
Expr operator*(const Expr& a, const Expr& b) { return mul({a, b}); }
Expr operator/(const Expr& a, const Expr& b) {
  if (b.isZero()) throw DomainError("division by zero");
  return mul({a, pow(b, Expr(-1L))});
}
Expr operator-(const Expr& a) { return mul({Expr(-1L), a}); }
Expr& operator+=(Expr& a, const Expr& b) { return a = a + b; }
Expr& operator-=(Expr& a, const Expr& b) { return a = a - b; }
Expr& operator*=(Expr& a, const Expr& b) { return a = a * b; }

namespace {

template <class F>
Expr rebuild(const Expr& e, std::unordered_map<const Node*, Expr>& memo, F&& leaf) {
  if (auto it = memo.find(e.node()); it != memo.end()) return it->second;
  Expr out;
  switch (e.kind()) {
    case Kind::Number: out = e; break;
    case Kind::Symbol: out = leaf(e); break;
    case Kind::Add:
    case Kind::Mul: {
      std::vector<Expr> parts;
      parts.reserve(e.arity());
      for (std::size_t i = 0; i < e.arity(); ++i) parts.push_back(rebuild(e.child(i), memo, leaf));
      out = e.kind() == Kind::Add ? add(std::move(parts)) : mul(std::move(parts));
      break;
    }
    case Kind::Pow: out = pow(rebuild(e.child(0), memo, leaf), rebuild(e.child(1), memo, leaf)); break;
    case Kind::Func: out = apply(e.func(), rebuild(e.child(0), memo, leaf)); break;
  }
  memo.emplace(e.node(), out);
  return out;
}

}  // namespace

Expr simplify(const Expr& e) {
  std::unordered_map<const Node*, Expr> memo;
  return rebuild(e, memo, [](const Expr& s) { return s; });
}

Expr substitute(const Expr& e, const std::map<Expr, Expr, ExprLess>& replacements) {
  std::unordered_map<const Node*, Expr> memo;
  return rebuild(e, memo, [&](const Expr& s) {
    auto it = replacements.find(s);
    return it == replacements.end() ? s : it->second;
  });
}

std::size_t dagSize(const Expr& e) {
  std::unordered_set<const Node*> seen;
  std::vector<const Node*> stack{e.node()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    for (const Node* c : n->children) stack.push_back(c);
  }
  return seen.size();
}

namespace {

int precedence(const Expr& e) {
  switch (e.kind()) {
    case Kind::Add: return 1;
    case Kind::Mul: return 2;
    case Kind::Pow: return 3;
    case Kind::Number: return e.number().get_den() == 1 && e.number() >= 0 ? 4 : 2;
    default: return 4;
  }
}

void print(std::ostream& os, const Expr& e);

void printWrapped(std::ostream& os, const Expr& e, int minPrecedence) {
  if (precedence(e) < minPrecedence) {
    os << '(';
    print(os, e);
    os << ')';
  } else {
    print(os, e);
  }
}

const char* funcName(Func f) {
  switch (f) {
    case Func::Exp: return "exp";
    case Func::Log: return "log";
    case Func::Sin: return "sin";
    case Func::Cos: return "cos";
  }
  return "?";
}

void print(std::ostream& os, const Expr& e) {
  switch (e.kind()) {
    case Kind::Number: os << e.number().get_str(); return;
    case Kind::Symbol: os << e.symbol().name; return;
    case Kind::Func:
      os << funcName(e.func()) << '(';
      print(os, e.child(0));
      os << ')';
      return;
    case Kind::Pow:
      printWrapped(os, e.child(0), 4);
      os << '^';
      printWrapped(os, e.child(1), 4);
      return;
    case Kind::Mul:
      for (std::size_t i = 0; i < e.arity(); ++i) {
        if (i == 0 && e.child(0).isNumber() && e.child(0).number() == -1) {
          os << '-';
          continue;
        }
        if (i > 0 && !(i == 1 && e.child(0).isNumber() && e.child(0).number() == -1)) os << '*';
        printWrapped(os, e.child(i), 3);
      }
      return;
    case Kind::Add:
      for (std::size_t i = 0; i < e.arity(); ++i) {
        std::ostringstream term;
        printWrapped(term, e.child(i), 2);
        std::string s = term.str();
        if (i > 0) {
          if (!s.empty() && s.front() == '-') {
            os << " - " << s.substr(1);
            continue;
          }
          os << " + ";
        }
        os << s;
      }
      return;
  }
}

}  // namespace

std::string toString(const Expr& e) {
  std::ostringstream os;
  print(os, e);
  return os.str();
}

}  // namespace confcheck
