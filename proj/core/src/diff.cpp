#include <mutex>
#include <unordered_map>

#include "confcheck/expr.hpp"

namespace confcheck {

namespace {

struct KeyHash {
  std::size_t operator()(const std::pair<const Node*, int>& k) const noexcept {
    return std::hash<const void*>{}(k.first) * 31 + static_cast<std::size_t>(k.second);
  }
};

struct DiffCache {
  std::mutex mutex;
  std::unordered_map<std::pair<const Node*, int>, const Node*, KeyHash> memo;
};

DiffCache& cache() {
  static DiffCache* c = new DiffCache();
  return *c;
}

Expr differentiate(const Expr& e, const Expr& x) {
  if (!e.dependsOn(x)) return Expr(0L);
  const std::pair<const Node*, int> key{e.node(), x.symbol().id};
  DiffCache& c = cache();
  {
    std::lock_guard lock(c.mutex);
    if (auto it = c.memo.find(key); it != c.memo.end()) return Expr(it->second);
  }

  Expr out;
  switch (e.kind()) {
    case Kind::Number: out = Expr(0L); break;
    case Kind::Symbol: out = e == x ? Expr(1L) : Expr(0L); break;
    case Kind::Add: {
      std::vector<Expr> terms;
      terms.reserve(e.arity());
      for (std::size_t i = 0; i < e.arity(); ++i) terms.push_back(differentiate(e.child(i), x));
      out = add(std::move(terms));
      break;
    }
    case Kind::Mul: {
      std::vector<Expr> terms;
      for (std::size_t i = 0; i < e.arity(); ++i) {
        Expr d = differentiate(e.child(i), x);
        if (d.isZero()) continue;
        std::vector<Expr> factors;
        factors.reserve(e.arity());
        for (std::size_t j = 0; j < e.arity(); ++j) factors.push_back(j == i ? d : e.child(j));
        terms.push_back(mul(std::move(factors)));
      }
      out = add(std::move(terms));
      break;
    }
    case Kind::Pow: {
      const Expr base = e.child(0);
      const Expr exponent = e.child(1);
      std::vector<Expr> terms;
      if (base.dependsOn(x)) {
        // e * b^(e-1) * b'
        terms.push_back(mul({exponent, pow(base, exponent - Expr(1L)), differentiate(base, x)}));
      }
      if (exponent.dependsOn(x)) {
        // b^e * log(b) * e'
        terms.push_back(mul({e, log(base), differentiate(exponent, x)}));
      }
      out = add(std::move(terms));
      break;
    }
    case Kind::Func: {
      const Expr a = e.child(0);
      const Expr da = differentiate(a, x);
      switch (e.func()) {
        case Func::Exp: out = mul({e, da}); break;
        case Func::Log: out = mul({da, pow(a, Expr(-1L))}); break;
        case Func::Sin: out = mul({cos(a), da}); break;
        case Func::Cos: out = mul({Expr(-1L), sin(a), da}); break;
      }
      break;
    }
  }

  std::lock_guard lock(c.mutex);
  c.memo.emplace(key, out.node());
  return out;
}

}  // namespace

Expr diff(const Expr& e, const Expr& coordinate) {
  if (coordinate.kind() != Kind::Symbol || coordinate.symbol().kind != SymbolKind::Coordinate) {
    throw std::invalid_argument("diff: differentiation variable must be a coordinate symbol");
  }
  return differentiate(e, coordinate);
}

}  // namespace confcheck
