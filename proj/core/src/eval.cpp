#include <cmath>
#include <unordered_map>

#include "confcheck/expr.hpp"

namespace confcheck {

double ChartPoint::lookup(const SymbolInfo& s) const {
  const auto& table = s.kind == SymbolKind::Coordinate ? coordinates : parameters;
  auto it = table.find(s.name);
  if (it == table.end()) throw DomainError("unbound symbol '" + s.name + "'");
  return it->second;
}

namespace {

constexpr double kTinyDivisor = 1e-300;

double powChecked(double base, double exponent) {
  const bool integral = std::floor(exponent) == exponent;
  if (!integral && base < 0) throw DomainError("fractional power of a negative value");
  if (exponent < 0 && std::abs(base) < kTinyDivisor) throw DomainError("division by a vanishing value");
  if (exponent == -1) return 1.0 / base;
  if (exponent == 2) return base * base;
  if (exponent == 0.5) return std::sqrt(base);
  return std::pow(base, exponent);
}

}  // namespace

Tape::Tape(std::span<const Expr> roots) {
  std::unordered_map<const Node*, std::uint32_t> slot;
  // Iterative post-order traversal.
  std::vector<std::pair<const Node*, std::size_t>> stack;
  for (const Expr& root : roots) {
    if (slot.count(root.node()) == 0) stack.emplace_back(root.node(), 0);
    while (!stack.empty()) {
      auto& [n, next] = stack.back();
      if (next < n->children.size()) {
        const Node* c = n->children[next++];
        if (slot.count(c) == 0) stack.emplace_back(c, 0);
        continue;
      }
      if (slot.count(n) == 0) {
        Instr in{n, static_cast<std::uint32_t>(args_.size()),
                 static_cast<std::uint32_t>(n->children.size())};
        for (const Node* c : n->children) args_.push_back(slot.at(c));
        slot.emplace(n, static_cast<std::uint32_t>(code_.size()));
        code_.push_back(in);
      }
      stack.pop_back();
    }
    outputs_.push_back(slot.at(root.node()));
  }
}

void Tape::evaluate(const ChartPoint& p, std::vector<double>& out) const {
  std::vector<double> v(code_.size());
  for (std::size_t i = 0; i < code_.size(); ++i) {
    const Instr& in = code_[i];
    const Node* n = in.node;
    const std::uint32_t* a = args_.data() + in.first;
    double r = 0;
    switch (n->kind) {
      case Kind::Number: r = std::get<Rational>(n->payload).get_d(); break;
      case Kind::Symbol: r = p.lookup(std::get<SymbolInfo>(n->payload)); break;
      case Kind::Add:
        for (std::uint32_t k = 0; k < in.count; ++k) r += v[a[k]];
        break;
      case Kind::Mul:
        r = 1;
        for (std::uint32_t k = 0; k < in.count; ++k) r *= v[a[k]];
        break;
      case Kind::Pow: r = powChecked(v[a[0]], v[a[1]]); break;
      case Kind::Func: {
        const double x = v[a[0]];
        switch (n->func) {
          case Func::Exp: r = std::exp(x); break;
          case Func::Log:
            if (!(x > 0)) throw DomainError("logarithm of a non-positive value");
            r = std::log(x);
            break;
          case Func::Sin: r = std::sin(x); break;
          case Func::Cos: r = std::cos(x); break;
        }
        break;
      }
    }
    if (!std::isfinite(r)) throw DomainError("non-finite value during evaluation");
    v[i] = r;
  }
  out.resize(outputs_.size());
  for (std::size_t k = 0; k < outputs_.size(); ++k) out[k] = v[outputs_[k]];
}

std::vector<double> Tape::evaluate(const ChartPoint& p) const {
  std::vector<double> out;
  evaluate(p, out);
  return out;
}

double evalAt(const Expr& e, const ChartPoint& p) {
  const Expr roots[] = {e};
  return Tape(roots).evaluate(p).front();
}

}  // namespace confcheck
