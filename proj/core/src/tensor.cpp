#include "confcheck/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_map>

namespace confcheck {

std::vector<std::string> MetricSpec::parameterNames() const {
  std::vector<std::string> names;
  names.reserve(parameters.size());
  for (const auto& [name, value] : parameters) names.push_back(name);
  return names;
}

std::vector<Expr> MetricSpec::coordinateSymbols() const {
  std::vector<Expr> out;
  out.reserve(coordinates.size());
  for (const auto& c : coordinates) out.push_back(coordinate(c));
  return out;
}

ChartPoint MetricSpec::point(std::span<const double> coords) const {
  if (coords.size() != coordinates.size()) throw MetricError("point has wrong number of coordinates");
  ChartPoint p;
  for (std::size_t i = 0; i < coords.size(); ++i) p.coordinates[coordinates[i]] = coords[i];
  for (const auto& [name, value] : parameters) p.parameters[name] = value.get_d();
  return p;
}

void MetricSpec::validate() const {
  if (dimension < 3) throw MetricError("dimension must be at least 3");
  if (dimension > kMaxDim) throw MetricError("dimension exceeds supported maximum of " + std::to_string(kMaxDim));
  if (static_cast<int>(coordinates.size()) != dimension) {
    throw MetricError("expected " + std::to_string(dimension) + " coordinates, got " +
                      std::to_string(coordinates.size()));
  }
  for (std::size_t i = 0; i < coordinates.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (coordinates[i] == coordinates[j]) throw MetricError("duplicate coordinate '" + coordinates[i] + "'");
    }
    if (parameters.count(coordinates[i]) != 0) {
      throw MetricError("'" + coordinates[i] + "' declared as both coordinate and parameter");
    }
  }
  if (metric.dim() != dimension || metric.rank() != 2) throw MetricError("metric table has wrong shape");
  for (int a = 0; a < dimension; ++a) {
    for (int b = 0; b < a; ++b) {
      if (metric(a, b) != metric(b, a)) throw MetricError("metric is not symmetric");
    }
  }
  if (static_cast<int>(domain.size()) != dimension) throw MetricError("domain must give one interval per coordinate");
  for (std::size_t i = 0; i < domain.size(); ++i) {
    if (!(domain[i].lo <= domain[i].hi) || !std::isfinite(domain[i].lo) || !std::isfinite(domain[i].hi)) {
      throw MetricError("invalid domain interval for '" + coordinates[i] + "'");
    }
  }
}

MetricSpec makeMetric(std::vector<std::string> coordinates, std::map<std::string, Rational> parameters,
                      const std::map<std::pair<int, int>, Expr>& components, std::vector<Interval> domain) {
  MetricSpec s;
  s.dimension = static_cast<int>(coordinates.size());
  s.coordinates = std::move(coordinates);
  s.parameters = std::move(parameters);
  s.domain = std::move(domain);
  s.metric = TensorField(s.dimension, {Slot::Down, Slot::Down});
  for (const auto& [ij, e] : components) {
    auto [i, j] = ij;
    if (i < 0 || j < 0 || i >= s.dimension || j >= s.dimension) throw MetricError("metric index out of range");
    s.metric(i, j) = e;
    s.metric(j, i) = e;
  }
  s.validate();
  return s;
}

MetricSpec conformalRescale(const MetricSpec& spec, const Expr& factor) {
  MetricSpec out = spec;
  for (auto& e : out.metric.data()) e = factor * e;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

class MinorTable {
 public:
  explicit MinorTable(const TensorField& m) : m_(m), n_(m.dim()) {}

  // Determinant of the submatrix on the given row and column sets (equal popcount).
  Expr minor(std::uint32_t rows, std::uint32_t cols) {
    if (rows == 0) return Expr(1L);
    const std::uint64_t key = (static_cast<std::uint64_t>(rows) << 32) | cols;
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const int r = std::countr_zero(rows);
    std::vector<Expr> terms;
    int sign = 1;
    for (int c = 0; c < n_; ++c) {
      if ((cols & (1u << c)) == 0) continue;
      const Expr& entry = m_(r, c);
      if (!entry.isZero()) {
        Expr sub = minor(rows & ~(1u << r), cols & ~(1u << c));
        if (!sub.isZero()) terms.push_back(sign > 0 ? entry * sub : -(entry * sub));
      }
      sign = -sign;
    }
    Expr out = add(std::move(terms));
    memo_.emplace(key, out);
    return out;
  }

  std::uint32_t full() const { return (1u << n_) - 1; }

 private:
  const TensorField& m_;
  int n_;
  std::unordered_map<std::uint64_t, Expr> memo_;
};

// dg(d, a, b) = ∂_d g_ab
TensorField metricGradient(const TensorField& g, std::span<const Expr> coords) {
  return partialDerivative(g, coords);
}

}  // namespace

Expr determinant(const TensorField& m) {
  if (m.rank() != 2) throw std::invalid_argument("determinant of a non-matrix tensor");
  MinorTable t(m);
  return t.minor(t.full(), t.full());
}

namespace {

TensorField inverseOf(const TensorField& g, const Expr& det) {
  if (det.isZero()) throw MetricError("metric is structurally singular");
  const int n = g.dim();
  MinorTable t(g);
  const Expr invDet = pow(det, Expr(-1L));
  TensorField inv(n, {Slot::Up, Slot::Up});
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      // adj(g)_ij = (-1)^(i+j) * minor with row j and column i removed
      Expr cof = t.minor(t.full() & ~(1u << j), t.full() & ~(1u << i));
      if ((i + j) % 2 == 1) cof = -cof;
      Expr e = cof * invDet;
      inv(i, j) = e;
      inv(j, i) = e;
    }
  }
  return inv;
}

TensorField christoffelOf(const TensorField& g, const TensorField& ginv, std::span<const Expr> coords) {
  const int n = g.dim();
  const TensorField dg = metricGradient(g, coords);
  // Γ_dab = ½(∂_a g_db + ∂_b g_da − ∂_d g_ab)
  TensorField lower(n, {Slot::Down, Slot::Down, Slot::Down});
  for (int d = 0; d < n; ++d) {
    for (int a = 0; a < n; ++a) {
      for (int b = a; b < n; ++b) {
        Expr e = Rational(1, 2) * (dg(a, d, b) + dg(b, d, a) - dg(d, a, b));
        lower(d, a, b) = e;
        lower(d, b, a) = e;
      }
    }
  }
  TensorField gamma(n, {Slot::Up, Slot::Down, Slot::Down});
  for (int c = 0; c < n; ++c) {
    for (int a = 0; a < n; ++a) {
      for (int b = a; b < n; ++b) {
        std::vector<Expr> terms;
        for (int d = 0; d < n; ++d) {
          if (ginv(c, d).isZero() || lower(d, a, b).isZero()) continue;
          terms.push_back(ginv(c, d) * lower(d, a, b));
        }
        Expr e = add(std::move(terms));
        gamma(c, a, b) = e;
        gamma(c, b, a) = e;
      }
    }
  }
  return gamma;
}

TensorField riemannOf(const TensorField& gamma, std::span<const Expr> coords) {
  const int n = gamma.dim();
  const TensorField dgamma = partialDerivative(gamma, coords);  // (e, d, a, c) = ∂_e Γ^d_ac
  TensorField r(n, {Slot::Down, Slot::Down, Slot::Down, Slot::Up});
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (int c = 0; c < n; ++c) {
        for (int d = 0; d < n; ++d) {
          std::vector<Expr> terms{dgamma(b, d, a, c), -dgamma(a, d, b, c)};
          for (int e = 0; e < n; ++e) {
            if (!gamma(e, a, c).isZero() && !gamma(d, b, e).isZero()) terms.push_back(gamma(e, a, c) * gamma(d, b, e));
            if (!gamma(e, b, c).isZero() && !gamma(d, a, e).isZero()) {
              terms.push_back(-(gamma(e, b, c) * gamma(d, a, e)));
            }
          }
          Expr v = add(std::move(terms));
          r(a, b, c, d) = v;
          r(b, a, c, d) = -v;
        }
      }
    }
  }
  return r;
}

TensorField ricciOf(const TensorField& riem) {
  const int n = riem.dim();
  TensorField ric(n, {Slot::Down, Slot::Down});
  for (int a = 0; a < n; ++a) {
    for (int c = 0; c < n; ++c) {
      std::vector<Expr> terms;
      for (int b = 0; b < n; ++b) terms.push_back(riem(a, b, c, b));
      ric(a, c) = add(std::move(terms));
    }
  }
  return ric;
}

Expr scalarOf(const TensorField& ric, const TensorField& ginv) {
  const int n = ric.dim();
  std::vector<Expr> terms;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (!ginv(a, b).isZero() && !ric(a, b).isZero()) terms.push_back(ginv(a, b) * ric(a, b));
    }
  }
  return add(std::move(terms));
}

TensorField schoutenOf(const TensorField& g, const TensorField& ric, const Expr& scalar) {
  const int n = g.dim();
  const Rational k1(1, n - 2);
  const Rational k2(1, 2 * (n - 1) * (n - 2));
  TensorField l(n, {Slot::Down, Slot::Down});
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) l(a, b) = k1 * ric(a, b) - k2 * g(a, b) * scalar;
  }
  return l;
}

TensorField weylOf(const TensorField& g, const TensorField& ginv, const TensorField& riem, const TensorField& l) {
  const int n = g.dim();
  // L_b^d = g^de L_be
  TensorField lmixed = raiseSlot(l, 1, ginv);
  TensorField c(n, {Slot::Down, Slot::Down, Slot::Down, Slot::Up});
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (int cc = 0; cc < n; ++cc) {
        for (int d = 0; d < n; ++d) {
          std::vector<Expr> terms{riem(a, b, cc, d), -(lmixed(b, d) * g(a, cc)), lmixed(a, d) * g(b, cc)};
          if (b == d) terms.push_back(-l(a, cc));
          if (a == d) terms.push_back(l(b, cc));
          Expr v = add(std::move(terms));
          c(a, b, cc, d) = v;
          c(b, a, cc, d) = -v;
        }
      }
    }
  }
  return c;
}

TensorField curlOf(const TensorField& l, const TensorField& gamma, std::span<const Expr> coords) {
  // ∇_[b L_e]a = ½(∂_b L_ea − ∂_e L_ba − Γ^f_ba L_ef + Γ^f_ea L_bf); the Γ^f_be terms cancel.
  const int n = l.dim();
  const TensorField dl = partialDerivative(l, coords);
  TensorField out(n, {Slot::Down, Slot::Down, Slot::Down});
  for (int b = 0; b < n; ++b) {
    for (int e = b + 1; e < n; ++e) {
      for (int a = 0; a < n; ++a) {
        std::vector<Expr> terms{dl(b, e, a), -dl(e, b, a)};
        for (int f = 0; f < n; ++f) {
          if (!gamma(f, b, a).isZero() && !l(e, f).isZero()) terms.push_back(-(gamma(f, b, a) * l(e, f)));
          if (!gamma(f, e, a).isZero() && !l(b, f).isZero()) terms.push_back(gamma(f, e, a) * l(b, f));
        }
        Expr v = Rational(1, 2) * add(std::move(terms));
        out(b, e, a) = v;
        out(e, b, a) = -v;
      }
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

Geometry::Geometry(MetricSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  coords_ = spec_.coordinateSymbols();
}

const Expr& Geometry::determinant() const {
  if (!det_) det_ = confcheck::determinant(spec_.metric);
  return *det_;
}

const TensorField& Geometry::inverse() const {
  if (!inverse_) inverse_ = inverseOf(spec_.metric, determinant());
  return *inverse_;
}

const TensorField& Geometry::christoffel() const {
  if (!christoffel_) christoffel_ = christoffelOf(spec_.metric, inverse(), coords_);
  return *christoffel_;
}

const TensorField& Geometry::riemann() const {
  if (!riemann_) riemann_ = riemannOf(christoffel(), coords_);
  return *riemann_;
}

const TensorField& Geometry::ricci() const {
  if (!ricci_) ricci_ = ricciOf(riemann());
  return *ricci_;
}

const Expr& Geometry::ricciScalar() const {
  if (!scalar_) scalar_ = scalarOf(ricci(), inverse());
  return *scalar_;
}

const TensorField& Geometry::schouten() const {
  if (!schouten_) schouten_ = schoutenOf(spec_.metric, ricci(), ricciScalar());
  return *schouten_;
}

const TensorField& Geometry::weyl() const {
  if (!weyl_) weyl_ = weylOf(spec_.metric, inverse(), riemann(), schouten());
  return *weyl_;
}

const TensorField& Geometry::schoutenCurl() const {
  if (!curl_) curl_ = curlOf(schouten(), christoffel(), coords_);
  return *curl_;
}

TensorField inverseMetric(const MetricSpec& g) { return Geometry(g).inverse(); }
TensorField christoffel(const MetricSpec& g) { return Geometry(g).christoffel(); }
TensorField riemann(const MetricSpec& g) { return Geometry(g).riemann(); }
TensorField ricci(const MetricSpec& g) { return Geometry(g).ricci(); }
Expr ricciScalar(const MetricSpec& g) { return Geometry(g).ricciScalar(); }
TensorField schouten(const MetricSpec& g) { return Geometry(g).schouten(); }
TensorField weyl(const MetricSpec& g) { return Geometry(g).weyl(); }

// ---------------------------------------------------------------------------

TensorField partialDerivative(const TensorField& t, std::span<const Expr> coords) {
  const int n = t.dim();
  std::vector<Slot> slots{Slot::Down};
  slots.insert(slots.end(), t.slots().begin(), t.slots().end());
  TensorField out(n, std::move(slots));
  const std::size_t m = t.size();
  for (int a = 0; a < n; ++a) {
    for (std::size_t k = 0; k < m; ++k) out[static_cast<std::size_t>(a) * m + k] = diff(t[k], coords[a]);
  }
  return out;
}

TensorField covariantDerivative(const TensorField& t, const Geometry& geo) {
  const int n = t.dim();
  const TensorField& gamma = geo.christoffel();
  TensorField out = partialDerivative(t, geo.coords());
  const std::size_t m = t.size();
  std::vector<int> idx(t.rank());
  for (std::size_t k = 0; k < m; ++k) {
    idx = t.index(k);
    for (int a = 0; a < n; ++a) {
      std::vector<Expr> terms{out[static_cast<std::size_t>(a) * m + k]};
      for (std::size_t s = 0; s < t.rank(); ++s) {
        const int i = idx[s];
        for (int f = 0; f < n; ++f) {
          std::vector<int> j = idx;
          j[s] = f;
          const Expr& comp = t.at(j);
          if (comp.isZero()) continue;
          if (t.slots()[s] == Slot::Up) {
            if (!gamma(i, a, f).isZero()) terms.push_back(gamma(i, a, f) * comp);
          } else {
            if (!gamma(f, a, i).isZero()) terms.push_back(-(gamma(f, a, i) * comp));
          }
        }
      }
      out[static_cast<std::size_t>(a) * m + k] = add(std::move(terms));
    }
  }
  return out;
}

namespace {

TensorField contractSlot(const TensorField& t, std::size_t slot, const TensorField& metric, Slot result) {
  if (slot >= t.rank()) throw std::out_of_range("slot out of range");
  const int n = t.dim();
  std::vector<Slot> slots = t.slots();
  slots[slot] = result;
  TensorField out(n, slots);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::vector<int> idx = out.index(k);
    const int i = idx[slot];
    std::vector<Expr> terms;
    for (int f = 0; f < n; ++f) {
      idx[slot] = f;
      const Expr& comp = t.at(idx);
      if (comp.isZero() || metric(i, f).isZero()) continue;
      terms.push_back(metric(i, f) * comp);
    }
    out[k] = add(std::move(terms));
  }
  return out;
}

}  // namespace

TensorField raiseSlot(const TensorField& t, std::size_t slot, const TensorField& inverseMetric) {
  if (t.slots().at(slot) != Slot::Down) throw std::invalid_argument("raiseSlot: slot is not covariant");
  return contractSlot(t, slot, inverseMetric, Slot::Up);
}

TensorField lowerSlot(const TensorField& t, std::size_t slot, const TensorField& metric) {
  if (t.slots().at(slot) != Slot::Up) throw std::invalid_argument("lowerSlot: slot is not contravariant");
  return contractSlot(t, slot, metric, Slot::Down);
}

// ---------------------------------------------------------------------------

CompiledField::CompiledField(const TensorField& field, std::span<const Expr> coords, bool withGradient)
    : dim_(field.dim()), slots_(field.slots()), components_(field.size()), gradient_(withGradient) {
  std::vector<Expr> roots(field.data().begin(), field.data().end());
  if (withGradient) {
    if (static_cast<int>(coords.size()) != dim_) throw std::invalid_argument("CompiledField: coordinate count");
    for (const Expr& c : coords) {
      for (const Expr& e : field.data()) roots.push_back(diff(e, c));
    }
  }
  tape_ = Tape(roots);
}

PointTensor<double> CompiledField::value(const ChartPoint& p) const {
  std::vector<double> v;
  tape_.evaluate(p, v);
  PointTensor<double> out(dim_, slots_);
  std::copy_n(v.begin(), components_, out.data().begin());
  return out;
}

PointTensor<Jet> CompiledField::jet(const ChartPoint& p) const {
  if (!gradient_) throw std::logic_error("CompiledField compiled without gradient");
  std::vector<double> v;
  tape_.evaluate(p, v);
  PointTensor<Jet> out(dim_, slots_);
  for (std::size_t k = 0; k < components_; ++k) {
    Jet j(v[k]);
    for (int a = 0; a < dim_; ++a) j.d[a] = v[(static_cast<std::size_t>(a) + 1) * components_ + k];
    out[k] = j;
  }
  return out;
}

PointTensor<double> evaluate(const TensorField& t, const ChartPoint& p) {
  Tape tape(t.data());
  PointTensor<double> out(t.dim(), t.slots());
  tape.evaluate(p, out.data());
  return out;
}

double maxAbs(const PointTensor<double>& t) {
  double m = 0;
  for (double x : t.data()) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace confcheck
