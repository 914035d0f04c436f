#include "confcheck/confop.hpp"

#include <algorithm>
#include <cmath>

namespace confcheck {

TensorField upsilon(const Expr& omega, const Geometry& geo) {
  const int n = geo.dim();
  TensorField out(n, {Slot::Down});
  const Expr inv = pow(omega, Expr(-1L));
  for (int a = 0; a < n; ++a) out(a) = diff(omega, geo.coords()[static_cast<std::size_t>(a)]) * inv;
  return out;
}

CompiledGeometry::CompiledGeometry(const Geometry& geo)
    : geo_(&geo),
      basis_(geo.dim()),
      metric_(geo.metric(), geo.coords(), true),
      inverse_(geo.inverse(), geo.coords(), true),
      gamma_(geo.christoffel(), geo.coords(), false),
      ricci_(geo.ricci(), geo.coords(), false),
      weyl_(geo.weyl(), geo.coords(), true),
      curl_(geo.schoutenCurl(), geo.coords(), true) {
  const Expr roots[] = {geo.ricciScalar()};
  scalar_ = Tape(roots);
}

CompiledGeometry::Point CompiledGeometry::evaluate(const ChartPoint& p) const {
  Point pt;
  pt.at = p;
  pt.g = metric_.jet(p);
  pt.ginv = inverse_.jet(p);
  pt.gamma = gamma_.value(p);
  pt.ricci = ricci_.value(p);
  pt.scalar = scalar_.evaluate(p).front();
  pt.weyl = weyl_.jet(p);
  pt.curl = curl_.jet(p);
  pt.weylUp = weylEndomorphismTensor(pt.weyl, pt.ginv, pt.g);
  pt.endo = solder(values(pt.weylUp), basis_);
  pt.dEndo = solderGradient(pt.weylUp, basis_);
  const int n = dim();
  double scale = 0;
  for (const Jet& c : pt.weylUp.data()) scale = std::max(scale, std::abs(c.v));
  const double k = 1.0 / (n - 2), kr = pt.scalar / (2.0 * (n - 1) * (n - 2));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double s = (a == b) ? -kr : 0.0;
      for (int c = 0; c < n; ++c) s += k * pt.ginv(a, c).v * pt.ricci(c, b);
      scale = std::max(scale, std::abs(s));
    }
  pt.curvatureScale = scale;
  return pt;
}

PointTensor<double> values(const PointTensor<Jet>& t) {
  PointTensor<double> out(t.dim(), t.slots());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i].v;
  return out;
}

PointTensor<double> covariantDerivativeAt(const PointTensor<Jet>& t, const PointTensor<double>& gamma) {
  const int n = t.dim();
  std::vector<Slot> slots{Slot::Down};
  slots.insert(slots.end(), t.slots().begin(), t.slots().end());
  PointTensor<double> out(n, slots, 0.0);
  const std::size_t m = t.size();
  for (std::size_t flat = 0; flat < m; ++flat) {
    const std::vector<int> idx = t.index(flat);
    for (int a = 0; a < n; ++a) {
      double s = t[flat].d[static_cast<std::size_t>(a)];
      for (std::size_t j = 0; j < idx.size(); ++j) {
        std::vector<int> jdx = idx;
        for (int c = 0; c < n; ++c) {
          jdx[j] = c;
          const double v = t.at(jdx).v;
          if (t.slots()[j] == Slot::Up)
            s += gamma(idx[j], a, c) * v;
          else
            s -= gamma(c, a, idx[j]) * v;
        }
      }
      out[static_cast<std::size_t>(a) * m + flat] = s;
    }
  }
  return out;
}

int endoRank(const CompiledGeometry::Point& pt, double tol) { return rank(pt.endo, tol, pt.curvatureScale); }

EndoInverse weylInverse(const CompiledGeometry::Point& pt, const SolderingBasis& basis, double tol) {
  EndoInverse w;
  w.rank = endoRank(pt, tol);
  w.m = inverse(pt.endo, tol, pt.curvatureScale);
  for (const Matrix& d : pt.dEndo) w.dm.push_back(inverseDerivative(w.m, d));
  w.tensor = backSolder(w.m, w.dm, basis);
  return w;
}

EndoInverse weylPseudoinverse(const CompiledGeometry::Point& pt, const SolderingBasis& basis, double tol) {
  EndoInverse w;
  w.rank = endoRank(pt, tol);
  w.m = pseudoinverse(pt.endo, tol, pt.curvatureScale);
  for (const Matrix& d : pt.dEndo) w.dm.push_back(pseudoinverseDerivative(pt.endo, w.m, d));
  w.tensor = backSolder(w.m, w.dm, basis);
  return w;
}

namespace {

// ∇_[b L_e]^p W^{be}_{pq} summed, times 4/(1-D).
PointTensor<Jet> curlTerm(const CompiledGeometry::Point& pt, const PointTensor<Jet>& w) {
  const int n = pt.g.dim();
  // curl_be^p
  PointTensor<Jet> up(n, {Slot::Down, Slot::Down, Slot::Up});
  for (int b = 0; b < n; ++b)
    for (int e = b + 1; e < n; ++e)
      for (int p = 0; p < n; ++p) {
        Jet s;
        for (int a = 0; a < n; ++a) s += pt.ginv(p, a) * pt.curl(b, e, a);
        up(b, e, p) = s;
        up(e, b, p) = -s;
      }
  const double k = 4.0 / (1.0 - n);
  PointTensor<Jet> out(n, {Slot::Down});
  for (int q = 0; q < n; ++q) {
    Jet s;
    for (int b = 0; b < n; ++b)
      for (int e = 0; e < n; ++e) {
        if (b == e) continue;
        for (int p = 0; p < n; ++p) s += up(b, e, p) * w(b, e, p, q);
      }
    out(q) = s * k;
  }
  return out;
}

}  // namespace

LambdaForm lambdaInvertible(const CompiledGeometry::Point& pt, const EndoInverse& w) {
  LambdaForm l;
  l.branch = LambdaBranch::Invertible;
  l.lambda = curlTerm(pt, w.tensor);
  return l;
}

LambdaForm lambdaXi(const CompiledGeometry::Point& pt, const EndoInverse& wplus,
                    const std::optional<PointTensor<Jet>>& xi) {
  const int n = pt.g.dim();
  LambdaForm l;
  l.branch = LambdaBranch::Xi;
  l.lambda = curlTerm(pt, wplus.tensor);
  l.xi = xi;
  if (!xi) return l;
  const PointTensor<Jet>& x = *xi;
  // P^{mn}_{pq} = C^{mn}_{rs} (W⁺)^{rs}_{pq}
  PointTensor<Jet> proj(n, {Slot::Up, Slot::Up, Slot::Down, Slot::Down});
  for (int m = 0; m < n; ++m)
    for (int nn = 0; nn < n; ++nn) {
      if (m == nn) continue;
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
          if (p == q) continue;
          Jet s;
          for (int r = 0; r < n; ++r)
            for (int t = 0; t < n; ++t)
              if (r != t) s += pt.weylUp(m, nn, r, t) * wplus.tensor(r, t, p, q);
          proj(m, nn, p, q) = s;
        }
    }
  const double k = 2.0 / (1.0 - n);
  for (int q = 0; q < n; ++q) {
    Jet s;
    for (int p = 0; p < n; ++p)
      for (int m = 0; m < n; ++m)
        for (int nn = 0; nn < n; ++nn) {
          double delta = 0;
          if (m == p && nn == q) delta += 0.5;
          if (m == q && nn == p) delta -= 0.5;
          Jet coeff = Jet(delta) - proj(m, nn, p, q);
          s += coeff * x(p, m, nn);
        }
    l.lambda(q) += s * k;
  }
  return l;
}

PointTensor<double> compatibilityResidual(const CompiledGeometry::Point& pt, const EndoInverse& wplus) {
  const int n = pt.g.dim();
  const PointTensor<double> c = values(pt.weylUp);
  const PointTensor<double> w = values(wplus.tensor);
  const PointTensor<double> curl = values(pt.curl);
  // Q^{rs}_{be} = C^{qp}_{be} (W⁺)^{rs}_{qp}
  PointTensor<double> q(n, {Slot::Up, Slot::Up, Slot::Down, Slot::Down}, 0.0);
  for (int r = 0; r < n; ++r)
    for (int s = 0; s < n; ++s)
      for (int b = 0; b < n; ++b)
        for (int e = 0; e < n; ++e) {
          double acc = 0;
          for (int qq = 0; qq < n; ++qq)
            for (int p = 0; p < n; ++p) acc += c(qq, p, b, e) * w(r, s, qq, p);
          q(r, s, b, e) = acc;
        }
  PointTensor<double> out(n, {Slot::Down, Slot::Down, Slot::Down}, 0.0);
  for (int b = 0; b < n; ++b)
    for (int e = 0; e < n; ++e)
      for (int a = 0; a < n; ++a) {
        double acc = -curl(b, e, a);
        for (int r = 0; r < n; ++r)
          for (int s = 0; s < n; ++s) acc += q(r, s, b, e) * curl(r, s, a);
        out(b, e, a) = acc;
      }
  return out;
}

namespace {

PointTensor<Jet> raised(const PointTensor<Jet>& lambda, const PointTensor<Jet>& ginv) {
  const int n = lambda.dim();
  PointTensor<Jet> up(n, {Slot::Up});
  for (int c = 0; c < n; ++c) {
    Jet s;
    for (int d = 0; d < n; ++d) s += ginv(c, d) * lambda(d);
    up(c) = s;
  }
  return up;
}

}  // namespace

CConnection cConnection(const LambdaForm& l, const CompiledGeometry::Point& pt) {
  const int n = pt.g.dim();
  const PointTensor<Jet> up = raised(l.lambda, pt.ginv);
  CConnection conn;
  conn.transition = PointTensor<Jet>(n, {Slot::Up, Slot::Down, Slot::Down});
  for (int c = 0; c < n; ++c)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        Jet v = pt.g(a, b) * up(c);
        if (c == b) v -= l.lambda(a);
        if (c == a) v -= l.lambda(b);
        conn.transition(c, a, b) = v;
      }
  return conn;
}

PointTensor<double> cDerivativeOfMetric(const CConnection& conn, const CompiledGeometry::Point& pt) {
  // ∇g = 0, so 𝒞_a g_bc = −Γ[C,∇]^d_ab g_dc − Γ[C,∇]^d_ac g_bd
  const int n = pt.g.dim();
  PointTensor<double> out(n, {Slot::Down, Slot::Down, Slot::Down}, 0.0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        double s = 0;
        for (int d = 0; d < n; ++d) {
          s -= conn.transition(d, a, b).v * pt.g(d, c).v;
          s -= conn.transition(d, a, c).v * pt.g(b, d).v;
        }
        out(a, b, c) = s;
      }
  return out;
}

PointTensor<double> cDerivativeOfLambda(const LambdaForm& l, const CompiledGeometry::Point& pt) {
  const int n = pt.g.dim();
  const PointTensor<Jet> up = raised(l.lambda, pt.ginv);
  double sq = 0;
  for (int c = 0; c < n; ++c) sq += up(c).v * l.lambda(c).v;
  PointTensor<double> out(n, {Slot::Down, Slot::Down});
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c) {
      double nabla = l.lambda(c).d[a];
      for (int d = 0; d < n; ++d) nabla -= pt.gamma(d, a, c) * l.lambda(d).v;
      out(a, c) = nabla - pt.g(a, c).v * sq + 2 * l.lambda(a).v * l.lambda(c).v;
    }
  return out;
}

CRicci cRicci(const LambdaForm& l, const CompiledGeometry::Point& pt) {
  const int n = pt.g.dim();
  const PointTensor<double> cl = cDerivativeOfLambda(l, pt);
  const PointTensor<Jet> up = raised(l.lambda, pt.ginv);
  double sq = 0, trace = 0;
  for (int c = 0; c < n; ++c) sq += up(c).v * l.lambda(c).v;
  for (int d = 0; d < n; ++d)
    for (int b = 0; b < n; ++b) trace += pt.ginv(d, b).v * cl(d, b);
  CRicci out;
  out.tensor = PointTensor<double>(n, {Slot::Down, Slot::Down});
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c) {
      const double la = l.lambda(a).v, lc = l.lambda(c).v, g = pt.g(a, c).v;
      out.tensor(a, c) = pt.ricci(a, c) - (n - 2) * la * lc + (n - 2) * sq * g + (n - 1) * cl(a, c) - cl(c, a) +
                         g * trace;
    }
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c) out.scalar += pt.ginv(a, c).v * out.tensor(a, c);
  return out;
}

double cRicciScalarFromR(const LambdaForm& l, const CompiledGeometry::Point& pt) {
  // R = 𝒭 − (D−1)(D−2) Λ·Λ + 2(1−D) g^ab 𝒞_b Λ_a
  const int n = pt.g.dim();
  const PointTensor<double> cl = cDerivativeOfLambda(l, pt);
  const PointTensor<Jet> up = raised(l.lambda, pt.ginv);
  double sq = 0, trace = 0;
  for (int c = 0; c < n; ++c) sq += up(c).v * l.lambda(c).v;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) trace += pt.ginv(a, b).v * cl(b, a);
  return pt.scalar + (n - 1) * (n - 2) * sq - 2.0 * (1 - n) * trace;
}

CRicci cRicciDirect(const CConnection& conn, const CompiledGeometry::Point& pt) {
  // Curvature of Γ + T with T = Γ[C,∇], contracted on the second and fourth slots:
  // 𝒭_ac = R_ac + ∂_b T^b_ac − ∂_a T^b_bc + Γ^e_ac T^b_be + T^e_ac Γ^b_be + T^e_ac T^b_be
  //        − Γ^e_bc T^b_ae − T^e_bc Γ^b_ae − T^e_bc T^b_ae
  const int n = pt.g.dim();
  const PointTensor<Jet>& t = conn.transition;
  const PointTensor<double>& gm = pt.gamma;
  CRicci out;
  out.tensor = PointTensor<double>(n, {Slot::Down, Slot::Down});
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c) {
      double s = pt.ricci(a, c);
      for (int b = 0; b < n; ++b) {
        s += t(b, a, c).d[b] - t(b, b, c).d[a];
        for (int e = 0; e < n; ++e) {
          s += gm(e, a, c) * t(b, b, e).v + t(e, a, c).v * gm(b, b, e) + t(e, a, c).v * t(b, b, e).v;
          s -= gm(e, b, c) * t(b, a, e).v + t(e, b, c).v * gm(b, a, e) + t(e, b, c).v * t(b, a, e).v;
        }
      }
      out.tensor(a, c) = s;
    }
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c) out.scalar += pt.ginv(a, c).v * out.tensor(a, c);
  return out;
}

PointTensor<double> dOperatorScalar(double u, const PointTensor<double>& gradU, double s,
                                    const PointTensor<double>& lambda) {
  PointTensor<double> out = gradU;
  for (int a = 0; a < out.dim(); ++a) out(a) += s * lambda(a) * u;
  return out;
}

PointTensor<double> dOperatorTensor(const PointTensor<double>& k, const PointTensor<double>& nablaK, double s,
                                    const PointTensor<double>& lambda, const PointTensor<double>& g,
                                    const PointTensor<double>& ginv) {
  const int n = k.dim();
  int p = 0, q = 0;
  for (Slot sl : k.slots()) (sl == Slot::Up ? p : q)++;
  if (p == 0 && q == 0) throw std::invalid_argument("dOperatorTensor: use dOperatorScalar for scalars");
  if (nablaK.rank() != k.rank() + 1) throw std::invalid_argument("dOperatorTensor: derivative has wrong rank");
  std::vector<double> lup(static_cast<std::size_t>(n), 0.0);
  for (int c = 0; c < n; ++c)
    for (int d = 0; d < n; ++d) lup[static_cast<std::size_t>(c)] += ginv(c, d) * lambda(d);

  PointTensor<double> out = nablaK;
  const std::size_t m = k.size();
  for (std::size_t flat = 0; flat < m; ++flat) {
    const std::vector<int> idx = k.index(flat);
    for (int a = 0; a < n; ++a) {
      double acc = 0;
      for (std::size_t j = 0; j < idx.size(); ++j) {
        std::vector<int> jdx = idx;
        const int x = idx[j];
        for (int c = 0; c < n; ++c) {
          jdx[j] = c;
          const double kc = k.at(jdx);
          if (kc == 0) continue;
          double coeff;
          if (k.slots()[j] == Slot::Up) {
            // M̄^x_{ac} = ((s−p)/p) Λ_a δ^x_c − Λ_c δ^x_a + g_ac Λ^x
            coeff = g(a, c) * lup[static_cast<std::size_t>(x)];
            if (x == c) coeff += (s - p) / p * lambda(a);
            if (x == a) coeff -= lambda(c);
          } else {
            // M^c_{ax} = ((s+q)/q) Λ_a δ^c_x + Λ_x δ^c_a − g_ax Λ^c
            coeff = -g(a, x) * lup[static_cast<std::size_t>(c)];
            if (c == x) coeff += (s + q) / q * lambda(a);
            if (c == a) coeff += lambda(x);
          }
          acc += coeff * kc;
        }
      }
      out[static_cast<std::size_t>(a) * m + flat] += acc;
    }
  }
  return out;
}

PointResiduals einsteinConditions(const LambdaForm& l, const CompiledGeometry::Point& pt,
                                  const PointTensor<double>* compatibility) {
  const int n = pt.g.dim();
  const CRicci r = cRicci(l, pt);
  PointResiduals res;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double sym = 0.5 * (r.tensor(a, b) + r.tensor(b, a));
      res.antisymRicci = std::max(res.antisymRicci, std::abs(0.5 * (r.tensor(a, b) - r.tensor(b, a))));
      res.tracefree = std::max(res.tracefree, std::abs(sym - pt.g(a, b).v * r.scalar / n));
      res.closedness = std::max(res.closedness, std::abs(0.5 * (l.lambda(b).d[a] - l.lambda(a).d[b])));
      res.ricciScale = std::max(res.ricciScale, std::abs(r.tensor(a, b)));
    }
  if (compatibility) res.compatibility = maxAbs(*compatibility);
  return res;
}

double ordinaryTracefreeRicci(const CompiledGeometry::Point& pt) {
  const int n = pt.g.dim();
  double m = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) m = std::max(m, std::abs(pt.ricci(a, b) - pt.scalar * pt.g(a, b).v / n));
  return m;
}

}  // namespace confcheck
