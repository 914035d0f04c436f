#pragma once

// Shared fixtures for the test suites: small metric builders, a sampler that
// does not depend on the checker module, and a finite-difference curvature
// oracle that only uses numeric evaluation of the metric components.

#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "confcheck/expr.hpp"
#include "confcheck/tensor.hpp"

namespace testing_support {

using namespace confcheck;

inline Expr P(const std::string& text, const std::vector<std::string>& coords,
              const std::vector<std::string>& params = {}) {
  return parse(text, coords, params);
}

/// Builds a metric from 1-based "i,j" -> expression text entries.
inline MetricSpec metricFrom(std::vector<std::string> coords, std::map<std::string, Rational> params,
                             const std::vector<std::tuple<int, int, std::string>>& entries,
                             std::vector<Interval> domain) {
  std::vector<std::string> names;
  for (const auto& [n, v] : params) names.push_back(n);
  std::map<std::pair<int, int>, Expr> comps;
  for (const auto& [i, j, text] : entries) comps[{i - 1, j - 1}] = parse(text, coords, names);
  return makeMetric(std::move(coords), std::move(params), comps, std::move(domain));
}

inline MetricSpec minkowski4() {
  return metricFrom({"t", "x", "y", "z"}, {}, {{1, 1, "-1"}, {2, 2, "1"}, {3, 3, "1"}, {4, 4, "1"}},
                    {{-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}});
}

inline MetricSpec schwarzschild() {
  return metricFrom({"t", "r", "th", "ph"}, {{"m", Rational(1)}},
                    {{1, 1, "-(1 - 2*m/r)"}, {2, 2, "1/(1 - 2*m/r)"}, {3, 3, "r^2"}, {4, 4, "r^2*sin(th)^2"}},
                    {{0, 1}, {3, 10}, {0.5, 2.5}, {0, 6}});
}

inline MetricSpec ppwave(const std::string& h) {
  return metricFrom({"u", "v", "x1", "x2"}, {}, {{1, 1, h}, {1, 2, "-1"}, {3, 3, "1"}, {4, 4, "1"}},
                    {{-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}});
}

/// Robinson-Trautman instance with H = -exp(lambda*u)/(6r), P = exp(lambda*u/2).
inline MetricSpec robinsonTrautman() {
  return metricFrom({"u", "r", "x", "y"}, {{"lambda", Rational(1)}},
                    {{1, 1, "exp(lambda*u)/(3*r)"}, {1, 2, "-1"}, {3, 3, "2*r^2*exp(-lambda*u)"},
                     {4, 4, "2*r^2*exp(-lambda*u)"}},
                    {{-0.5, 0.5}, {1, 3}, {-1, 1}, {-1, 1}});
}

inline MetricSpec sphereTimesPlane() {
  return metricFrom({"th", "ph", "x", "y"}, {},
                    {{1, 1, "1"}, {2, 2, "sin(th)^2"}, {3, 3, "1"}, {4, 4, "1"}},
                    {{0.4, 2.7}, {0, 6}, {-1, 1}, {-1, 1}});
}

inline MetricSpec flrw() {
  return metricFrom({"t", "x", "y", "z"}, {},
                    {{1, 1, "-exp(2*t)"}, {2, 2, "exp(2*t)"}, {3, 3, "exp(2*t)"}, {4, 4, "exp(2*t)"}},
                    {{-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}});
}

// Ω = exp(poly) with small random rational coefficients.
inline Expr randomOmega(const MetricSpec& g, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> c(-3, 3);
  std::vector<Expr> terms;
  for (const auto& name : g.coordinates) {
    const Expr x = coordinate(name);
    terms.push_back(number(Rational(c(rng), 10)) * x);
    terms.push_back(number(Rational(c(rng), 20)) * x * x);
  }
  return exp(add(std::move(terms)));
}

inline double maxRel(const PointTensor<double>& a, const PointTensor<double>& b) {
  double scale = std::max({1.0, maxAbs(a), maxAbs(b)});
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m / scale;
}

/// Uniform random points inside the domain box.
inline std::vector<std::vector<double>> randomPoints(const MetricSpec& g, int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> pts;
  for (int k = 0; k < count; ++k) {
    std::vector<double> x(g.dimension);
    for (int i = 0; i < g.dimension; ++i) {
      std::uniform_real_distribution<double> u(g.domain[i].lo, g.domain[i].hi);
      x[i] = u(rng);
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

inline double relErr(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

/// Finite-difference curvature oracle. Only numeric metric values are used.
class FdOracle {
 public:
  explicit FdOracle(const MetricSpec& g, double h = 1e-3) : g_(g), h_(h), n_(g.dimension) {
    for (const auto& e : g.metric.data()) comps_.push_back(e);
  }

  Eigen::MatrixXd metric(const std::vector<double>& x) const {
    ChartPoint p = g_.point(x);
    Eigen::MatrixXd m(n_, n_);
    for (int a = 0; a < n_; ++a)
      for (int b = 0; b < n_; ++b) m(a, b) = evalAt(comps_[a * n_ + b], p);
    return m;
  }

  // dg[d](a,b) = ∂_d g_ab by a five-point stencil
  std::vector<Eigen::MatrixXd> metricGradient(const std::vector<double>& x) const {
    std::vector<Eigen::MatrixXd> out;
    for (int d = 0; d < n_; ++d) {
      out.push_back(stencil(x, d, [&](const std::vector<double>& y) { return metric(y); }));
    }
    return out;
  }

  // gamma[c](a,b) = Γ^c_ab
  std::vector<Eigen::MatrixXd> christoffel(const std::vector<double>& x) const {
    const Eigen::MatrixXd ginv = metric(x).inverse();
    const auto dg = metricGradient(x);
    std::vector<Eigen::MatrixXd> gamma(n_, Eigen::MatrixXd::Zero(n_, n_));
    for (int c = 0; c < n_; ++c)
      for (int a = 0; a < n_; ++a)
        for (int b = 0; b < n_; ++b) {
          double s = 0;
          for (int d = 0; d < n_; ++d) s += ginv(c, d) * (dg[a](d, b) + dg[b](d, a) - dg[d](a, b));
          gamma[c](a, b) = 0.5 * s;
        }
    return gamma;
  }

  /// R_abc^d flattened as ((a*n+b)*n+c)*n+d.
  std::vector<double> riemann(const std::vector<double>& x) const {
    const auto gamma = christoffel(x);
    std::vector<std::vector<Eigen::MatrixXd>> dgamma;  // dgamma[e][d](a,c) = ∂_e Γ^d_ac
    for (int e = 0; e < n_; ++e) {
      std::vector<Eigen::MatrixXd> slice;
      for (int d = 0; d < n_; ++d) {
        slice.push_back(stencil(x, e, [&](const std::vector<double>& y) { return christoffel(y)[d]; }));
      }
      dgamma.push_back(std::move(slice));
    }
    std::vector<double> r(static_cast<std::size_t>(n_ * n_ * n_ * n_));
    for (int a = 0; a < n_; ++a)
      for (int b = 0; b < n_; ++b)
        for (int c = 0; c < n_; ++c)
          for (int d = 0; d < n_; ++d) {
            double v = dgamma[b][d](a, c) - dgamma[a][d](b, c);
            for (int e = 0; e < n_; ++e) v += gamma[e](a, c) * gamma[d](b, e) - gamma[e](b, c) * gamma[d](a, e);
            r[((a * n_ + b) * n_ + c) * n_ + d] = v;
          }
    return r;
  }

 private:
  template <class F>
  Eigen::MatrixXd stencil(const std::vector<double>& x, int dir, F f) const {
    auto at = [&](double k) {
      std::vector<double> y = x;
      y[dir] += k * h_;
      return f(y);
    };
    return (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * h_);
  }

  const MetricSpec& g_;
  double h_;
  int n_;
  std::vector<Expr> comps_;
};

}  // namespace testing_support
