#pragma once

// First-order jet: a value together with its partial derivatives along the
// chart coordinates at one point. Arithmetic follows the Leibniz rule.

#include <array>
#include <cmath>

namespace confcheck {

inline constexpr int kMaxDim = 8;

struct Jet {
  double v = 0;
  std::array<double, kMaxDim> d{};

  Jet() = default;
  Jet(double value) : v(value) {}  // NOLINT(google-explicit-constructor)

  Jet& operator+=(const Jet& o) {
    v += o.v;
    for (int i = 0; i < kMaxDim; ++i) d[i] += o.d[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    v -= o.v;
    for (int i = 0; i < kMaxDim; ++i) d[i] -= o.d[i];
    return *this;
  }
  Jet& operator*=(const Jet& o) {
    for (int i = 0; i < kMaxDim; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    return *this;
  }
  Jet& operator*=(double s) {
    v *= s;
    for (double& x : d) x *= s;
    return *this;
  }
};

inline Jet operator+(Jet a, const Jet& b) { return a += b; }
inline Jet operator-(Jet a, const Jet& b) { return a -= b; }
inline Jet operator*(Jet a, const Jet& b) { return a *= b; }
inline Jet operator*(Jet a, double s) { return a *= s; }
inline Jet operator*(double s, Jet a) { return a *= s; }
inline Jet operator-(Jet a) { return a *= -1.0; }
inline Jet operator/(const Jet& a, const Jet& b) {
  Jet out;
  out.v = a.v / b.v;
  for (int i = 0; i < kMaxDim; ++i) out.d[i] = (a.d[i] - out.v * b.d[i]) / b.v;
  return out;
}

inline double valueOf(double x) { return x; }
inline double valueOf(const Jet& x) { return x.v; }

}  // namespace confcheck
