#pragma once

// Dense tensors over a chart, the metric specification, and the classical
// metric concomitants computed symbolically from it.
//
// Index conventions:
//   Christoffel     Γ^c_ab           slots (Up, Down, Down), stored as (c, a, b)
//   Riemann         R_abc^d          with ∇_a∇_b ω_c - ∇_b∇_a ω_c = R_abc^d ω_d
//   Ricci           R_ac = R_abc^b
//   Schouten        L_ab = R_ab/(D-2) - g_ab R / (2(D-1)(D-2))
//   Weyl            C_abc^d, same layout as Riemann
//   Antisymmetrization carries weight 1/2: X_[ab] = (X_ab - X_ba)/2.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "confcheck/expr.hpp"
#include "confcheck/jet.hpp"

namespace confcheck {

enum class Slot : std::uint8_t { Up, Down };

template <class T>
class DenseTensor {
 public:
  DenseTensor() = default;
  DenseTensor(int dim, std::vector<Slot> slots, const T& fill = T{})
      : dim_(dim), slots_(std::move(slots)), data_(power(dim, slots_.size()), fill) {}

  int dim() const { return dim_; }
  std::size_t rank() const { return slots_.size(); }
  const std::vector<Slot>& slots() const { return slots_; }
  std::size_t size() const { return data_.size(); }

  T& operator[](std::size_t flat) { return data_[flat]; }
  const T& operator[](std::size_t flat) const { return data_[flat]; }

  template <class... I>
  T& operator()(I... idx) {
    return data_[offset({static_cast<int>(idx)...})];
  }
  template <class... I>
  const T& operator()(I... idx) const {
    return data_[offset({static_cast<int>(idx)...})];
  }

  T& at(std::span<const int> idx) { return data_[offset(idx)]; }
  const T& at(std::span<const int> idx) const { return data_[offset(idx)]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  std::size_t offset(std::span<const int> idx) const {
    if (idx.size() != slots_.size()) throw std::out_of_range("tensor index arity mismatch");
    std::size_t flat = 0;
    for (int i : idx) {
      if (i < 0 || i >= dim_) throw std::out_of_range("tensor index out of range");
      flat = flat * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i);
    }
    return flat;
  }
  std::size_t offset(std::initializer_list<int> idx) const {
    return offset(std::span<const int>(idx.begin(), idx.size()));
  }

  /// Multi-index of a flat position.
  std::vector<int> index(std::size_t flat) const {
    std::vector<int> idx(slots_.size());
    for (std::size_t k = slots_.size(); k-- > 0;) {
      idx[k] = static_cast<int>(flat % static_cast<std::size_t>(dim_));
      flat /= static_cast<std::size_t>(dim_);
    }
    return idx;
  }

 private:
  static std::size_t power(int base, std::size_t e) {
    std::size_t r = 1;
    for (std::size_t i = 0; i < e; ++i) r *= static_cast<std::size_t>(base);
    return r;
  }

  int dim_ = 0;
  std::vector<Slot> slots_;
  std::vector<T> data_;
};

using TensorField = DenseTensor<Expr>;
template <class S>
using PointTensor = DenseTensor<S>;

struct Interval {
  double lo = 0;
  double hi = 0;
};

class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A metric in a single chart together with its parameter bindings and the
/// coordinate box that sampling is restricted to.
struct MetricSpec {
  int dimension = 0;
  std::vector<std::string> coordinates;
  std::map<std::string, Rational> parameters;
  TensorField metric;  // g_ab, symmetric
  std::vector<Interval> domain;

  std::vector<std::string> parameterNames() const;
  std::vector<Expr> coordinateSymbols() const;
  ChartPoint point(std::span<const double> coords) const;

  /// Checks dimension, symmetry and shape; throws MetricError.
  void validate() const;
};

/// Builds a spec from component expressions (missing entries are zero; the
/// upper triangle is mirrored into the lower).
MetricSpec makeMetric(std::vector<std::string> coordinates, std::map<std::string, Rational> parameters,
                      const std::map<std::pair<int, int>, Expr>& components, std::vector<Interval> domain);

/// Returns the metric factor * g with the same chart and domain.
MetricSpec conformalRescale(const MetricSpec& spec, const Expr& factor);

// Concomitant operations on a spec. Each recomputes from scratch; use
// Geometry to share intermediate results.
TensorField inverseMetric(const MetricSpec& g);
TensorField christoffel(const MetricSpec& g);
TensorField riemann(const MetricSpec& g);
TensorField ricci(const MetricSpec& g);
Expr ricciScalar(const MetricSpec& g);
TensorField schouten(const MetricSpec& g);
TensorField weyl(const MetricSpec& g);

/// Lazily computed, cached concomitants of one metric.
class Geometry {
 public:
  explicit Geometry(MetricSpec spec);

  const MetricSpec& spec() const { return spec_; }
  int dim() const { return spec_.dimension; }
  const std::vector<Expr>& coords() const { return coords_; }

  const TensorField& metric() const { return spec_.metric; }
  const Expr& determinant() const;
  const TensorField& inverse() const;
  const TensorField& christoffel() const;
  const TensorField& riemann() const;
  const TensorField& ricci() const;
  const Expr& ricciScalar() const;
  const TensorField& schouten() const;
  const TensorField& weyl() const;
  /// ∇_[b L_e]a stored as (b, e, a).
  const TensorField& schoutenCurl() const;

 private:
  MetricSpec spec_;
  std::vector<Expr> coords_;
  mutable std::optional<Expr> det_;
  mutable std::optional<TensorField> inverse_, christoffel_, riemann_, ricci_, schouten_, weyl_, curl_;
  mutable std::optional<Expr> scalar_;
};

/// Symbolic determinant by Laplace expansion with memoized minors.
Expr determinant(const TensorField& m);

/// ∇_a T with the derivative slot prepended as a covariant slot.
TensorField covariantDerivative(const TensorField& t, const Geometry& geo);

/// Partial derivative ∂_a T (derivative slot prepended). Not tensorial in general.
TensorField partialDerivative(const TensorField& t, std::span<const Expr> coords);

TensorField raiseSlot(const TensorField& t, std::size_t slot, const TensorField& inverseMetric);
TensorField lowerSlot(const TensorField& t, std::size_t slot, const TensorField& metric);

/// Evaluates a symbolic tensor (and optionally its coordinate gradient) at chart points.
class CompiledField {
 public:
  CompiledField() = default;
  CompiledField(const TensorField& field, std::span<const Expr> coords, bool withGradient);

  PointTensor<double> value(const ChartPoint& p) const;
  PointTensor<Jet> jet(const ChartPoint& p) const;
  bool hasGradient() const { return gradient_; }

 private:
  int dim_ = 0;
  std::vector<Slot> slots_;
  std::size_t components_ = 0;
  bool gradient_ = false;
  Tape tape_;
};

/// Numeric metric tensor at a point, and its inverse.
PointTensor<double> evaluate(const TensorField& t, const ChartPoint& p);

/// Max-norm over all components.
double maxAbs(const PointTensor<double>& t);

}  // namespace confcheck
