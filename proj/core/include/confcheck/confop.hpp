#pragma once

// Λ one-forms, the C-connection and its curvature, and the conformally
// covariant operators D^s and D^{s,(p,q)}.
//
// W and W⁺ come from a numeric matrix inversion at each point, so every
// quantity built from them is pointwise. Λ is carried as a Jet (value and
// coordinate gradient) so that ∇Λ, dΛ and the C-Ricci tensor are exact up to
// floating point; the gradient of W follows from the analytic derivative of
// the inverse or pseudoinverse.

#include <optional>
#include <string>
#include <vector>

#include "confcheck/tensor.hpp"
#include "confcheck/weylendo.hpp"

namespace confcheck {

/// Υ_a = ∂_a Ω / Ω.
TensorField upsilon(const Expr& omega, const Geometry& geo);

/// Compiled symbolic concomitants of one metric, evaluated point by point.
class CompiledGeometry {
 public:
  explicit CompiledGeometry(const Geometry& geo);

  const Geometry& geometry() const { return *geo_; }
  int dim() const { return geo_->dim(); }
  const SolderingBasis& basis() const { return basis_; }

  struct Point {
    ChartPoint at;
    PointTensor<Jet> g, ginv;   // with gradients
    PointTensor<double> gamma;  // Γ^c_ab
    PointTensor<double> ricci;  // R_ab
    double scalar = 0;          // R
    PointTensor<Jet> weyl;      // C_abc^d with gradient
    PointTensor<Jet> curl;      // ∇_[b L_e]a with gradient, stored (b, e, a)
    PointTensor<Jet> weylUp;    // C^{ab}_{cd} with gradient
    Matrix endo;                // C_A^B
    std::vector<Matrix> dEndo;  // ∂_k C_A^B
    double curvatureScale = 0;  // max(|C^{ab}_{cd}|, |L^a_b|)
  };

  Point evaluate(const ChartPoint& p) const;

 private:
  const Geometry* geo_;
  SolderingBasis basis_;
  CompiledField metric_, inverse_, gamma_, ricci_, weyl_, curl_;
  Tape scalar_;
};

enum class LambdaBranch { Invertible, Xi };

struct LambdaForm {
  LambdaBranch branch = LambdaBranch::Invertible;
  PointTensor<Jet> lambda;       // Λ_a with ∂_b Λ_a in lambda(a).d[b]
  std::optional<PointTensor<Jet>> xi;  // ξ^p_mn used in the ξ-branch
};

/// W (inverse) or W⁺ (pseudoinverse) at the point, as tensors with gradients.
struct EndoInverse {
  Matrix m;
  std::vector<Matrix> dm;
  PointTensor<Jet> tensor;  // W^{ab}_{cd} or (W⁺)^{ab}_{cd}
  int rank = 0;
};

/// Rank decisions use tol * max(σ_max, pt.curvatureScale), which is
/// unchanged by a constant rescaling of the metric.
EndoInverse weylInverse(const CompiledGeometry::Point& pt, const SolderingBasis& basis,
                        double tol = kDefaultRankTol);
EndoInverse weylPseudoinverse(const CompiledGeometry::Point& pt, const SolderingBasis& basis,
                              double tol = kDefaultRankTol);

/// Numerical rank of C_A^B at the point.
int endoRank(const CompiledGeometry::Point& pt, double tol = kDefaultRankTol);

/// Λ_q = 4/(1-D) ∇_[b L_e]^p W^{be}_{pq}.
LambdaForm lambdaInvertible(const CompiledGeometry::Point& pt, const EndoInverse& w);

/// Λ^ξ_q = 4/(1-D) ∇_[b L_e]^p (W⁺)^{be}_{pq} + 2/(1-D) (δ^m_[p δ^n_q] − C^{mn}_{rs} (W⁺)^{rs}_{pq}) ξ^p_mn.
/// A missing ξ means ξ = 0.
LambdaForm lambdaXi(const CompiledGeometry::Point& pt, const EndoInverse& wplus,
                    const std::optional<PointTensor<Jet>>& xi);

/// C^{qp}_{be} (W⁺)^{rs}_{qp} ∇_[r L_s]a − ∇_[b L_e]a, stored (b, e, a).
PointTensor<double> compatibilityResidual(const CompiledGeometry::Point& pt, const EndoInverse& wplus);

struct CConnection {
  PointTensor<Jet> transition;  // Γ[C,∇]^c_ab with gradient
};

/// Γ[C,∇]^c_ab = g_ab Λ^c − δ^c_b Λ_a − δ^c_a Λ_b.
CConnection cConnection(const LambdaForm& l, const CompiledGeometry::Point& pt);

/// 𝒞_a Λ_c = ∇_a Λ_c − g_ac Λ·Λ + 2 Λ_a Λ_c.
PointTensor<double> cDerivativeOfLambda(const LambdaForm& l, const CompiledGeometry::Point& pt);

/// 𝒞_a g_bc, which equals 2 Λ_a g_bc for a Weyl connection.
PointTensor<double> cDerivativeOfMetric(const CConnection& conn, const CompiledGeometry::Point& pt);

struct CRicci {
  PointTensor<double> tensor;  // 𝒭_ab
  double scalar = 0;           // g^ab 𝒭_ab
};

/// 𝒭 from the closed formula relating it to R_ab and Λ.
CRicci cRicci(const LambdaForm& l, const CompiledGeometry::Point& pt);
/// 𝒭 from the curvature of the connection Γ + Γ[C,∇] directly.
CRicci cRicciDirect(const CConnection& conn, const CompiledGeometry::Point& pt);
/// 𝒭 scalar from R, Λ and 𝒞Λ.
double cRicciScalarFromR(const LambdaForm& l, const CompiledGeometry::Point& pt);

/// D^s_a u = ∇_a u + s Λ_a u.
PointTensor<double> dOperatorScalar(double u, const PointTensor<double>& gradU, double s,
                                    const PointTensor<double>& lambda);

/// D^{s,(p,q)}_a K for K with p contravariant and q covariant slots (in any
/// order); nablaK holds ∇_a K with the derivative slot first.
PointTensor<double> dOperatorTensor(const PointTensor<double>& k, const PointTensor<double>& nablaK, double s,
                                    const PointTensor<double>& lambda, const PointTensor<double>& g,
                                    const PointTensor<double>& ginv);

/// ∇_a T at a point from the jet of T and Γ^c_ab, derivative slot first.
PointTensor<double> covariantDerivativeAt(const PointTensor<Jet>& t, const PointTensor<double>& gamma);

/// Values of a jet-valued tensor.
PointTensor<double> values(const PointTensor<Jet>& t);

struct PointResiduals {
  double antisymRicci = 0;  // max |𝒭_[ab]|
  double tracefree = 0;     // max |𝒭_(ab) − g_ab 𝒭 / D|
  double closedness = 0;    // max |∂_[a Λ_b]|
  double compatibility = 0;
  double ricciScale = 0;    // max |𝒭_ab|
};

/// Unnormalized Einstein-condition residuals at a point.
PointResiduals einsteinConditions(const LambdaForm& l, const CompiledGeometry::Point& pt,
                                  const PointTensor<double>* compatibility = nullptr);

/// max |R_ab − R g_ab / D| at a point.
double ordinaryTracefreeRicci(const CompiledGeometry::Point& pt);

}  // namespace confcheck
