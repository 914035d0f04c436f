#pragma once

// The Weyl tensor as an endomorphism of bivectors.
//
// Pairs (a,b) with a < b are numbered lexicographically. The soldering forms
// are σ^A_ab = +1 on pair A (and -1 on its transpose), σ̃_A^ab = ±1/2 likewise.
// For a tensor X^{ab}_{cd} antisymmetric in both pairs the matrix
//     X_A^B = X^{ab}_{cd} σ^B_ab σ̃_A^cd
// has its row indexed by the lower pair and its column by the upper pair.
// Composition of endomorphisms maps to the reversed matrix product, so the
// matrix inverse and pseudoinverse of C_A^B solder back to W^{ab}_{cd} and
// (W⁺)^{ab}_{cd} respectively.

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "confcheck/expr.hpp"
#include "confcheck/jet.hpp"
#include "confcheck/tensor.hpp"

namespace confcheck {

class SolderingBasis {
 public:
  explicit SolderingBasis(int dim);

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(pairs_.size()); }
  const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }
  const std::pair<int, int>& pair(int A) const { return pairs_.at(static_cast<std::size_t>(A)); }

  /// Bivector index of (a,b) and the orientation sign; nullopt when a == b.
  std::optional<std::pair<int, int>> index(int a, int b) const;

  /// σ^A_ab
  double sigma(int A, int a, int b) const;
  /// σ̃_A^ab
  double sigmaTilde(int A, int a, int b) const;

 private:
  int dim_;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<int> lookup_;  // dim*dim -> A, or -1 on the diagonal
};

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct EndoMatrix {
  Matrix m;
  ChartPoint point;
  SolderingBasis basis;

  EndoMatrix(Matrix matrix, ChartPoint at, SolderingBasis b)
      : m(std::move(matrix)), point(std::move(at)), basis(std::move(b)) {}
  int size() const { return static_cast<int>(m.rows()); }
};

/// C_A^B from a numeric tensor in C^{ab}_{cd} position (slots Up, Up, Down, Down).
Matrix solder(const PointTensor<double>& upperPairLowerPair, const SolderingBasis& basis);
/// Matrix of derivatives: entry-wise jets of the soldered matrix.
std::vector<Matrix> solderGradient(const PointTensor<Jet>& t, const SolderingBasis& basis);

EndoMatrix endoMatrix(const PointTensor<double>& cUpUpDownDown, const SolderingBasis& basis, ChartPoint p);
EndoMatrix endoMatrix(const TensorField& cUpUpDownDown, const SolderingBasis& basis, ChartPoint p);

/// C^{ab}_{cd} = g^{ae} g^{bf} C_{efc}{}^h g_{hd}, from the Weyl tensor in C_abc^d layout.
/// Instantiated for double and Jet.
template <class S>
PointTensor<S> weylEndomorphismTensor(const PointTensor<S>& weyl, const PointTensor<S>& ginv,
                                      const PointTensor<S>& g);

inline constexpr double kDefaultRankTol = 1e-9;

/// Singular values above tol * max(σ_max, floor). A positive floor guards a
/// numerically vanishing matrix against being reported as full rank.
int rank(const Matrix& m, double tol = kDefaultRankTol, double floor = 0.0);
int rank(const EndoMatrix& m, double tol = kDefaultRankTol, double floor = 0.0);

class SingularEndomorphism : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Matrix inverse(const Matrix& m, double tol = kDefaultRankTol, double floor = 0.0);
EndoMatrix inverse(const EndoMatrix& m, double tol = kDefaultRankTol, double floor = 0.0);

/// Moore-Penrose pseudoinverse by SVD with threshold tol * max(σ_max, floor).
Matrix pseudoinverse(const Matrix& m, double tol = kDefaultRankTol, double floor = 0.0);
EndoMatrix pseudoinverse(const EndoMatrix& m, double tol = kDefaultRankTol, double floor = 0.0);

/// Directional derivative of the inverse: d(A⁻¹) = -A⁻¹ dA A⁻¹.
Matrix inverseDerivative(const Matrix& ainv, const Matrix& da);
/// Directional derivative of the pseudoinverse on a constant-rank family.
Matrix pseudoinverseDerivative(const Matrix& a, const Matrix& aplus, const Matrix& da);

/// Tensor X^{ab}_{cd} (slots Up, Up, Down, Down) whose soldered matrix is m.
PointTensor<double> backSolder(const Matrix& m, const SolderingBasis& basis);
PointTensor<double> backSolder(const EndoMatrix& m);

/// Back-solders a matrix together with its coordinate derivatives.
PointTensor<Jet> backSolder(const Matrix& m, const std::vector<Matrix>& dm, const SolderingBasis& basis);

struct SolveResult {
  bool solvable = false;
  Vector x;
  double residual = 0;  // ‖AA⁺B − B‖
};

/// Solves A X = B through the pseudoinverse: X = A⁺B + (I − A⁺A)w.
SolveResult solveGeneral(const Matrix& a, const Vector& b, const Vector& w, double tol = kDefaultRankTol);

/// Max |entry| of the four Penrose residuals, relative to max(1, ‖A‖, ‖A⁺‖).
double penroseResidual(const Matrix& a, const Matrix& aplus);

}  // namespace confcheck
