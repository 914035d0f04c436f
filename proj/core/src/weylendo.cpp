#include "confcheck/weylendo.hpp"

#include <algorithm>
#include <cmath>

namespace confcheck {

SolderingBasis::SolderingBasis(int dim) : dim_(dim), lookup_(static_cast<std::size_t>(dim * dim), -1) {
  if (dim < 2 || dim > kMaxDim) throw std::invalid_argument("SolderingBasis: unsupported dimension");
  for (int a = 0; a < dim; ++a) {
    for (int b = a + 1; b < dim; ++b) {
      lookup_[static_cast<std::size_t>(a * dim + b)] = static_cast<int>(pairs_.size());
      lookup_[static_cast<std::size_t>(b * dim + a)] = static_cast<int>(pairs_.size());
      pairs_.emplace_back(a, b);
    }
  }
}

std::optional<std::pair<int, int>> SolderingBasis::index(int a, int b) const {
  if (a == b) return std::nullopt;
  return std::make_pair(lookup_[static_cast<std::size_t>(a * dim_ + b)], a < b ? 1 : -1);
}

double SolderingBasis::sigma(int A, int a, int b) const {
  auto ix = index(a, b);
  if (!ix || ix->first != A) return 0.0;
  return ix->second;
}

double SolderingBasis::sigmaTilde(int A, int a, int b) const { return 0.5 * sigma(A, a, b); }

// With antisymmetric pairs the soldering sums collapse to X_A^B = 2 X^{B}_{A}.
Matrix solder(const PointTensor<double>& t, const SolderingBasis& basis) {
  const int n = basis.size();
  Matrix m(n, n);
  for (int A = 0; A < n; ++A) {
    const auto [c, d] = basis.pair(A);
    for (int B = 0; B < n; ++B) {
      const auto [a, b] = basis.pair(B);
      m(A, B) = t(a, b, c, d) - t(b, a, c, d) - t(a, b, d, c) + t(b, a, d, c);
      m(A, B) *= 0.5;
    }
  }
  return m;
}

std::vector<Matrix> solderGradient(const PointTensor<Jet>& t, const SolderingBasis& basis) {
  const int n = basis.size();
  std::vector<Matrix> out(static_cast<std::size_t>(basis.dim()), Matrix::Zero(n, n));
  for (int A = 0; A < n; ++A) {
    const auto [c, d] = basis.pair(A);
    for (int B = 0; B < n; ++B) {
      const auto [a, b] = basis.pair(B);
      const Jet v = (t(a, b, c, d) - t(b, a, c, d) - t(a, b, d, c) + t(b, a, d, c)) * 0.5;
      for (int k = 0; k < basis.dim(); ++k) out[static_cast<std::size_t>(k)](A, B) = v.d[k];
    }
  }
  return out;
}

EndoMatrix endoMatrix(const PointTensor<double>& c, const SolderingBasis& basis, ChartPoint p) {
  return EndoMatrix(solder(c, basis), std::move(p), basis);
}

EndoMatrix endoMatrix(const TensorField& c, const SolderingBasis& basis, ChartPoint p) {
  const PointTensor<double> v = evaluate(c, p);
  return endoMatrix(v, basis, std::move(p));
}

template <class S>
PointTensor<S> weylEndomorphismTensor(const PointTensor<S>& weyl, const PointTensor<S>& ginv,
                                      const PointTensor<S>& g) {
  const int n = weyl.dim();
  // X_{efcd} = C_{efc}^h g_{hd}
  PointTensor<S> x(n, {Slot::Down, Slot::Down, Slot::Down, Slot::Down});
  for (int e = 0; e < n; ++e)
    for (int f = e + 1; f < n; ++f)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          S s{};
          for (int h = 0; h < n; ++h) s += weyl(e, f, c, h) * g(h, d);
          x(e, f, c, d) = s;
          x(f, e, c, d) = -s;
        }
  // Y^a_{fcd} = g^{ae} X_{efcd}
  PointTensor<S> y(n, {Slot::Up, Slot::Down, Slot::Down, Slot::Down});
  for (int a = 0; a < n; ++a)
    for (int f = 0; f < n; ++f)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          S s{};
          for (int e = 0; e < n; ++e) s += ginv(a, e) * x(e, f, c, d);
          y(a, f, c, d) = s;
        }
  PointTensor<S> out(n, {Slot::Up, Slot::Up, Slot::Down, Slot::Down});
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          S s{};
          for (int f = 0; f < n; ++f) s += ginv(b, f) * y(a, f, c, d);
          out(a, b, c, d) = s;
        }
  return out;
}

template PointTensor<double> weylEndomorphismTensor(const PointTensor<double>&, const PointTensor<double>&,
                                                    const PointTensor<double>&);
template PointTensor<Jet> weylEndomorphismTensor(const PointTensor<Jet>&, const PointTensor<Jet>&,
                                                 const PointTensor<Jet>&);

namespace {

double threshold(const Eigen::VectorXd& sv, double tol, double floor) {
  const double smax = sv.size() > 0 ? sv.maxCoeff() : 0.0;
  return tol * std::max(smax, floor);
}

}  // namespace

int rank(const Matrix& m, double tol, double floor) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Eigen::VectorXd sv = svd.singularValues();
  const double cut = threshold(sv, tol, floor);
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > cut) ++r;
  return r;
}

int rank(const EndoMatrix& m, double tol, double floor) { return rank(m.m, tol, floor); }

Matrix inverse(const Matrix& m, double tol, double floor) {
  if (rank(m, tol, floor) != m.rows()) throw SingularEndomorphism("endomorphism is not invertible");
  return m.fullPivLu().inverse();
}

EndoMatrix inverse(const EndoMatrix& m, double tol, double floor) {
  return EndoMatrix(inverse(m.m, tol, floor), m.point, m.basis);
}

Matrix pseudoinverse(const Matrix& m, double tol, double floor) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  const double cut = threshold(sv, tol, floor);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > cut) inv[i] = 1.0 / sv[i];
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

EndoMatrix pseudoinverse(const EndoMatrix& m, double tol, double floor) {
  return EndoMatrix(pseudoinverse(m.m, tol, floor), m.point, m.basis);
}

Matrix inverseDerivative(const Matrix& ainv, const Matrix& da) { return -ainv * da * ainv; }

Matrix pseudoinverseDerivative(const Matrix& a, const Matrix& aplus, const Matrix& da) {
  const Matrix id = Matrix::Identity(a.rows(), a.cols());
  return -aplus * da * aplus + aplus * aplus.transpose() * da.transpose() * (id - a * aplus) +
         (id - aplus * a) * da.transpose() * aplus.transpose() * aplus;
}

PointTensor<double> backSolder(const Matrix& m, const SolderingBasis& basis) {
  const int n = basis.dim();
  PointTensor<double> out(n, {Slot::Up, Slot::Up, Slot::Down, Slot::Down}, 0.0);
  for (int A = 0; A < basis.size(); ++A) {
    const auto [c, d] = basis.pair(A);
    for (int B = 0; B < basis.size(); ++B) {
      const auto [a, b] = basis.pair(B);
      const double v = 0.5 * m(A, B);
      out(a, b, c, d) = v;
      out(b, a, c, d) = -v;
      out(a, b, d, c) = -v;
      out(b, a, d, c) = v;
    }
  }
  return out;
}

PointTensor<double> backSolder(const EndoMatrix& m) { return backSolder(m.m, m.basis); }

PointTensor<Jet> backSolder(const Matrix& m, const std::vector<Matrix>& dm, const SolderingBasis& basis) {
  const int n = basis.dim();
  PointTensor<Jet> out(n, {Slot::Up, Slot::Up, Slot::Down, Slot::Down});
  for (int A = 0; A < basis.size(); ++A) {
    const auto [c, d] = basis.pair(A);
    for (int B = 0; B < basis.size(); ++B) {
      const auto [a, b] = basis.pair(B);
      Jet v(0.5 * m(A, B));
      for (std::size_t k = 0; k < dm.size(); ++k) v.d[k] = 0.5 * dm[k](A, B);
      out(a, b, c, d) = v;
      out(b, a, c, d) = -v;
      out(a, b, d, c) = -v;
      out(b, a, d, c) = v;
    }
  }
  return out;
}

SolveResult solveGeneral(const Matrix& a, const Vector& b, const Vector& w, double tol) {
  if (a.rows() != b.size() || a.cols() != w.size()) throw std::invalid_argument("solveGeneral: dimension mismatch");
  const Matrix ap = pseudoinverse(a, tol);
  SolveResult r;
  r.residual = (a * (ap * b) - b).norm();
  r.solvable = r.residual <= 1e-9 * b.norm();
  if (r.solvable) {
    const Matrix id = Matrix::Identity(a.cols(), a.cols());
    r.x = ap * b + (id - ap * a) * w;
  }
  return r;
}

double penroseResidual(const Matrix& a, const Matrix& aplus) {
  const double scale = std::max({1.0, a.cwiseAbs().maxCoeff(), aplus.cwiseAbs().maxCoeff()});
  const Matrix aap = a * aplus, apa = aplus * a;
  double r = (aap * a - a).cwiseAbs().maxCoeff();
  r = std::max(r, (apa * aplus - aplus).cwiseAbs().maxCoeff());
  r = std::max(r, (aap.transpose() - aap).cwiseAbs().maxCoeff());
  r = std::max(r, (apa.transpose() - apa).cwiseAbs().maxCoeff());
  return r / scale;
}

}  // namespace confcheck
