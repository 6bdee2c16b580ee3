#pragma once

// Reference computations that deliberately avoid the library code paths
// they check: eigendecompositions instead of Pade, explicit Kraus-style
// sums instead of superoperator matrices, brute-force minimization
// instead of linear solves.

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace oracle {

using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Complex = std::complex<double>;

/// Sum of square roots of the eigenvalues of A^dagger A.
inline double trace_norm(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a.adjoint() * a, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) s += std::sqrt(std::max(0.0, es.eigenvalues()(i)));
  return s;
}

/// V exp(t Lambda) V^{-1}; fine for the diagonalizable matrices used in tests.
inline CMatrix expm(const CMatrix& a, double t) {
  Eigen::ComplexEigenSolver<CMatrix> es(a);
  const CMatrix v = es.eigenvectors();
  CMatrix d = CMatrix::Zero(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) d(i, i) = std::exp(t * es.eigenvalues()(i));
  return v * d * v.inverse();
}

/// Classical Kullback-Leibler divergence with 0 log 0 = 0.
inline double kl(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) s += p[i] * std::log(p[i] / q[i]);
  }
  return s;
}

/// -i[H, rho] + sum_k (L rho L^dagger - {L^dagger L, rho}/2), evaluated on matrices.
inline CMatrix lindblad(const CMatrix& h, const std::vector<CMatrix>& jumps, const CMatrix& rho) {
  const Complex i(0.0, 1.0);
  CMatrix out = -i * (h * rho - rho * h);
  for (const auto& l : jumps) {
    const CMatrix ll = l.adjoint() * l;
    out += l * rho * l.adjoint() - 0.5 * (ll * rho + rho * ll);
  }
  return out;
}

/// Matrix of an arbitrary linear map on d x d matrices, built column by
/// column from its action on matrix units (column-stacking).
inline CMatrix superop_of(const std::function<CMatrix(const CMatrix&)>& map, Eigen::Index d) {
  CMatrix s(d * d, d * d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      CMatrix e = CMatrix::Zero(d, d);
      e(i, j) = 1.0;
      const CMatrix img = map(e);
      for (Eigen::Index c = 0; c < d; ++c)
        for (Eigen::Index r = 0; r < d; ++r) s(r + c * d, i + j * d) = img(r, c);
    }
  }
  return s;
}

/// Choi matrix sum_ij |i><j| (x) Phi(|i><j|) from the map's action.
inline CMatrix choi(const std::function<CMatrix(const CMatrix&)>& map, Eigen::Index d) {
  CMatrix j = CMatrix::Zero(d * d, d * d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      CMatrix e = CMatrix::Zero(d, d);
      e(a, b) = 1.0;
      j.block(a * d, b * d, d, d) = map(e);
    }
  }
  return j;
}

/// Largest eps with J - eps (I (x) sigma) >= 0, from the generalized
/// Hermitian eigenproblem J v = mu (I (x) sigma) v.
inline double choi_minorization(const CMatrix& j, const CMatrix& sigma) {
  const Eigen::Index d = sigma.rows();
  CMatrix b = CMatrix::Zero(d * d, d * d);
  for (Eigen::Index a = 0; a < d; ++a) b.block(a * d, a * d, d, d) = sigma;
  Eigen::GeneralizedSelfAdjointEigenSolver<CMatrix> es(0.5 * (j + j.adjoint()), 0.5 * (b + b.adjoint()),
                                                      Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// Plain gradient descent on a smooth function, fixed step.
inline RVector gradient_descent(const std::function<RVector(const RVector&)>& grad, RVector x, double step,
                                int iters) {
  for (int k = 0; k < iters; ++k) x -= step * grad(x);
  return x;
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracle
