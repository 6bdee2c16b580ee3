#pragma once

// Dense linear algebra on d x d operator algebras.
//
// Superoperators act on column-stacked vectorized operators: vec(X) places
// entry X(i, j) at index i + j*d, so the map X -> A X B has the matrix
// kron(B^T, A). Every superoperator matrix in the library depends on this
// convention. Logarithms are natural throughout.

#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "nqs/error.hpp"

namespace nqs {

using Index = Eigen::Index;
using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

struct Tolerances {
  double construction = 1e-12;
  double equality = 1e-10;
  double faithfulness = 1e-10;
};

/// Self-adjoint d x d matrix. Construction rejects matrices that are not
/// Hermitian within `tol` (max-entry deviation).
class HermitianOperator {
public:
  explicit HermitianOperator(CMatrix entries, double tol = Tolerances{}.construction);

  /// Takes (M + M^dagger)/2 without validation.
  static HermitianOperator hermitized(const CMatrix& m);

  Index dim() const noexcept { return entries_.rows(); }
  const CMatrix& matrix() const noexcept { return entries_; }

private:
  struct Unchecked {};
  HermitianOperator(CMatrix entries, Unchecked) : entries_(std::move(entries)) {}

  CMatrix entries_;
};

/// Hermitian, unit-trace, positive semidefinite matrix.
class DensityOperator {
public:
  explicit DensityOperator(CMatrix entries, double tol = Tolerances{}.construction);

  static DensityOperator maximally_mixed(Index dim);

  Index dim() const noexcept { return entries_.rows(); }
  const CMatrix& matrix() const noexcept { return entries_; }

  /// Ascending eigenvalues.
  RVector eigenvalues() const;
  double min_eigenvalue() const;

private:
  CMatrix entries_;
};

enum class MapKind {
  general,    // no structural promise
  generator,  // trace-annihilating, hermiticity-preserving
  channel,    // trace-preserving, hermiticity-preserving
};

/// Linear map on d x d matrices stored as its d^2 x d^2 matrix.
class Superoperator {
public:
  /// Validates the shape and, for flagged kinds, hermiticity preservation
  /// and the trace condition within `tol` (scaled by the largest entry).
  Superoperator(Index dim, CMatrix matrix, MapKind kind = MapKind::general,
                double tol = Tolerances{}.equality);

  static Superoperator zero(Index dim, MapKind kind = MapKind::generator);
  static Superoperator identity(Index dim);
  /// X -> A X B.
  static Superoperator sandwich(const CMatrix& a, const CMatrix& b);
  /// X -> U X U^dagger, flagged as a channel.
  static Superoperator unitary_conjugation(const CMatrix& u);

  Index dim() const noexcept { return dim_; }
  const CMatrix& matrix() const noexcept { return matrix_; }
  MapKind kind() const noexcept { return kind_; }

  CMatrix apply(const CMatrix& x) const;
  /// Hilbert-Schmidt adjoint, i.e. the Heisenberg picture of this map.
  Superoperator adjoint() const;

  Superoperator operator+(const Superoperator& other) const;
  Superoperator operator-(const Superoperator& other) const;
  Superoperator scaled(double factor) const;

private:
  Index dim_;
  CMatrix matrix_;
  MapKind kind_;
};

CVector vectorize(const CMatrix& x);
CMatrix devectorize(const CVector& v, Index dim);

CMatrix kron(const CMatrix& a, const CMatrix& b);
CMatrix hermitian_part(const CMatrix& x);
CMatrix commutator(const CMatrix& a, const CMatrix& b);
CMatrix anticommutator(const CMatrix& a, const CMatrix& b);

/// Sum of singular values. Throws ErrorKind::dimension for non-square input.
double trace_norm(const CMatrix& a);
/// Largest singular value.
double operator_norm(const CMatrix& a);

/// exp(t A) by scaling and squaring with Pade approximants.
CMatrix matrix_exponential(const CMatrix& a, double t = 1.0);

/// Ascending eigenvalues of the Hermitian part of `x`.
RVector hermitian_eigenvalues(const CMatrix& x);

/// D(rho || sigma) = Tr rho (log rho - log sigma) in nats, with 0 log 0 = 0.
/// Throws ErrorKind::faithfulness when sigma's smallest eigenvalue does not
/// exceed `faithfulness`.
double relative_entropy(const DensityOperator& rho, const DensityOperator& sigma,
                        double faithfulness = Tolerances{}.faithfulness);

/// Full-rank state from a seeded complex Gaussian G: W = G G^dagger / Tr,
/// then (W + delta I)/(1 + d delta) with delta = 1e-6, so every eigenvalue
/// is at least delta/(1 + d delta).
DensityOperator random_density(Index dim, std::uint64_t seed);
constexpr double kRandomDensityRegularization = 1e-6;

/// Matrix of i.i.d. standard complex Gaussians (real and imaginary parts
/// each N(0, 1)).
CMatrix random_complex_gaussian(Index rows, Index cols, std::mt19937_64& rng);

/// Choi matrix J = sum_ij E_ij (x) S(E_ij), first tensor factor outer.
CMatrix choi_matrix(const Superoperator& s);

/// max |S(X^dagger) - S(X)^dagger| over matrix units, unscaled.
double hermiticity_defect(const CMatrix& s, Index dim);
/// max_j |sum_i S(i*d+i, j)|: zero iff Tr S(X) = 0 for all X.
double trace_annihilation_defect(const CMatrix& s, Index dim);
/// max_j |sum_i S(i*d+i, j) - Tr E_j|: zero iff Tr S(X) = Tr X for all X.
double trace_preservation_defect(const CMatrix& s, Index dim);

bool is_completely_positive(const Superoperator& s, double tol = Tolerances{}.equality);

}  // namespace nqs
