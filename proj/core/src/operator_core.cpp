#include "nqs/operator_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

namespace nqs {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::faithfulness: return "faithfulness";
    case ErrorKind::non_primitive: return "non_primitive";
    case ErrorKind::invalid_generator: return "invalid_generator";
    case ErrorKind::invalid_perturbation: return "invalid_perturbation";
    case ErrorKind::domain: return "domain";
    case ErrorKind::evaluation: return "evaluation";
    case ErrorKind::support: return "support";
    case ErrorKind::field: return "field";
    case ErrorKind::degenerate_spec: return "degenerate_spec";
    case ErrorKind::non_convergence: return "non_convergence";
    case ErrorKind::loop: return "loop";
    case ErrorKind::degenerate_cartan: return "degenerate_cartan";
    case ErrorKind::unsupported_divergence: return "unsupported_divergence";
    case ErrorKind::validation: return "validation";
  }
  return "unknown";
}

namespace {

void require_square(const CMatrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw Error(ErrorKind::dimension, std::string(what) + ": expected a non-empty square matrix, got " +
                                          std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
}

void require_finite(const CMatrix& a, const char* what) {
  if (!a.allFinite()) throw Error(ErrorKind::domain, std::string(what) + ": non-finite entries");
}

double max_abs(const CMatrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

}  // namespace

// ---------------------------------------------------------------------------
// HermitianOperator / DensityOperator

HermitianOperator::HermitianOperator(CMatrix entries, double tol) : entries_(std::move(entries)) {
  require_square(entries_, "HermitianOperator");
  require_finite(entries_, "HermitianOperator");
  const double defect = max_abs(entries_ - entries_.adjoint());
  if (defect > tol) {
    throw Error(ErrorKind::validation,
                "HermitianOperator: matrix is not self-adjoint (defect " + std::to_string(defect) + ")");
  }
}

HermitianOperator HermitianOperator::hermitized(const CMatrix& m) {
  require_square(m, "HermitianOperator");
  require_finite(m, "HermitianOperator");
  return HermitianOperator(hermitian_part(m), Unchecked{});
}

DensityOperator::DensityOperator(CMatrix entries, double tol) : entries_(std::move(entries)) {
  require_square(entries_, "DensityOperator");
  require_finite(entries_, "DensityOperator");
  const double defect = max_abs(entries_ - entries_.adjoint());
  if (defect > tol) {
    throw Error(ErrorKind::validation,
                "DensityOperator: matrix is not self-adjoint (defect " + std::to_string(defect) + ")");
  }
  const double trace = entries_.trace().real();
  if (std::abs(trace - 1.0) > tol) {
    throw Error(ErrorKind::validation, "DensityOperator: trace " + std::to_string(trace) + " != 1");
  }
  const double lo = min_eigenvalue();
  if (lo < -tol) {
    throw Error(ErrorKind::validation,
                "DensityOperator: negative eigenvalue " + std::to_string(lo));
  }
}

DensityOperator DensityOperator::maximally_mixed(Index dim) {
  if (dim <= 0) throw Error(ErrorKind::dimension, "maximally_mixed: dimension must be positive");
  return DensityOperator(CMatrix::Identity(dim, dim) / static_cast<double>(dim));
}

RVector DensityOperator::eigenvalues() const { return hermitian_eigenvalues(entries_); }

double DensityOperator::min_eigenvalue() const { return eigenvalues()(0); }

// ---------------------------------------------------------------------------
// Superoperator

Superoperator::Superoperator(Index dim, CMatrix matrix, MapKind kind, double tol)
    : dim_(dim), matrix_(std::move(matrix)), kind_(kind) {
  if (dim_ <= 0 || matrix_.rows() != dim_ * dim_ || matrix_.cols() != dim_ * dim_) {
    throw Error(ErrorKind::dimension, "Superoperator: expected a " + std::to_string(dim_ * dim_) + "x" +
                                          std::to_string(dim_ * dim_) + " matrix for d = " +
                                          std::to_string(dim_));
  }
  require_finite(matrix_, "Superoperator");
  if (kind_ == MapKind::general) return;

  const double scale = std::max(1.0, max_abs(matrix_));
  if (hermiticity_defect(matrix_, dim_) > tol * scale) {
    throw Error(ErrorKind::invalid_generator, "Superoperator: map does not preserve hermiticity");
  }
  if (kind_ == MapKind::generator && trace_annihilation_defect(matrix_, dim_) > tol * scale) {
    throw Error(ErrorKind::invalid_generator, "Superoperator: generator does not annihilate the trace");
  }
  if (kind_ == MapKind::channel && trace_preservation_defect(matrix_, dim_) > tol * scale) {
    throw Error(ErrorKind::invalid_generator, "Superoperator: channel does not preserve the trace");
  }
}

Superoperator Superoperator::zero(Index dim, MapKind kind) {
  return Superoperator(dim, CMatrix::Zero(dim * dim, dim * dim), kind);
}

Superoperator Superoperator::identity(Index dim) {
  return Superoperator(dim, CMatrix::Identity(dim * dim, dim * dim), MapKind::channel);
}

Superoperator Superoperator::sandwich(const CMatrix& a, const CMatrix& b) {
  require_square(a, "sandwich");
  require_square(b, "sandwich");
  if (a.rows() != b.rows()) throw Error(ErrorKind::dimension, "sandwich: operand dimensions differ");
  return Superoperator(a.rows(), kron(b.transpose(), a));
}

Superoperator Superoperator::unitary_conjugation(const CMatrix& u) {
  require_square(u, "unitary_conjugation");
  return Superoperator(u.rows(), kron(u.conjugate(), u), MapKind::channel);
}

CMatrix Superoperator::apply(const CMatrix& x) const {
  if (x.rows() != dim_ || x.cols() != dim_) {
    throw Error(ErrorKind::dimension, "Superoperator::apply: operand has wrong dimension");
  }
  return devectorize(matrix_ * vectorize(x), dim_);
}

Superoperator Superoperator::adjoint() const { return Superoperator(dim_, matrix_.adjoint()); }

Superoperator Superoperator::operator+(const Superoperator& other) const {
  if (other.dim_ != dim_) throw Error(ErrorKind::dimension, "Superoperator: dimension mismatch in sum");
  return Superoperator(dim_, matrix_ + other.matrix_);
}

Superoperator Superoperator::operator-(const Superoperator& other) const {
  if (other.dim_ != dim_) throw Error(ErrorKind::dimension, "Superoperator: dimension mismatch in difference");
  return Superoperator(dim_, matrix_ - other.matrix_);
}

Superoperator Superoperator::scaled(double factor) const {
  return Superoperator(dim_, matrix_ * factor);
}

// ---------------------------------------------------------------------------
// Free functions

CVector vectorize(const CMatrix& x) {
  return Eigen::Map<const CVector>(x.data(), x.size());
}

CMatrix devectorize(const CVector& v, Index dim) {
  if (dim <= 0 || v.size() != dim * dim) {
    throw Error(ErrorKind::dimension, "devectorize: vector length is not d^2");
  }
  return Eigen::Map<const CMatrix>(v.data(), dim, dim);
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

CMatrix hermitian_part(const CMatrix& x) { return 0.5 * (x + x.adjoint()); }

CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }

CMatrix anticommutator(const CMatrix& a, const CMatrix& b) { return a * b + b * a; }

double trace_norm(const CMatrix& a) {
  require_square(a, "trace_norm");
  Eigen::JacobiSVD<CMatrix> svd(a);
  return svd.singularValues().sum();
}

double operator_norm(const CMatrix& a) {
  require_square(a, "operator_norm");
  Eigen::JacobiSVD<CMatrix> svd(a);
  return svd.singularValues()(0);
}

CMatrix matrix_exponential(const CMatrix& a, double t) {
  require_square(a, "matrix_exponential");
  require_finite(a, "matrix_exponential");
  if (!std::isfinite(t)) throw Error(ErrorKind::domain, "matrix_exponential: non-finite time");
  const CMatrix scaled = t * a;
  return scaled.exp();
}

RVector hermitian_eigenvalues(const CMatrix& x) {
  require_square(x, "hermitian_eigenvalues");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(x), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double relative_entropy(const DensityOperator& rho, const DensityOperator& sigma, double faithfulness) {
  if (rho.dim() != sigma.dim()) throw Error(ErrorKind::dimension, "relative_entropy: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<CMatrix> es_rho(rho.matrix());
  Eigen::SelfAdjointEigenSolver<CMatrix> es_sigma(sigma.matrix());
  const RVector& p = es_rho.eigenvalues();
  const RVector& s = es_sigma.eigenvalues();
  if (s(0) <= faithfulness) {
    throw Error(ErrorKind::faithfulness,
                "relative_entropy: reference state is not faithful (min eigenvalue " + std::to_string(s(0)) + ")");
  }
  // |<u_i|v_j>|^2 couples the two eigenbases.
  const RMatrix overlap = (es_rho.eigenvectors().adjoint() * es_sigma.eigenvectors()).cwiseAbs2();
  const RVector log_s = s.array().log().matrix();
  double value = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    if (p(i) <= 0.0) continue;
    value += p(i) * (std::log(p(i)) - overlap.row(i).dot(log_s));
  }
  return value;
}

CMatrix random_complex_gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix g(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = Complex(re, im);
    }
  }
  return g;
}

DensityOperator random_density(Index dim, std::uint64_t seed) {
  if (dim <= 0) throw Error(ErrorKind::dimension, "random_density: dimension must be positive");
  std::mt19937_64 rng(seed);
  const CMatrix g = random_complex_gaussian(dim, dim, rng);
  CMatrix w = g * g.adjoint();
  w /= w.trace().real();
  const double delta = kRandomDensityRegularization;
  w += delta * CMatrix::Identity(dim, dim);
  w /= 1.0 + static_cast<double>(dim) * delta;
  return DensityOperator(hermitian_part(w));
}

CMatrix choi_matrix(const Superoperator& s) {
  const Index d = s.dim();
  const CMatrix& m = s.matrix();
  CMatrix j(d * d, d * d);
  // J(i*d + k, j*d + l) = S(E_ij)(k, l) = m(k + l*d, i + j*d)
  for (Index i = 0; i < d; ++i)
    for (Index jj = 0; jj < d; ++jj)
      for (Index k = 0; k < d; ++k)
        for (Index l = 0; l < d; ++l) j(i * d + k, jj * d + l) = m(k + l * d, i + jj * d);
  return j;
}

double hermiticity_defect(const CMatrix& s, Index dim) {
  // Hermiticity preservation: S P = P conj(S), where P is the vec-transpose
  // permutation perm(i + j*d) = j + i*d.
  const auto perm = [dim](Index a) { return (a % dim) * dim + a / dim; };
  double defect = 0.0;
  for (Index b = 0; b < s.cols(); ++b)
    for (Index a = 0; a < s.rows(); ++a)
      defect = std::max(defect, std::abs(s(a, perm(b)) - std::conj(s(perm(a), b))));
  return defect;
}

double trace_annihilation_defect(const CMatrix& s, Index dim) {
  double defect = 0.0;
  for (Index c = 0; c < s.cols(); ++c) {
    Complex t = 0.0;
    for (Index i = 0; i < dim; ++i) t += s(i * dim + i, c);
    defect = std::max(defect, std::abs(t));
  }
  return defect;
}

double trace_preservation_defect(const CMatrix& s, Index dim) {
  double defect = 0.0;
  for (Index c = 0; c < s.cols(); ++c) {
    Complex t = 0.0;
    for (Index i = 0; i < dim; ++i) t += s(i * dim + i, c);
    const double expected = (c % dim == c / dim) ? 1.0 : 0.0;
    defect = std::max(defect, std::abs(t - expected));
  }
  return defect;
}

bool is_completely_positive(const Superoperator& s, double tol) {
  const CMatrix j = choi_matrix(s);
  if (max_abs(j - j.adjoint()) > tol * std::max(1.0, max_abs(j))) return false;
  return hermitian_eigenvalues(j)(0) >= -tol * std::max(1.0, max_abs(j));
}

}  // namespace nqs
