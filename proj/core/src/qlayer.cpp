#include "nqs/qlayer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace nqs {

namespace {

constexpr double kKernelRelativeThreshold = 1e-9;
// Kernel elements with eigenvalues this negative are rejected; smaller
// negative excursions are numerical and get projected out.
constexpr double kPositivitySlack = 1e-9;

void require_positive_rate(double rate, const char* what) {
  if (!std::isfinite(rate) || rate <= 0.0) {
    throw Error(ErrorKind::domain, std::string(what) + ": rate must be positive and finite");
  }
}

void require_generator_shape(const Superoperator& l) {
  const double scale = std::max(1.0, l.matrix().cwiseAbs().maxCoeff());
  if (trace_annihilation_defect(l.matrix(), l.dim()) > Tolerances{}.equality * scale) {
    throw Error(ErrorKind::invalid_generator, "generator does not annihilate the trace");
  }
}

std::vector<Complex> spectrum(const CMatrix& m) {
  Eigen::ComplexEigenSolver<CMatrix> es(m, false);
  const CVector& ev = es.eigenvalues();
  std::vector<Complex> out(ev.data(), ev.data() + ev.size());
  std::stable_sort(out.begin(), out.end(), [](Complex a, Complex b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return out;
}

Index kernel_dimension(const Superoperator& l) {
  const double norm = operator_norm(l.matrix());
  const double threshold = kKernelRelativeThreshold * norm;
  Index count = 0;
  for (Complex z : spectrum(l.matrix())) {
    if (std::abs(z) <= threshold) ++count;
  }
  return count;
}

/// Solves [L; Tr] x = [0; 1] in the least-squares sense; exact when the
/// kernel is one-dimensional.
CMatrix trace_one_kernel_element(const Superoperator& l) {
  const Index d = l.dim();
  const Index n = d * d;
  CMatrix a(n + 1, n);
  a.topRows(n) = l.matrix();
  a.row(n).setZero();
  for (Index i = 0; i < d; ++i) a(n, i * d + i) = 1.0;
  CVector b = CVector::Zero(n + 1);
  b(n) = 1.0;
  const CVector x = a.colPivHouseholderQr().solve(b);
  return devectorize(x, d);
}

DensityOperator normalized_state(const CMatrix& kernel) {
  CMatrix rho = hermitian_part(kernel);
  const double trace = rho.trace().real();
  if (!std::isfinite(trace) || std::abs(trace) < 1e-14) {
    throw Error(ErrorKind::invalid_generator, "stationary kernel element has vanishing trace");
  }
  rho /= trace;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho);
  RVector ev = es.eigenvalues();
  if (ev(0) < -kPositivitySlack) {
    throw Error(ErrorKind::invalid_generator,
                "stationary kernel element is not positive (min eigenvalue " + std::to_string(ev(0)) + ")");
  }
  if (ev(0) < 0.0) {
    ev = ev.cwiseMax(0.0);
    ev /= ev.sum();
    rho = es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
    rho = hermitian_part(rho);
  }
  return DensityOperator(rho, std::max(Tolerances{}.construction, 1e-11));
}

/// Stationary state together with the primitivity verdict; shared by all
/// operations that need a primitive generator.
DensityOperator primitive_stationary(const Superoperator& l, double faithfulness = Tolerances{}.faithfulness) {
  const PrimitivityReport report = primitivity_report(l, faithfulness);
  if (report.stationary_kernel_dim != 1) {
    throw Error(ErrorKind::non_primitive, "stationary state is not unique (kernel dimension " +
                                              std::to_string(report.stationary_kernel_dim) + ")");
  }
  if (!report.primitive) {
    throw Error(ErrorKind::non_primitive, "stationary state is not faithful");
  }
  return stationary_state(l);
}

CMatrix restricted_generator(const Superoperator& l, const CMatrix& basis) {
  return basis.adjoint() * l.matrix() * basis;
}

double gap_from_restriction(const CMatrix& restricted) {
  double slowest = -std::numeric_limits<double>::infinity();
  for (Complex z : spectrum(restricted)) slowest = std::max(slowest, z.real());
  return -slowest;
}

double doeblin_epsilon_for(const Superoperator& l, const DensityOperator& stationary, double t0) {
  const Index d = l.dim();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(stationary.matrix());
  if (es.eigenvalues()(0) <= Tolerances{}.faithfulness) {
    throw Error(ErrorKind::non_primitive, "doeblin_epsilon: stationary state is not faithful");
  }
  const CMatrix inv_sqrt = es.eigenvectors() *
                           es.eigenvalues().cwiseSqrt().cwiseInverse().cast<Complex>().asDiagonal() *
                           es.eigenvectors().adjoint();
  const Superoperator flow(d, matrix_exponential(l.matrix(), t0));
  const CMatrix choi = choi_matrix(flow);
  const CMatrix w = kron(CMatrix::Identity(d, d), inv_sqrt);
  const double eps = hermitian_eigenvalues(w * choi * w)(0);
  return std::clamp(eps, 0.0, 1.0);
}

void require_valid_perturbation(const Superoperator& l, const Superoperator& dl) {
  if (dl.dim() != l.dim()) throw Error(ErrorKind::dimension, "perturbation dimension differs from generator");
  const double scale = std::max(1.0, dl.matrix().cwiseAbs().maxCoeff());
  if (trace_annihilation_defect(dl.matrix(), dl.dim()) > Tolerances{}.equality * scale) {
    throw Error(ErrorKind::invalid_perturbation, "perturbation does not annihilate the trace");
  }
  if (hermiticity_defect(dl.matrix(), dl.dim()) > Tolerances{}.equality * scale) {
    throw Error(ErrorKind::invalid_perturbation, "perturbation does not preserve hermiticity");
  }
}

CMatrix poisson_solution(const Superoperator& l, const Superoperator& dl, const DensityOperator& stationary) {
  const CMatrix basis = traceless_basis(l.dim());
  const CVector rhs = -(dl.matrix() * vectorize(stationary.matrix()));
  const CMatrix restricted = restricted_generator(l, basis);
  const CVector y = restricted.partialPivLu().solve(basis.adjoint() * rhs);
  return hermitian_part(devectorize(basis * y, l.dim()));
}

}  // namespace

// ---------------------------------------------------------------------------

GklsGenerator::GklsGenerator(Form form) : form_(std::move(form)), dim_(0) {
  struct Validate {
    Index operator()(const HamiltonianLindblad& f) const {
      const Index d = f.hamiltonian.dim();
      for (const CMatrix& jump : f.jumps) {
        if (jump.rows() != d || jump.cols() != d) {
          throw Error(ErrorKind::dimension, "GklsGenerator: jump operator dimension differs from Hamiltonian");
        }
        if (!jump.allFinite()) throw Error(ErrorKind::domain, "GklsGenerator: non-finite jump operator");
      }
      return d;
    }
    Index operator()(const ResetForm& f) const {
      require_positive_rate(f.rate, "GklsGenerator reset form");
      return f.target.dim();
    }
    Index operator()(const ChannelMinusIdentity& f) const {
      require_positive_rate(f.rate, "GklsGenerator channel form");
      if (f.channel.kind() != MapKind::channel || !is_completely_positive(f.channel)) {
        throw Error(ErrorKind::invalid_generator, "GklsGenerator: channel form requires a CPTP map");
      }
      return f.channel.dim();
    }
  };
  dim_ = std::visit(Validate{}, form_);
}

Superoperator build_superoperator(const GklsGenerator& gen) {
  const Index d = gen.dim();
  const CMatrix id = CMatrix::Identity(d, d);
  struct Build {
    Index d;
    const CMatrix& id;
    CMatrix operator()(const HamiltonianLindblad& f) const {
      const CMatrix& h = f.hamiltonian.matrix();
      CMatrix m = Complex(0.0, -1.0) * (kron(id, h) - kron(h.transpose(), id));
      for (const CMatrix& jump : f.jumps) {
        const CMatrix jj = jump.adjoint() * jump;
        m += kron(jump.conjugate(), jump) - 0.5 * kron(id, jj) - 0.5 * kron(jj.transpose(), id);
      }
      return m;
    }
    CMatrix operator()(const ResetForm& f) const {
      const CVector target = vectorize(f.target.matrix());
      const CVector trace_row = vectorize(id);
      return f.rate * (target * trace_row.transpose() - CMatrix::Identity(d * d, d * d));
    }
    CMatrix operator()(const ChannelMinusIdentity& f) const {
      return f.rate * (f.channel.matrix() - CMatrix::Identity(d * d, d * d));
    }
  };
  return Superoperator(d, std::visit(Build{d, id}, gen.form()), MapKind::generator);
}

DensityOperator stationary_state(const Superoperator& generator) {
  require_generator_shape(generator);
  const Index kernel = kernel_dimension(generator);
  if (kernel != 1) {
    throw Error(ErrorKind::non_primitive,
                "stationary state is not unique (kernel dimension " + std::to_string(kernel) + ")");
  }
  return normalized_state(trace_one_kernel_element(generator));
}

PrimitivityReport primitivity_report(const Superoperator& generator, double faithfulness) {
  PrimitivityReport report;
  report.stationary_kernel_dim = kernel_dimension(generator);
  if (report.stationary_kernel_dim != 1) return report;
  try {
    const DensityOperator rho = normalized_state(trace_one_kernel_element(generator));
    report.min_eig_of_stationary = rho.min_eigenvalue();
    report.primitive = *report.min_eig_of_stationary > faithfulness;
  } catch (const Error&) {
    report.primitive = false;
  }
  return report;
}

double spectral_gap(const Superoperator& generator) {
  primitive_stationary(generator);
  const double gap = gap_from_restriction(restricted_generator(generator, traceless_basis(generator.dim())));
  if (!(gap > 0.0)) throw Error(ErrorKind::non_primitive, "spectral gap is not positive");
  return gap;
}

double doeblin_epsilon(const Superoperator& generator, double t0) {
  if (!std::isfinite(t0) || t0 <= 0.0) throw Error(ErrorKind::domain, "doeblin_epsilon: t0 must be positive");
  return doeblin_epsilon_for(generator, primitive_stationary(generator), t0);
}

double doeblin_gap(double epsilon, double t0) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorKind::domain, "doeblin_gap: epsilon must lie in (0, 1)");
  if (!std::isfinite(t0) || t0 <= 0.0) throw Error(ErrorKind::domain, "doeblin_gap: t0 must be positive");
  return -std::log1p(-epsilon) / t0;
}

DensityOperator evolve_state(const Superoperator& generator, const DensityOperator& rho, double t) {
  if (!std::isfinite(t) || t < 0.0) throw Error(ErrorKind::domain, "evolve_state: time must be non-negative");
  if (rho.dim() != generator.dim()) throw Error(ErrorKind::dimension, "evolve_state: dimension mismatch");
  if (t == 0.0) return rho;
  const CVector out = matrix_exponential(generator.matrix(), t) * vectorize(rho.matrix());
  return DensityOperator(hermitian_part(devectorize(out, rho.dim())), 1e-9);
}

CMatrix solve_poisson(const Superoperator& generator, const Superoperator& perturbation) {
  require_valid_perturbation(generator, perturbation);
  const DensityOperator stationary = primitive_stationary(generator);
  return poisson_solution(generator, perturbation, stationary);
}

SensitivityReport sensitivity_report(const Superoperator& generator, const Superoperator& perturbation,
                                     std::optional<double> t0) {
  require_valid_perturbation(generator, perturbation);
  const DensityOperator stationary = primitive_stationary(generator);
  SensitivityReport r;
  r.gap = gap_from_restriction(restricted_generator(generator, traceless_basis(generator.dim())));
  if (!(r.gap > 0.0)) throw Error(ErrorKind::non_primitive, "spectral gap is not positive");
  r.doeblin_time = t0.value_or(1.0 / r.gap);
  if (!std::isfinite(r.doeblin_time) || r.doeblin_time <= 0.0) {
    throw Error(ErrorKind::domain, "sensitivity_report: t0 must be positive");
  }
  r.doeblin_epsilon = doeblin_epsilon_for(generator, stationary, r.doeblin_time);
  r.drho = poisson_solution(generator, perturbation, stationary);
  r.lhs = trace_norm(r.drho);
  r.perturbation_norm = trace_norm(perturbation.apply(stationary.matrix()));
  r.rhs_nominal = r.perturbation_norm / r.gap;
  r.rhs_certified = r.doeblin_epsilon > 0.0 ? r.perturbation_norm * r.doeblin_time / r.doeblin_epsilon
                                            : std::numeric_limits<double>::infinity();
  const auto within = [](double lhs, double rhs) { return lhs <= rhs * (1.0 + 1e-9) + 1e-14; };
  r.nominal_satisfied = within(r.lhs, r.rhs_nominal);
  r.certified_satisfied = within(r.lhs, r.rhs_certified);
  return r;
}

QContextReport analyze_context(const Superoperator& generator, std::optional<double> t0) {
  const DensityOperator stationary = primitive_stationary(generator);
  const double gap = gap_from_restriction(restricted_generator(generator, traceless_basis(generator.dim())));
  if (!(gap > 0.0)) throw Error(ErrorKind::non_primitive, "spectral gap is not positive");
  const double time = t0.value_or(1.0 / gap);
  if (!std::isfinite(time) || time <= 0.0) throw Error(ErrorKind::domain, "analyze_context: t0 must be positive");
  const double eps = doeblin_epsilon_for(generator, stationary, time);
  return QContextReport{
      .stationary = stationary,
      .gap = gap,
      .doeblin_epsilon = eps,
      .doeblin_time = time,
      .primitive = true,
      .certified_sensitivity_factor = eps > 0.0 ? time / eps : std::numeric_limits<double>::infinity(),
      .eigenvalues = spectrum(generator.matrix()),
  };
}

CMatrix traceless_basis(Index dim) {
  if (dim <= 0) throw Error(ErrorKind::dimension, "traceless_basis: dimension must be positive");
  const Index n = dim * dim;
  CMatrix basis = CMatrix::Zero(n, n - 1);
  Index col = 0;
  for (Index j = 0; j < dim; ++j) {
    for (Index i = 0; i < dim; ++i) {
      if (i != j) basis(i + j * dim, col++) = 1.0;
    }
  }
  // Diagonal part: (sum_{k<l} E_kk - l E_ll) / sqrt(l (l + 1)).
  for (Index l = 1; l < dim; ++l) {
    const double norm = std::sqrt(static_cast<double>(l * (l + 1)));
    for (Index k = 0; k < l; ++k) basis(k + k * dim, col) = 1.0 / norm;
    basis(l + l * dim, col) = -static_cast<double>(l) / norm;
    ++col;
  }
  return basis;
}

std::vector<Complex> generator_spectrum(const Superoperator& generator) { return spectrum(generator.matrix()); }

GklsGenerator random_gkls(Index dim, std::uint64_t seed, Index num_jumps) {
  if (dim <= 0) throw Error(ErrorKind::dimension, "random_gkls: dimension must be positive");
  if (num_jumps < 0) throw Error(ErrorKind::domain, "random_gkls: negative jump count");
  std::mt19937_64 rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  const CMatrix g = random_complex_gaussian(dim, dim, rng);
  HamiltonianLindblad form{HermitianOperator::hermitized(0.5 * scale * g), {}};
  for (Index k = 0; k < num_jumps; ++k) form.jumps.push_back(scale * random_complex_gaussian(dim, dim, rng));
  return GklsGenerator(std::move(form));
}

}  // namespace nqs
