#pragma once

// Q-layer analysis of a single context: GKLS generators, stationary states,
// primitivity, spectral gaps, Doeblin minorization constants and the
// stationary-state sensitivity (Poisson) equation.
//
// Everything works in the Schroedinger picture: a generator's matrix acts on
// vectorized states. The Heisenberg picture is Superoperator::adjoint().

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "nqs/operator_core.hpp"

namespace nqs {

/// L(rho) = -i[H, rho] + sum_k (L_k rho L_k^dagger - {L_k^dagger L_k, rho}/2)
struct HamiltonianLindblad {
  HermitianOperator hamiltonian;
  std::vector<CMatrix> jumps;
};

/// L(rho) = rate * (target Tr(rho) - rho)
struct ResetForm {
  double rate;
  DensityOperator target;
};

/// L = rate * (Psi - id) for a CPTP map Psi.
struct ChannelMinusIdentity {
  double rate;
  Superoperator channel;
};

class GklsGenerator {
public:
  using Form = std::variant<HamiltonianLindblad, ResetForm, ChannelMinusIdentity>;

  explicit GklsGenerator(Form form);

  Index dim() const noexcept { return dim_; }
  const Form& form() const noexcept { return form_; }

private:
  Form form_;
  Index dim_;
};

Superoperator build_superoperator(const GklsGenerator& gen);

struct PrimitivityReport {
  bool primitive = false;
  Index stationary_kernel_dim = 0;
  /// Present when the kernel is one-dimensional.
  std::optional<double> min_eig_of_stationary;
};

/// Trace-one kernel element of L. Throws ErrorKind::non_primitive when the
/// kernel is not one-dimensional and ErrorKind::invalid_generator when the
/// kernel element is not a normalizable positive operator.
DensityOperator stationary_state(const Superoperator& generator);

/// Never throws for degenerate generators; reports them instead.
PrimitivityReport primitivity_report(const Superoperator& generator,
                                     double faithfulness = Tolerances{}.faithfulness);

/// g = -max Re(lambda) over the spectrum of L restricted to traceless operators.
double spectral_gap(const Superoperator& generator);

/// Certified minorization constant at time t0 from the Choi condition
/// J(exp(t0 L)) >= eps * (I (x) rho_stat), clamped to [0, 1].
double doeblin_epsilon(const Superoperator& generator, double t0);

/// -ln(1 - eps)/t0: the contraction rate certified at multiples of t0.
double doeblin_gap(double epsilon, double t0);

DensityOperator evolve_state(const Superoperator& generator, const DensityOperator& rho, double t);

/// Unique traceless solution of L(drho) = -dL(rho_stat).
CMatrix solve_poisson(const Superoperator& generator, const Superoperator& perturbation);

struct SensitivityReport {
  double lhs = 0.0;            // ||drho||_1
  double rhs_nominal = 0.0;    // ||dL(rho_stat)||_1 / g
  double rhs_certified = 0.0;  // ||dL(rho_stat)||_1 * t0 / eps
  bool nominal_satisfied = false;
  bool certified_satisfied = false;
  double gap = 0.0;
  double doeblin_epsilon = 0.0;
  double doeblin_time = 0.0;
  double perturbation_norm = 0.0;  // ||dL(rho_stat)||_1
  CMatrix drho;
};

/// Default t0 is 1/g. The nominal 1/g bound is only reported; the
/// certified bound is a theorem and is expected to hold.
SensitivityReport sensitivity_report(const Superoperator& generator, const Superoperator& perturbation,
                                     std::optional<double> t0 = std::nullopt);

struct QContextReport {
  DensityOperator stationary;
  double gap = 0.0;
  double doeblin_epsilon = 0.0;
  double doeblin_time = 0.0;
  bool primitive = false;
  double certified_sensitivity_factor = 0.0;  // t0 / eps
  std::vector<Complex> eigenvalues;           // spectrum of L, for audit
};

QContextReport analyze_context(const Superoperator& generator, std::optional<double> t0 = std::nullopt);

/// Orthonormal (Hilbert-Schmidt) basis of traceless d x d matrices as the
/// columns of a d^2 x (d^2 - 1) matrix in vectorized form.
CMatrix traceless_basis(Index dim);

/// Eigenvalues of the generator matrix, sorted by descending real part.
std::vector<Complex> generator_spectrum(const Superoperator& generator);

/// Seeded random Lindblad generator with a random Hamiltonian and
/// `num_jumps` Gaussian jump operators; generically primitive.
GklsGenerator random_gkls(Index dim, std::uint64_t seed, Index num_jumps = 2);

}  // namespace nqs
