#include <gtest/gtest.h>

#include <cmath>

#include "nqs/qlayer.hpp"
#include "oracles.hpp"

using namespace nqs;

namespace {

Superoperator reset_generator(double kappa, const DensityOperator& sigma) {
  return build_superoperator(GklsGenerator(ResetForm{kappa, sigma}));
}

CMatrix pauli(char which) {
  CMatrix p = CMatrix::Zero(2, 2);
  switch (which) {
    case 'x': p(0, 1) = p(1, 0) = 1.0; break;
    case 'y': p(0, 1) = Complex(0, -1); p(1, 0) = Complex(0, 1); break;
    case 'z': p(0, 0) = 1.0; p(1, 1) = -1.0; break;
  }
  return p;
}

Superoperator amplitude_damping(double gamma) {
  CMatrix lower = CMatrix::Zero(2, 2);
  lower(0, 1) = std::sqrt(gamma);
  return build_superoperator(GklsGenerator(HamiltonianLindblad{HermitianOperator(CMatrix::Zero(2, 2)), {lower}}));
}

Superoperator random_perturbation(Index d, std::uint64_t seed) {
  // Differences of GKLS generators are trace-annihilating and
  // hermiticity-preserving but need not generate a semigroup.
  return build_superoperator(random_gkls(d, seed)) - build_superoperator(random_gkls(d, seed + 7919));
}

template <class Fn>
void expect_error(ErrorKind kind, Fn&& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected " << to_string(kind);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

}  // namespace

TEST(BuildSuperoperator, ZeroGenerator) {
  const Superoperator l = build_superoperator(GklsGenerator(HamiltonianLindblad{HermitianOperator(CMatrix::Zero(3, 3)), {}}));
  EXPECT_EQ(l.matrix().cwiseAbs().maxCoeff(), 0.0);
}

TEST(BuildSuperoperator, ResetActsAsKappaSigmaMinusRho) {
  const Superoperator l = reset_generator(1.0, DensityOperator::maximally_mixed(2));
  CMatrix rho = CMatrix::Zero(2, 2);
  rho(0, 0) = 1.0;
  const CMatrix out = l.apply(rho);
  EXPECT_NEAR(out(0, 0).real(), -0.5, 1e-15);
  EXPECT_NEAR(out(1, 1).real(), 0.5, 1e-15);
}

TEST(BuildSuperoperator, HamiltonianCommutator) {
  const Superoperator l = build_superoperator(GklsGenerator(HamiltonianLindblad{HermitianOperator(pauli('z')), {}}));
  EXPECT_LT((l.apply(pauli('x')) - 2.0 * pauli('y')).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(BuildSuperoperator, MatchesDirectLindbladOracle) {
  std::mt19937_64 rng(3);
  const CMatrix h = hermitian_part(random_complex_gaussian(3, 3, rng));
  const std::vector<CMatrix> jumps{random_complex_gaussian(3, 3, rng), random_complex_gaussian(3, 3, rng)};
  const Superoperator l = build_superoperator(GklsGenerator(HamiltonianLindblad{HermitianOperator(h), jumps}));
  const CMatrix expected = oracle::superop_of([&](const CMatrix& x) { return oracle::lindblad(h, jumps, x); }, 3);
  EXPECT_LT((l.matrix() - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(l.adjoint().apply(CMatrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(BuildSuperoperator, DimensionMismatch) {
  expect_error(ErrorKind::dimension, [] {
    GklsGenerator(HamiltonianLindblad{HermitianOperator(CMatrix::Zero(2, 2)), {CMatrix::Zero(3, 3)}});
  });
}

TEST(BuildSuperoperator, ChannelFormMatchesReset) {
  // Psi(rho) = sigma Tr(rho) has Kraus operators sqrt(s_i)|i><j|.
  const DensityOperator sigma = random_density(2, 4);
  const CMatrix choi_free = oracle::superop_of(
      [&](const CMatrix& x) { return CMatrix(sigma.matrix() * x.trace()); }, 2);
  const Superoperator psi(2, choi_free, MapKind::channel);
  const Superoperator a = build_superoperator(GklsGenerator(ChannelMinusIdentity{1.3, psi}));
  const Superoperator b = reset_generator(1.3, sigma);
  EXPECT_LT((a.matrix() - b.matrix()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(StationaryState, ResetTarget) {
  const DensityOperator sigma = random_density(3, 21);
  const DensityOperator rho = stationary_state(reset_generator(0.7, sigma));
  EXPECT_LT((rho.matrix() - sigma.matrix()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(StationaryState, Depolarizing) {
  std::vector<CMatrix> jumps{0.5 * pauli('x'), 0.5 * pauli('y'), 0.5 * pauli('z')};
  const Superoperator l = build_superoperator(GklsGenerator(HamiltonianLindblad{HermitianOperator(CMatrix::Zero(2, 2)), jumps}));
  const DensityOperator rho = stationary_state(l);
  EXPECT_LT((rho.matrix() - 0.5 * CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(trace_norm(l.apply(rho.matrix())), 1e-10);
}

TEST(StationaryState, DephasingIsNotPrimitive) {
  const Superoperator l = build_superoperator(
      GklsGenerator(HamiltonianLindblad{HermitianOperator(CMatrix::Zero(2, 2)), {std::sqrt(0.3) * pauli('z')}}));
  expect_error(ErrorKind::non_primitive, [&] { stationary_state(l); });
  const PrimitivityReport r = primitivity_report(l);
  EXPECT_FALSE(r.primitive);
  EXPECT_EQ(r.stationary_kernel_dim, 2);
  EXPECT_FALSE(r.min_eig_of_stationary.has_value());
}

TEST(StationaryState, RandomResidual) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Superoperator l = build_superoperator(random_gkls(2 + seed % 3, seed));
    EXPECT_LE(trace_norm(l.apply(stationary_state(l).matrix())), 1e-10);
  }
}

TEST(Primitivity, FaithfulReset) {
  const DensityOperator sigma = random_density(3, 2);
  const PrimitivityReport r = primitivity_report(reset_generator(1.0, sigma));
  EXPECT_TRUE(r.primitive);
  EXPECT_EQ(r.stationary_kernel_dim, 1);
  ASSERT_TRUE(r.min_eig_of_stationary.has_value());
  EXPECT_NEAR(*r.min_eig_of_stationary, sigma.min_eigenvalue(), 1e-12);
}

TEST(Primitivity, PureTargetIsNotFaithful) {
  CMatrix pure = CMatrix::Zero(2, 2);
  pure(0, 0) = 1.0;
  const PrimitivityReport r = primitivity_report(reset_generator(1.0, DensityOperator(pure)));
  EXPECT_FALSE(r.primitive);
  EXPECT_EQ(r.stationary_kernel_dim, 1);
  ASSERT_TRUE(r.min_eig_of_stationary.has_value());
  EXPECT_NEAR(*r.min_eig_of_stationary, 0.0, 1e-12);
}

TEST(SpectralGap, ResetEqualsKappa) {
  EXPECT_NEAR(spectral_gap(reset_generator(1.5, DensityOperator::maximally_mixed(2))), 1.5, 1e-10);
}

TEST(SpectralGap, AmplitudeDampingOracle) {
  const Superoperator l = amplitude_damping(1.0);
  // The generator itself is the oracle here: eigenvalues 0, -1, -1/2, -1/2.
  Eigen::ComplexEigenSolver<CMatrix> es(l.matrix());
  double slowest = -1e300;
  for (Index i = 0; i < 4; ++i) {
    if (std::abs(es.eigenvalues()(i)) > 1e-12) slowest = std::max(slowest, es.eigenvalues()(i).real());
  }
  EXPECT_NEAR(slowest, -0.5, 1e-12);
  // Amplitude damping to |0><0| is not faithful, so the gap is computed on a
  // slightly thermalized version: add weak excitation.
  CMatrix raise = CMatrix::Zero(2, 2);
  raise(1, 0) = std::sqrt(1e-6);
  CMatrix lower = CMatrix::Zero(2, 2);
  lower(0, 1) = 1.0;
  const Superoperator thermal = build_superoperator(
      GklsGenerator(HamiltonianLindblad{HermitianOperator(CMatrix::Zero(2, 2)), {lower, raise}}));
  EXPECT_NEAR(spectral_gap(thermal), 0.5 * (1.0 + 1e-6), 1e-10);
}

TEST(SpectralGap, Homogeneous) {
  const Superoperator l = build_superoperator(random_gkls(3, 17));
  EXPECT_NEAR(spectral_gap(l.scaled(2.5)), 2.5 * spectral_gap(l), 1e-9);
}

TEST(SpectralGap, NonPrimitive) {
  const Superoperator l = build_superoperator(
      GklsGenerator(HamiltonianLindblad{HermitianOperator(CMatrix::Zero(2, 2)), {pauli('z')}}));
  expect_error(ErrorKind::non_primitive, [&] { spectral_gap(l); });
}

TEST(Doeblin, ResetClosedFormAndChoiOracle) {
  const DensityOperator sigma = random_density(3, 31);
  const double kappa = 0.8;
  const Superoperator l = reset_generator(kappa, sigma);
  for (double t0 : {0.25, 1.0, 3.0}) {
    const double eps = doeblin_epsilon(l, t0);
    EXPECT_NEAR(eps, 1.0 - std::exp(-kappa * t0), 1e-9);
    const double decay = std::exp(-kappa * t0);
    const CMatrix j = oracle::choi(
        [&](const CMatrix& x) { return CMatrix(decay * x + (1.0 - decay) * x.trace() * sigma.matrix()); }, 3);
    EXPECT_NEAR(eps, oracle::choi_minorization(j, sigma.matrix()), 1e-9);
  }
}

TEST(Doeblin, VanishesForSmallTime) {
  const Superoperator l = build_superoperator(random_gkls(2, 12));
  EXPECT_LT(doeblin_epsilon(l, 1e-9), 1e-6);
}

TEST(Doeblin, MonotoneForReset) {
  const Superoperator l = reset_generator(1.1, random_density(2, 3));
  double prev = 0.0;
  for (double t : {0.1, 0.2, 0.4, 0.8, 1.6}) {
    const double e = doeblin_epsilon(l, t);
    EXPECT_GE(e, prev);
    prev = e;
  }
}

TEST(Doeblin, GapAlgebra) {
  EXPECT_NEAR(doeblin_gap(1.0 - std::exp(-1.0), 1.0), 1.0, 1e-14);
  EXPECT_NEAR(doeblin_gap(0.5, 2.0), std::log(2.0) / 2.0, 1e-14);
  expect_error(ErrorKind::domain, [] { doeblin_gap(0.0, 1.0); });
  expect_error(ErrorKind::domain, [] { doeblin_gap(1.0, 1.0); });
}

TEST(Doeblin, ResetGapRecoversKappa) {
  const Superoperator l = reset_generator(2.0, random_density(3, 1));
  for (double t0 : {0.3, 1.0, 2.0}) EXPECT_NEAR(doeblin_gap(doeblin_epsilon(l, t0), t0), 2.0, 1e-9);
}

TEST(Doeblin, ContractionOnRandomGenerators) {
  for (std::uint64_t g = 0; g < 5; ++g) {
    const Index d = 2 + g % 3;
    const Superoperator l = build_superoperator(random_gkls(d, 100 + g));
    const DensityOperator stat = stationary_state(l);
    const double t0 = 1.0 / spectral_gap(l);
    const double eps = doeblin_epsilon(l, t0);
    for (std::uint64_t s = 0; s < 20; ++s) {
      const DensityOperator rho = random_density(d, 1000 * g + s);
      const double initial = trace_norm(rho.matrix() - stat.matrix());
      for (int n = 1; n <= 10; ++n) {
        const double dist = trace_norm(evolve_state(l, rho, n * t0).matrix() - stat.matrix());
        EXPECT_LE(dist, std::pow(1.0 - eps, n) * initial + 1e-9);
      }
    }
  }
}

TEST(Doeblin, CertifiedRateNeverExceedsGap) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Superoperator l = build_superoperator(random_gkls(2 + seed % 3, seed + 40));
    const double g = spectral_gap(l);
    for (double t0 : {0.5 / g, 1.0 / g, 2.0 / g}) {
      const double eps = doeblin_epsilon(l, t0);
      if (eps > 0.0 && eps < 1.0) EXPECT_LE(doeblin_gap(eps, t0), g + 1e-9);
    }
  }
}

TEST(Evolve, ZeroTime) {
  const Superoperator l = build_superoperator(random_gkls(3, 2));
  const DensityOperator rho = random_density(3, 9);
  EXPECT_TRUE(evolve_state(l, rho, 0.0).matrix() == rho.matrix());
}

TEST(Evolve, ResetClosedForm) {
  const DensityOperator sigma = random_density(2, 5), rho = random_density(2, 6);
  const double kappa = 0.9, t = 1.7;
  const CMatrix expected = std::exp(-kappa * t) * rho.matrix() + (1.0 - std::exp(-kappa * t)) * sigma.matrix();
  EXPECT_LT((evolve_state(reset_generator(kappa, sigma), rho, t).matrix() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Evolve, Mixing) {
  const Superoperator l = build_superoperator(random_gkls(3, 77));
  const double g = spectral_gap(l);
  const DensityOperator rho = random_density(3, 1);
  EXPECT_LT(trace_norm(evolve_state(l, rho, 50.0 / g).matrix() - stationary_state(l).matrix()), 1e-9);
}

TEST(Evolve, AsymptoticRate) {
  // Evolve the deviation inside the traceless subspace so that distances of
  // order exp(-40) stay resolvable, and read the rate off two late times.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Superoperator l = build_superoperator(random_gkls(2 + seed % 2, 300 + seed));
    const Index d = l.dim();
    const double g = spectral_gap(l);
    const CMatrix q = traceless_basis(d);
    const CMatrix b = q.adjoint() * l.matrix() * q;
    const CVector dev = q.adjoint() * vectorize(random_density(d, seed).matrix() - stationary_state(l).matrix());
    const auto dist = [&](double t) { return trace_norm(devectorize(q * (matrix_exponential(b, t) * dev), d)); };
    const double t1 = 20.0 / g, t2 = 40.0 / g;
    const double rate = std::log(dist(t1) / dist(t2)) / (t2 - t1);
    EXPECT_GE(rate, g - 1e-3) << "seed " << seed;
  }
}

TEST(Evolve, NegativeTime) {
  const Superoperator l = build_superoperator(random_gkls(2, 1));
  expect_error(ErrorKind::domain, [&] { evolve_state(l, DensityOperator::maximally_mixed(2), -1.0); });
}

TEST(Evolve, Semigroup) {
  const Superoperator l = build_superoperator(random_gkls(3, 8));
  const DensityOperator rho = random_density(3, 2);
  const CMatrix a = evolve_state(l, evolve_state(l, rho, 0.4), 0.9).matrix();
  const CMatrix b = evolve_state(l, rho, 1.3).matrix();
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Poisson, ZeroPerturbation) {
  const Superoperator l = build_superoperator(random_gkls(3, 3));
  EXPECT_LT(solve_poisson(l, Superoperator::zero(3)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Poisson, ResetInversion) {
  const DensityOperator sigma = random_density(3, 13);
  const double kappa = 1.7;
  const Superoperator l = reset_generator(kappa, sigma), dl = random_perturbation(3, 5);
  const CMatrix expected = dl.apply(sigma.matrix()) / kappa;
  EXPECT_LT((solve_poisson(l, dl) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Poisson, ResidualAndTraceless) {
  const Superoperator l = build_superoperator(random_gkls(4, 6)), dl = random_perturbation(4, 60);
  const CMatrix drho = solve_poisson(l, dl);
  EXPECT_LE(trace_norm(l.apply(drho) + dl.apply(stationary_state(l).matrix())), 1e-9);
  EXPECT_NEAR(std::abs(drho.trace()), 0.0, 1e-12);
  EXPECT_LT((drho - drho.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Poisson, FiniteDifferenceSlope) {
  const Superoperator l = build_superoperator(random_gkls(3, 4));
  const Superoperator dl = build_superoperator(random_gkls(3, 44));
  const CMatrix stat = stationary_state(l).matrix();
  const CMatrix drho = solve_poisson(l, dl);
  std::vector<double> s{1e-2, 1e-3, 1e-4}, err;
  for (double h : s) err.push_back(trace_norm(stationary_state(l + dl.scaled(h)).matrix() - stat - h * drho));
  EXPECT_NEAR(oracle::loglog_slope(s, err), 2.0, 0.1);
}

TEST(Poisson, Linearity) {
  const Superoperator l = build_superoperator(random_gkls(3, 9));
  const Superoperator a = random_perturbation(3, 1), b = random_perturbation(3, 2);
  const CMatrix combined = solve_poisson(l, a.scaled(0.3) + b.scaled(-1.2));
  const CMatrix separate = 0.3 * solve_poisson(l, a) - 1.2 * solve_poisson(l, b);
  EXPECT_LT((combined - separate).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Poisson, RejectsTraceChangingPerturbation) {
  const Superoperator l = build_superoperator(random_gkls(2, 1));
  expect_error(ErrorKind::invalid_perturbation, [&] { solve_poisson(l, Superoperator::identity(2)); });
}

TEST(Sensitivity, ResetEquality) {
  const DensityOperator sigma = random_density(3, 14);
  const Superoperator l = reset_generator(0.6, sigma), dl = random_perturbation(3, 15);
  const SensitivityReport r = sensitivity_report(l, dl);
  EXPECT_NEAR(r.lhs, r.rhs_nominal, 1e-9);
  EXPECT_TRUE(r.nominal_satisfied);
  EXPECT_TRUE(r.certified_satisfied);
}

TEST(Sensitivity, ZeroPerturbation) {
  const Superoperator l = build_superoperator(random_gkls(2, 4));
  const SensitivityReport r = sensitivity_report(l, Superoperator::zero(2));
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_TRUE(r.certified_satisfied);
  EXPECT_TRUE(r.nominal_satisfied);
}

TEST(Sensitivity, CertifiedBoundSweep) {
  int violations = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Index d = 2 + seed % 3;
    const SensitivityReport r =
        sensitivity_report(build_superoperator(random_gkls(d, 500 + seed)), random_perturbation(d, 900 + seed));
    if (!r.certified_satisfied) ++violations;
    EXPECT_LE(r.lhs, r.rhs_certified * (1 + 1e-9));
  }
  EXPECT_EQ(violations, 0);
}

TEST(AnalyzeContext, ReportFields) {
  const DensityOperator sigma = random_density(2, 3);
  const QContextReport r = analyze_context(reset_generator(2.0, sigma));
  EXPECT_TRUE(r.primitive);
  EXPECT_NEAR(r.gap, 2.0, 1e-10);
  EXPECT_NEAR(r.doeblin_time, 0.5, 1e-12);
  EXPECT_NEAR(r.doeblin_epsilon, 1.0 - std::exp(-1.0), 1e-9);
  EXPECT_NEAR(r.certified_sensitivity_factor, 0.5 / r.doeblin_epsilon, 1e-12);
  EXPECT_EQ(r.eigenvalues.size(), 4u);
}

TEST(TracelessBasis, Orthonormal) {
  for (Index d = 1; d <= 4; ++d) {
    const CMatrix q = traceless_basis(d);
    EXPECT_EQ(q.cols(), d * d - 1);
    if (q.cols() == 0) continue;
    EXPECT_LT((q.adjoint() * q - CMatrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff(), 1e-13);
    for (Index c = 0; c < q.cols(); ++c) EXPECT_NEAR(std::abs(devectorize(q.col(c), d).trace()), 0.0, 1e-14);
  }
}
