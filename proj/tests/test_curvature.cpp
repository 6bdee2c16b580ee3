#include <gtest/gtest.h>

#include <cmath>

#include "nqs/curvature.hpp"
#include "oracles.hpp"

using namespace nqs;

namespace {

Superoperator random_perturbation(Index d, std::uint64_t seed) {
  return build_superoperator(random_gkls(d, seed)) - build_superoperator(random_gkls(d, seed + 17));
}

/// Charge-level compression by explicit Gell-Mann algebra: project
/// U^dagger H_b U onto (lambda3, lambda8) with the trace inner product.
RMatrix gell_mann_compression(const CMatrix& u) {
  const CMatrix l3 = gell_mann(3), l8 = gell_mann(8);
  const CMatrix h[2] = {l3, l8};
  RMatrix m(2, 2);
  for (int b = 0; b < 2; ++b) {
    const CMatrix image = u.adjoint() * h[b] * u;
    for (int a = 0; a < 2; ++a) m(b, a) = 0.5 * (h[a] * image).trace().real();
  }
  return m;
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

TEST(ResponseMap, RejectsTraceChanging) {
  expect_error(ErrorKind::invalid_perturbation, [] { ResponseMap("c", {{"bad", Superoperator::identity(2)}}); });
}

TEST(SensitivityTriple, ZeroOpenness) {
  const Superoperator l = build_superoperator(random_gkls(3, 1));
  const ResponseMap xi("c", {{"a", random_perturbation(3, 2)}, {"b", random_perturbation(3, 3)}});
  const SensitivityTriple t = make_sensitivity_triple(l, xi, RVector::Zero(2));
  EXPECT_EQ(t.dl.matrix().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LT(t.drho.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SensitivityTriple, ResetClosedForm) {
  const DensityOperator sigma = random_density(2, 4);
  const Superoperator l = build_superoperator(GklsGenerator(ResetForm{1.25, sigma}));
  const Superoperator dl = random_perturbation(2, 5);
  const ResponseMap xi("c", {{"a", dl}});
  const SensitivityTriple t = make_sensitivity_triple(l, xi, RVector::Constant(1, 0.4));
  const CMatrix expected = 0.4 * dl.apply(sigma.matrix()) / 1.25;
  EXPECT_LT((t.drho - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SensitivityTriple, InvariantsAndLinearity) {
  const Superoperator l = build_superoperator(random_gkls(3, 8));
  const ResponseMap xi("c", {{"a", random_perturbation(3, 9)}, {"b", random_perturbation(3, 10)}});
  RVector dn(2);
  dn << 0.7, -0.3;
  const SensitivityTriple t = make_sensitivity_triple(l, xi, dn);
  const SensitivityTriple t2 = make_sensitivity_triple(l, xi, 2.5 * dn);
  EXPECT_LE(trace_norm(l.apply(t.drho) + t.dl.apply(stationary_state(l).matrix())), 1e-9);
  EXPECT_NEAR(std::abs(t.drho.trace()), 0.0, 1e-12);
  EXPECT_LT((t2.drho - 2.5 * t.drho).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((t2.dl.matrix() - 2.5 * t.dl.matrix()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SensitivityTriple, WrongLength) {
  const Superoperator l = build_superoperator(random_gkls(2, 8));
  const ResponseMap xi("c", {{"a", random_perturbation(2, 9)}});
  expect_error(ErrorKind::dimension, [&] { make_sensitivity_triple(l, xi, RVector::Zero(3)); });
}

TEST(Transport, IdentityChannel) {
  const TransportMap t = charge_transport(Superoperator::identity(3), gell_mann_cartan());
  EXPECT_LT((t.matrix - RMatrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Transport, FullSwap) {
  const TransportMap t = charge_transport(partial_swap_channel(3, 0, 1, 1.0), gell_mann_cartan());
  RMatrix expected = RMatrix::Identity(2, 2);
  expected(0, 0) = -1.0;
  EXPECT_LT((t.matrix - expected).cwiseAbs().maxCoeff(), 1e-12);
  CMatrix swap = CMatrix::Zero(3, 3);
  swap(0, 1) = swap(1, 0) = swap(2, 2) = 1.0;
  EXPECT_LT((t.matrix - gell_mann_compression(swap)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Transport, PartialSwap) {
  for (double theta : {0.1, 0.3, 0.75}) {
    const TransportMap t = charge_transport(partial_swap_channel(3, 0, 1, theta), gell_mann_cartan());
    EXPECT_NEAR(t.matrix(0, 0), 1.0 - 2.0 * theta, 1e-12);
    EXPECT_NEAR(t.matrix(1, 1), 1.0, 1e-12);
    EXPECT_NEAR(t.matrix(0, 1), 0.0, 1e-12);
    EXPECT_NEAR(t.matrix(1, 0), 0.0, 1e-12);
  }
}

TEST(Transport, ActsOnCharges) {
  // q' = M q must agree with the charges of the transported state.
  const CartanSet c = gell_mann_cartan();
  const CMatrix u = matrix_exponential(Complex(0, 0.3) * gell_mann(6));
  const Superoperator psi = Superoperator::unitary_conjugation(u);
  const TransportMap t = charge_transport(psi, c);
  CMatrix rho = CMatrix::Zero(3, 3);
  rho(0, 0) = 0.5;
  rho(1, 1) = 0.3;
  rho(2, 2) = 0.2;
  const RVector before = charges(DensityOperator(rho), c).values;
  const RVector after = charges(DensityOperator(psi.apply(rho), 1e-12), c).values;
  // Exact for diagonal states: Tr(rho X) only sees the diagonal of X,
  // whose traceless part lies in the Cartan span.
  EXPECT_LT((t(before) - after).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Transport, ConvexLinearity) {
  const CartanSet c = gell_mann_cartan();
  const Superoperator a = Superoperator::unitary_conjugation(matrix_exponential(Complex(0, 0.4) * gell_mann(1)));
  const Superoperator b = partial_swap_channel(3, 1, 2, 0.3);
  const double alpha = 0.35;
  const Superoperator mix = a.scaled(alpha) + b.scaled(1.0 - alpha);
  const RMatrix lhs = charge_transport(mix, c).matrix;
  const RMatrix rhs = alpha * charge_transport(a, c).matrix + (1 - alpha) * charge_transport(b, c).matrix;
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Transport, ZeroChargesStayZero) {
  const TransportMap t = charge_transport(partial_swap_channel(3, 0, 2, 0.2), gell_mann_cartan());
  EXPECT_EQ(t(RVector::Zero(2)).norm(), 0.0);
}

TEST(Transport, DegenerateCartan) {
  const CMatrix l3 = gell_mann(3);
  const CartanSet c({"a", "b"}, {HermitianOperator(l3), HermitianOperator(CMatrix(2.0 * l3))});
  expect_error(ErrorKind::degenerate_cartan, [&] { charge_transport(Superoperator::identity(3), c); });
}

TEST(Loop, Empty) {
  EXPECT_EQ(loop_holonomy({}, 2).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Loop, TransportThenInverse) {
  RMatrix m(2, 2);
  m << 0.8, 0.1, -0.3, 1.2;
  const std::vector<TransportMap> loop{{"a", "b", m}, {"b", "a", m.inverse()}};
  EXPECT_LT(loop_holonomy(loop, 2).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Loop, BrokenChainAndOpenPath) {
  const RMatrix i = RMatrix::Identity(2, 2);
  expect_error(ErrorKind::loop, [&] { loop_holonomy(std::vector<TransportMap>{{"a", "b", i}, {"c", "a", i}}, 2); });
  expect_error(ErrorKind::loop, [&] { loop_holonomy(std::vector<TransportMap>{{"a", "b", i}, {"b", "c", i}}, 2); });
}

TEST(Loop, CartanSpanUnitariesAreFlat) {
  const CartanSet c = gell_mann_cartan();
  const CMatrix u1 = matrix_exponential(Complex(0, 0.7) * gell_mann(3));
  const CMatrix u2 = matrix_exponential(Complex(0, -0.4) * gell_mann(8));
  const std::vector<TransportMap> loop{charge_transport(Superoperator::unitary_conjugation(u1), c, "a", "b"),
                                       charge_transport(Superoperator::unitary_conjugation(u2), c, "b", "c"),
                                       charge_transport(Superoperator::unitary_conjugation(u1.adjoint()), c, "c", "d"),
                                       charge_transport(Superoperator::unitary_conjugation(u2.adjoint()), c, "d", "a")};
  EXPECT_LT(loop_holonomy(loop, 2).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Holonomy, QutritUnitaryLoop) {
  const CartanSet c = gell_mann_cartan();
  const HolonomyReport r = holonomy_fit(unitary_round_trip(gell_mann(1), c), {0.1, 0.05, 0.025, 0.0}, 2);
  EXPECT_NEAR(r.fitted_exponent, 2.0, 0.05);
  EXPECT_FALSE(r.flat);
  ASSERT_EQ(r.theta_sweep.size(), 4u);
  EXPECT_EQ(r.theta_sweep.back().second, 0.0);
  // Oracle: explicit Gell-Mann conjugation at theta = 0.025.
  const double th = 0.025;
  const CMatrix u = matrix_exponential(Complex(0, th) * gell_mann(1));
  const RMatrix dev = gell_mann_compression(u.adjoint()) * gell_mann_compression(u) - RMatrix::Identity(2, 2);
  EXPECT_LT((r.deviation_matrix - dev).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(r.fitted_k(0, 0), -4.0, 0.08);
  EXPECT_NEAR(r.fitted_k(0, 0), dev(0, 0) / (th * th), 1e-9);
  EXPECT_LT(r.fitted_k.col(1).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(r.deviation_matrix.col(1).cwiseAbs().maxCoeff(), 1e-8);
  // Exact value: round trip compression is cos^2(2 theta).
  EXPECT_NEAR(dev(0, 0), -std::pow(std::sin(2 * th), 2), 1e-14);
}

TEST(Holonomy, PartialSwapReadings) {
  const CartanSet c = gell_mann_cartan();
  const std::vector<double> thetas{0.1, 0.05, 0.025};
  const HolonomyReport formal = holonomy_fit(partial_swap_round_trip(0, 1, c, SwapReturn::formal_inverse), thetas, 2);
  const HolonomyReport physical = holonomy_fit(partial_swap_round_trip(0, 1, c, SwapReturn::physical), thetas, 2);
  EXPECT_NEAR(formal.fitted_exponent, 2.0, 0.05);
  EXPECT_NEAR(physical.fitted_exponent, 1.0, 0.1);
}

TEST(Holonomy, FlatLoopIsReportedNotThrown) {
  const CartanSet c = gell_mann_cartan();
  const HolonomyReport r = holonomy_fit(unitary_round_trip(gell_mann(3), c), {0.1, 0.05, 0.025}, 2);
  EXPECT_TRUE(r.flat);
  EXPECT_TRUE(std::isnan(r.fitted_exponent));
}

TEST(Holonomy, NeedsThreeThetas) {
  const CartanSet c = gell_mann_cartan();
  expect_error(ErrorKind::domain, [&] { holonomy_fit(unitary_round_trip(gell_mann(1), c), {0.1, 0.05, 0.0}, 2); });
  expect_error(ErrorKind::domain, [&] { holonomy_fit(unitary_round_trip(gell_mann(1), c), {0.1, 0.05, 0.6}, 2); });
}
