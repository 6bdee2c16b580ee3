#pragma once

// Sensitivity triples, charge-space transport along edges and loop
// holonomy.

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nqs/qlayer.hpp"
#include "nqs/slayer.hpp"

namespace nqs {

/// Linear map from openness coordinates dN to generator perturbations.
class ResponseMap {
public:
  /// Every direction must annihilate the trace.
  ResponseMap(std::string context, std::vector<std::pair<std::string, Superoperator>> directions,
              double tol = Tolerances{}.equality);

  const std::string& context() const noexcept { return context_; }
  const std::vector<std::pair<std::string, Superoperator>>& directions() const noexcept { return directions_; }
  Index size() const noexcept { return static_cast<Index>(directions_.size()); }
  Index dim() const noexcept { return dim_; }

  /// sum_i dN_i dL_i.
  Superoperator operator()(const RVector& dn) const;

private:
  std::string context_;
  std::vector<std::pair<std::string, Superoperator>> directions_;
  Index dim_;
};

struct SensitivityTriple {
  RVector dn;
  Superoperator dl;
  CMatrix drho;
};

SensitivityTriple make_sensitivity_triple(const Superoperator& generator, const ResponseMap& xi, const RVector& dn);

struct TransportMap {
  std::string source;
  std::string target;
  RMatrix matrix;

  RVector operator()(const RVector& q) const { return matrix * q; }
};

/// Compression of the Heisenberg action onto the Cartan span, written as
/// the map on charge vectors: q' = M q with
///   M = A^T G^{-1},  A_ab = <H_a, Psi^dagger(H_b)>,  G_ab = <H_a, H_b>.
/// Any hermiticity-preserving map is accepted, including the non-CP
/// "formal inverse" partial swap.
TransportMap charge_transport(const Superoperator& channel, const CartanSet& cartan, std::string source = {},
                              std::string target = {});

/// Gamma_{k-1} ... Gamma_0 - 1 on the base charge space. An empty loop
/// yields the zero matrix of size `rank`.
RMatrix loop_holonomy(std::span<const TransportMap> transports, Index rank);

/// (1 - theta) rho + theta S rho S with S the transposition of basis states
/// i and j. For theta outside [0, 1] the map is the formal (non-CP)
/// extrapolation and is flagged MapKind::general.
Superoperator partial_swap_channel(Index dim, Index i, Index j, double theta);

using LoopBuilder = std::function<std::vector<TransportMap>(double theta)>;

struct HolonomyReport {
  std::vector<std::pair<std::string, std::string>> loop;  // edges at the smallest theta
  RMatrix deviation_matrix;                               // R(gamma) at the smallest positive theta
  std::vector<std::pair<double, double>> theta_sweep;     // (theta, ||R||_F) in input order
  bool flat = false;                                      // every deviation below 1e-14
  double fitted_exponent = 0.0;                           // NaN when flat
  RMatrix fitted_k;                                       // deviation / theta_min^2
};

/// Evaluates the loop over `thetas`. theta = 0 is accepted as a sanity
/// point and excluded from the fit; at least three values in (0, 0.5) are
/// required.
HolonomyReport holonomy_fit(const LoopBuilder& builder, const std::vector<double>& thetas, Index rank);

/// Round trip conjugation by exp(i s theta G) then exp(-i s theta G),
/// compressed onto `cartan`.
LoopBuilder unitary_round_trip(const CMatrix& generator, const CartanSet& cartan, double scale = 1.0);

enum class SwapReturn {
  formal_inverse,  // back along Psi_{-theta}: not CP, deviation O(theta^2)
  physical,        // back along Psi_{theta} again: CP, deviation O(theta)
};

/// Round trip through the convex partial swap of basis states i and j.
LoopBuilder partial_swap_round_trip(Index i, Index j, const CartanSet& cartan, SwapReturn back);

}  // namespace nqs
