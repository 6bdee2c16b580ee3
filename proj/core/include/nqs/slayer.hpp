#pragma once

// S-layer: Cartan charges, self-preservation functionals and the metrics
// obtained from their Hessians.

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nqs/operator_core.hpp"

namespace nqs {

/// Labeled family of mutually commuting Hermitian generators.
class CartanSet {
public:
  CartanSet(std::vector<std::string> labels, std::vector<HermitianOperator> generators,
            double tol = Tolerances{}.equality);

  Index dim() const noexcept { return dim_; }
  Index rank() const noexcept { return static_cast<Index>(generators_.size()); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<HermitianOperator>& generators() const noexcept { return generators_; }
  const HermitianOperator& operator[](Index a) const { return generators_.at(static_cast<std::size_t>(a)); }

  /// Gram matrix <H_a, H_b> = Tr(H_a H_b).
  RMatrix gram() const;

private:
  std::vector<std::string> labels_;
  std::vector<HermitianOperator> generators_;
  Index dim_;
};

/// Diagonal Gell-Mann pair (lambda_3, lambda_8) on a qutrit.
CartanSet gell_mann_cartan();
/// Gell-Mann matrix lambda_k, k = 1..8.
CMatrix gell_mann(int k);

struct ChargeVector {
  RVector values;
  std::string context;
};

ChargeVector charges(const DensityOperator& rho, const CartanSet& cartan);
/// Tr(x H_a) for an arbitrary operator x (e.g. a traceless state variation).
RVector charge_map(const CMatrix& x, const CartanSet& cartan);

/// 1/2 (q - q_pref)^T K (q - q_pref) with K symmetric positive definite.
struct QuadraticFunctional {
  QuadraticFunctional(RMatrix stiffness, RVector preferred);

  RMatrix stiffness;
  RVector preferred;

  Index rank() const noexcept { return preferred.size(); }
  double internal_cost(const RVector& q) const;
  RVector gradient(const RVector& q) const;
};

/// Only quantum relative entropy is supported.
enum class Divergence { relative_entropy };
Divergence parse_divergence(const std::string& name);

/// theta -> rho(theta). The optional gradient, when provided, is the
/// gradient of the divergence functional theta -> D(rho(theta) || rho(anchor)).
struct StateFamily {
  std::function<CMatrix(const RVector&)> state;
  std::function<RVector(const RVector&)> divergence_gradient;
};

struct DivergenceFunctional {
  StateFamily family;
  RVector anchor;
  Divergence divergence = Divergence::relative_entropy;

  double operator()(const RVector& theta) const;
};

struct MetricMatrix {
  RMatrix entries;
  std::vector<std::string> labels;
};

struct Neighbor {
  RVector charges;
  double weight;
};

/// Internal term plus 1/2 sum_j w_j ||q - q_j||^2.
double quadratic_cost(const RVector& q, const QuadraticFunctional& functional,
                      const std::vector<Neighbor>& neighbors = {});
double quadratic_cost(const ChargeVector& q, const QuadraticFunctional& functional,
                      const std::vector<Neighbor>& neighbors = {});

using ScalarFunction = std::function<double(const RVector&)>;
using GradientFunction = std::function<RVector(const RVector&)>;

constexpr double kDefaultHessianStep = 1e-4;

/// Central-difference Hessian at `at` with one Richardson refinement
/// (steps h and h/2), symmetrized.
MetricMatrix hessian_metric(const ScalarFunction& cost, const RVector& at, double step = kDefaultHessianStep);
/// Same, from an analytic gradient (first differences of the gradient).
MetricMatrix hessian_from_gradient(const GradientFunction& gradient, const RVector& at,
                                   double step = kDefaultHessianStep);
/// Central-difference gradient with one Richardson refinement.
RVector numerical_gradient(const ScalarFunction& f, const RVector& at, double step = kDefaultHessianStep);

/// 1/2 Tr(rho {H_i, H_j}) - q_i q_j.
MetricMatrix covariance_metric(const DensityOperator& rho, const CartanSet& cartan);

/// Hessian of theta -> D(rho(theta) || rho(theta_star)) at theta_star.
MetricMatrix fisher_from_divergence(const StateFamily& family, const RVector& theta_star,
                                    double step = kDefaultHessianStep,
                                    Divergence divergence = Divergence::relative_entropy);

using ProbabilityFamily = std::function<RVector(const RVector&)>;

/// sum_x p(x) d_i log p(x) d_j log p(x), derivatives by central differences.
MetricMatrix classical_fisher(const ProbabilityFamily& family, const RVector& theta_star,
                              double step = kDefaultHessianStep);

/// 1/2 sum_k (dq_k/dtau)^T g (dq_k/dtau) dtau on a uniform tau grid over [0, 1].
double path_cost(const std::vector<RVector>& path, const RMatrix& metric);

/// exp(-sum_a h_a H_a) / Z. The inverse temperature is absorbed into h.
DensityOperator gibbs_state(const CartanSet& cartan, const RVector& fields);
StateFamily gibbs_family(const CartanSet& cartan);

/// Diagnostic combining a stationary-state response with the intrinsic
/// metric. The schematic bound is reported, never asserted.
struct ResponseChainReport {
  RVector charge_shift;          // dq = Tr(drho H_a)
  double second_order_cost = 0;  // 1/2 dq^T g dq
  double lipschitz_constant = 0; // max_a ||H_a||_inf
  double gap = 0;
  double perturbation_norm = 0;  // ||dL(rho_stat)||_1
  double schematic_bound = 0;    // L^2 ||dL(rho_stat)||_1^2 / (2 g^2)
  double ratio = 0;              // second_order_cost / schematic_bound (0 if the bound vanishes)
};

ResponseChainReport response_chain(const CMatrix& drho, const CartanSet& cartan, const RMatrix& metric,
                                   double gap, double perturbation_norm);

}  // namespace nqs
