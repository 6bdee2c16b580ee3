#include "nqs/slayer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

namespace nqs {

namespace {

double checked(double value) {
  if (!std::isfinite(value)) throw Error(ErrorKind::evaluation, "cost evaluation returned a non-finite value");
  return value;
}

void require_step(double step) {
  if (!std::isfinite(step) || step <= 0.0) throw Error(ErrorKind::domain, "finite-difference step must be positive");
}

void require_point(const RVector& at) {
  if (at.size() == 0) throw Error(ErrorKind::dimension, "evaluation point is empty");
  if (!at.allFinite()) throw Error(ErrorKind::domain, "evaluation point has non-finite entries");
}

RMatrix central_hessian(const ScalarFunction& f, const RVector& x, double h) {
  const Index n = x.size();
  RMatrix hess(n, n);
  const double f0 = checked(f(x));
  const auto at = [&](Index i, double si, Index j, double sj) {
    RVector y = x;
    y(i) += si * h;
    y(j) += sj * h;
    return checked(f(y));
  };
  for (Index i = 0; i < n; ++i) {
    RVector up = x, down = x;
    up(i) += h;
    down(i) -= h;
    hess(i, i) = (checked(f(up)) - 2.0 * f0 + checked(f(down))) / (h * h);
    for (Index j = i + 1; j < n; ++j) {
      const double v = (at(i, 1, j, 1) - at(i, 1, j, -1) - at(i, -1, j, 1) + at(i, -1, j, -1)) / (4.0 * h * h);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

RMatrix symmetrized(const RMatrix& m) { return 0.5 * (m + m.transpose()); }

std::vector<std::string> default_labels(Index n) {
  std::vector<std::string> labels;
  for (Index i = 0; i < n; ++i) labels.push_back("theta" + std::to_string(i));
  return labels;
}

}  // namespace

// ---------------------------------------------------------------------------

CartanSet::CartanSet(std::vector<std::string> labels, std::vector<HermitianOperator> generators, double tol)
    : labels_(std::move(labels)), generators_(std::move(generators)), dim_(0) {
  if (generators_.empty()) throw Error(ErrorKind::validation, "CartanSet: at least one generator is required");
  if (labels_.size() != generators_.size()) {
    throw Error(ErrorKind::validation, "CartanSet: label count differs from generator count");
  }
  dim_ = generators_.front().dim();
  for (const auto& h : generators_) {
    if (h.dim() != dim_) throw Error(ErrorKind::dimension, "CartanSet: generators have different dimensions");
  }
  for (std::size_t a = 0; a < generators_.size(); ++a) {
    for (std::size_t b = a + 1; b < generators_.size(); ++b) {
      const double defect = trace_norm(commutator(generators_[a].matrix(), generators_[b].matrix()));
      if (defect > tol) {
        throw Error(ErrorKind::validation, "CartanSet: generators '" + labels_[a] + "' and '" + labels_[b] +
                                               "' do not commute");
      }
    }
  }
}

RMatrix CartanSet::gram() const {
  const Index r = rank();
  RMatrix g(r, r);
  for (Index a = 0; a < r; ++a)
    for (Index b = 0; b < r; ++b) g(a, b) = (generators_[a].matrix() * generators_[b].matrix()).trace().real();
  return g;
}

CMatrix gell_mann(int k) {
  CMatrix m = CMatrix::Zero(3, 3);
  const Complex i(0.0, 1.0);
  switch (k) {
    case 1: m(0, 1) = m(1, 0) = 1.0; break;
    case 2: m(0, 1) = -i; m(1, 0) = i; break;
    case 3: m(0, 0) = 1.0; m(1, 1) = -1.0; break;
    case 4: m(0, 2) = m(2, 0) = 1.0; break;
    case 5: m(0, 2) = -i; m(2, 0) = i; break;
    case 6: m(1, 2) = m(2, 1) = 1.0; break;
    case 7: m(1, 2) = -i; m(2, 1) = i; break;
    case 8: {
      const double s = 1.0 / std::sqrt(3.0);
      m(0, 0) = s; m(1, 1) = s; m(2, 2) = -2.0 * s;
      break;
    }
    default: throw Error(ErrorKind::domain, "gell_mann: index must be in 1..8");
  }
  return m;
}

CartanSet gell_mann_cartan() {
  return CartanSet({"lambda3", "lambda8"}, {HermitianOperator(gell_mann(3)), HermitianOperator(gell_mann(8))});
}

RVector charge_map(const CMatrix& x, const CartanSet& cartan) {
  if (x.rows() != cartan.dim() || x.cols() != cartan.dim()) {
    throw Error(ErrorKind::dimension, "charges: state dimension differs from Cartan set");
  }
  RVector q(cartan.rank());
  for (Index a = 0; a < cartan.rank(); ++a) q(a) = (x * cartan[a].matrix()).trace().real();
  return q;
}

ChargeVector charges(const DensityOperator& rho, const CartanSet& cartan) {
  return ChargeVector{charge_map(rho.matrix(), cartan), {}};
}

QuadraticFunctional::QuadraticFunctional(RMatrix stiffness_, RVector preferred_)
    : stiffness(std::move(stiffness_)), preferred(std::move(preferred_)) {
  if (stiffness.rows() != stiffness.cols() || stiffness.rows() != preferred.size() || preferred.size() == 0) {
    throw Error(ErrorKind::dimension, "QuadraticFunctional: stiffness must be r x r with r = len(preferred) > 0");
  }
  if (!stiffness.allFinite() || !preferred.allFinite()) {
    throw Error(ErrorKind::validation, "QuadraticFunctional: non-finite entries");
  }
  if ((stiffness - stiffness.transpose()).cwiseAbs().maxCoeff() > Tolerances{}.equality) {
    throw Error(ErrorKind::validation, "QuadraticFunctional: stiffness is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<RMatrix> es(stiffness, Eigen::EigenvaluesOnly);
  if (es.eigenvalues()(0) <= 0.0) {
    throw Error(ErrorKind::validation, "QuadraticFunctional: stiffness is not positive definite");
  }
}

double QuadraticFunctional::internal_cost(const RVector& q) const {
  if (q.size() != rank()) throw Error(ErrorKind::dimension, "quadratic_cost: charge length differs from functional");
  const RVector dq = q - preferred;
  return 0.5 * dq.dot(stiffness * dq);
}

RVector QuadraticFunctional::gradient(const RVector& q) const {
  if (q.size() != rank()) throw Error(ErrorKind::dimension, "quadratic functional: charge length mismatch");
  return stiffness * (q - preferred);
}

Divergence parse_divergence(const std::string& name) {
  if (name == "relative_entropy") return Divergence::relative_entropy;
  throw Error(ErrorKind::unsupported_divergence, "unsupported divergence '" + name + "'");
}

double DivergenceFunctional::operator()(const RVector& theta) const {
  const DensityOperator sigma(family.state(anchor), 1e-10);
  const DensityOperator rho(family.state(theta), 1e-10);
  return relative_entropy(rho, sigma);
}

double quadratic_cost(const RVector& q, const QuadraticFunctional& functional, const std::vector<Neighbor>& neighbors) {
  double value = functional.internal_cost(q);
  for (const Neighbor& n : neighbors) {
    if (n.charges.size() != q.size()) throw Error(ErrorKind::dimension, "quadratic_cost: neighbor charge length mismatch");
    if (!(n.weight >= 0.0)) throw Error(ErrorKind::domain, "quadratic_cost: neighbor weight must be non-negative");
    value += 0.5 * n.weight * (q - n.charges).squaredNorm();
  }
  return value;
}

double quadratic_cost(const ChargeVector& q, const QuadraticFunctional& functional,
                      const std::vector<Neighbor>& neighbors) {
  return quadratic_cost(q.values, functional, neighbors);
}

MetricMatrix hessian_metric(const ScalarFunction& cost, const RVector& at, double step) {
  require_point(at);
  require_step(step);
  const RMatrix coarse = central_hessian(cost, at, step);
  const RMatrix fine = central_hessian(cost, at, 0.5 * step);
  return MetricMatrix{symmetrized((4.0 * fine - coarse) / 3.0), default_labels(at.size())};
}

MetricMatrix hessian_from_gradient(const GradientFunction& gradient, const RVector& at, double step) {
  require_point(at);
  require_step(step);
  const Index n = at.size();
  const auto jacobian = [&](double h) {
    RMatrix j(n, n);
    for (Index c = 0; c < n; ++c) {
      RVector up = at, down = at;
      up(c) += h;
      down(c) -= h;
      const RVector gu = gradient(up), gd = gradient(down);
      if (gu.size() != n || gd.size() != n || !gu.allFinite() || !gd.allFinite()) {
        throw Error(ErrorKind::evaluation, "gradient evaluation failed");
      }
      j.col(c) = (gu - gd) / (2.0 * h);
    }
    return j;
  };
  const RMatrix coarse = jacobian(step);
  const RMatrix fine = jacobian(0.5 * step);
  return MetricMatrix{symmetrized((4.0 * fine - coarse) / 3.0), default_labels(n)};
}

RVector numerical_gradient(const ScalarFunction& f, const RVector& at, double step) {
  require_point(at);
  require_step(step);
  const auto diff = [&](double h) {
    RVector g(at.size());
    for (Index i = 0; i < at.size(); ++i) {
      RVector up = at, down = at;
      up(i) += h;
      down(i) -= h;
      g(i) = (checked(f(up)) - checked(f(down))) / (2.0 * h);
    }
    return g;
  };
  return (4.0 * diff(0.5 * step) - diff(step)) / 3.0;
}

MetricMatrix covariance_metric(const DensityOperator& rho, const CartanSet& cartan) {
  const RVector q = charges(rho, cartan).values;
  const Index r = cartan.rank();
  RMatrix g(r, r);
  for (Index i = 0; i < r; ++i) {
    for (Index j = i; j < r; ++j) {
      const double second =
          0.5 * (rho.matrix() * anticommutator(cartan[i].matrix(), cartan[j].matrix())).trace().real();
      g(i, j) = second - q(i) * q(j);
      g(j, i) = g(i, j);
    }
  }
  return MetricMatrix{g, cartan.labels()};
}

MetricMatrix fisher_from_divergence(const StateFamily& family, const RVector& theta_star, double step,
                                    Divergence divergence) {
  require_point(theta_star);
  if (divergence != Divergence::relative_entropy) {
    throw Error(ErrorKind::unsupported_divergence, "only quantum relative entropy is supported");
  }
  const DensityOperator sigma(family.state(theta_star), 1e-10);
  if (sigma.min_eigenvalue() <= Tolerances{}.faithfulness) {
    throw Error(ErrorKind::faithfulness, "fisher_from_divergence: anchor state is not faithful");
  }
  if (family.divergence_gradient) return hessian_from_gradient(family.divergence_gradient, theta_star, step);

  const ScalarFunction cost = [&](const RVector& theta) {
    const DensityOperator rho(family.state(theta), 1e-10);
    if (rho.min_eigenvalue() <= Tolerances{}.faithfulness) {
      throw Error(ErrorKind::faithfulness, "fisher_from_divergence: stencil state is not faithful");
    }
    return relative_entropy(rho, sigma);
  };
  return hessian_metric(cost, theta_star, step);
}

MetricMatrix classical_fisher(const ProbabilityFamily& family, const RVector& theta_star, double step) {
  require_point(theta_star);
  require_step(step);
  const auto probabilities = [&](const RVector& theta) {
    const RVector p = family(theta);
    if (p.size() == 0 || !p.allFinite()) throw Error(ErrorKind::evaluation, "classical_fisher: invalid probabilities");
    if (p.minCoeff() <= 0.0) throw Error(ErrorKind::support, "classical_fisher: zero probability in stencil");
    if (std::abs(p.sum() - 1.0) > Tolerances{}.equality) {
      throw Error(ErrorKind::domain, "classical_fisher: probabilities do not sum to one");
    }
    return p;
  };
  const RVector p0 = probabilities(theta_star);
  const Index n = theta_star.size();
  const auto score = [&](double h) {
    RMatrix s(p0.size(), n);
    for (Index i = 0; i < n; ++i) {
      RVector up = theta_star, down = theta_star;
      up(i) += h;
      down(i) -= h;
      const RVector pu = probabilities(up), pd = probabilities(down);
      if (pu.size() != p0.size() || pd.size() != p0.size()) {
        throw Error(ErrorKind::dimension, "classical_fisher: outcome count changes across the stencil");
      }
      s.col(i) = (pu.array().log() - pd.array().log()).matrix() / (2.0 * h);
    }
    return s;
  };
  const RMatrix d_log = (4.0 * score(0.5 * step) - score(step)) / 3.0;
  const RMatrix g = d_log.transpose() * p0.asDiagonal() * d_log;
  return MetricMatrix{symmetrized(g), default_labels(n)};
}

double path_cost(const std::vector<RVector>& path, const RMatrix& metric) {
  if (path.size() < 2) throw Error(ErrorKind::domain, "path_cost: at least two path points are required");
  const Index r = metric.rows();
  if (metric.cols() != r) throw Error(ErrorKind::dimension, "path_cost: metric must be square");
  for (const RVector& q : path) {
    if (q.size() != r) throw Error(ErrorKind::dimension, "path_cost: path point dimension differs from metric");
  }
  const double dtau = 1.0 / static_cast<double>(path.size() - 1);
  double cost = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    const RVector velocity = (path[k] - path[k - 1]) / dtau;
    cost += 0.5 * velocity.dot(metric * velocity) * dtau;
  }
  return cost;
}

DensityOperator gibbs_state(const CartanSet& cartan, const RVector& fields) {
  if (fields.size() != cartan.rank()) throw Error(ErrorKind::dimension, "gibbs_state: field count differs from rank");
  if (!fields.allFinite()) throw Error(ErrorKind::domain, "gibbs_state: non-finite fields");
  CMatrix h = CMatrix::Zero(cartan.dim(), cartan.dim());
  for (Index a = 0; a < cartan.rank(); ++a) h += fields(a) * cartan[a].matrix();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(h));
  const RVector energies = es.eigenvalues();
  RVector weights = (-(energies.array() - energies(0))).exp().matrix();
  weights /= weights.sum();
  const CMatrix rho = es.eigenvectors() * weights.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
  return DensityOperator(hermitian_part(rho), 1e-10);
}

StateFamily gibbs_family(const CartanSet& cartan) {
  return StateFamily{[cartan](const RVector& h) { return gibbs_state(cartan, h).matrix(); }, {}};
}

ResponseChainReport response_chain(const CMatrix& drho, const CartanSet& cartan, const RMatrix& metric, double gap,
                                   double perturbation_norm) {
  if (metric.rows() != cartan.rank() || metric.cols() != cartan.rank()) {
    throw Error(ErrorKind::dimension, "response_chain: metric size differs from Cartan rank");
  }
  if (!(gap > 0.0)) throw Error(ErrorKind::domain, "response_chain: gap must be positive");
  ResponseChainReport r;
  r.charge_shift = charge_map(drho, cartan);
  r.second_order_cost = 0.5 * r.charge_shift.dot(metric * r.charge_shift);
  for (const auto& h : cartan.generators()) r.lipschitz_constant = std::max(r.lipschitz_constant, operator_norm(h.matrix()));
  r.gap = gap;
  r.perturbation_norm = perturbation_norm;
  r.schematic_bound = r.lipschitz_constant * r.lipschitz_constant * perturbation_norm * perturbation_norm /
                      (2.0 * gap * gap);
  r.ratio = r.schematic_bound > 0.0 ? r.second_order_cost / r.schematic_bound : 0.0;
  return r;
}

}  // namespace nqs
