#include "nqs/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>

namespace nqs {

ResponseMap::ResponseMap(std::string context, std::vector<std::pair<std::string, Superoperator>> directions,
                         double tol)
    : context_(std::move(context)), directions_(std::move(directions)), dim_(0) {
  if (directions_.empty()) throw Error(ErrorKind::validation, "ResponseMap: no openness directions");
  dim_ = directions_.front().second.dim();
  for (const auto& [label, dl] : directions_) {
    if (dl.dim() != dim_) throw Error(ErrorKind::dimension, "ResponseMap: direction '" + label + "' has wrong dimension");
    const double scale = std::max(1.0, dl.matrix().cwiseAbs().maxCoeff());
    if (trace_annihilation_defect(dl.matrix(), dim_) > tol * scale) {
      throw Error(ErrorKind::invalid_perturbation, "ResponseMap: direction '" + label + "' does not annihilate the trace");
    }
  }
}

Superoperator ResponseMap::operator()(const RVector& dn) const {
  if (dn.size() != size()) {
    throw Error(ErrorKind::dimension, "ResponseMap: dN has " + std::to_string(dn.size()) + " entries, expected " +
                                          std::to_string(size()));
  }
  if (!dn.allFinite()) throw Error(ErrorKind::domain, "ResponseMap: dN is not finite");
  CMatrix sum = CMatrix::Zero(dim_ * dim_, dim_ * dim_);
  for (Index i = 0; i < size(); ++i) sum += dn(i) * directions_[static_cast<std::size_t>(i)].second.matrix();
  return Superoperator(dim_, std::move(sum));
}

SensitivityTriple make_sensitivity_triple(const Superoperator& generator, const ResponseMap& xi, const RVector& dn) {
  if (xi.dim() != generator.dim()) throw Error(ErrorKind::dimension, "make_sensitivity_triple: dimension mismatch");
  Superoperator dl = xi(dn);
  CMatrix drho = solve_poisson(generator, dl);
  return {dn, std::move(dl), std::move(drho)};
}

TransportMap charge_transport(const Superoperator& channel, const CartanSet& cartan, std::string source,
                              std::string target) {
  if (channel.dim() != cartan.dim()) throw Error(ErrorKind::dimension, "charge_transport: dimension mismatch");
  const Index r = cartan.rank();
  const RMatrix g = cartan.gram();
  Eigen::FullPivLU<RMatrix> lu(g);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw Error(ErrorKind::degenerate_cartan, "charge_transport: Cartan generators are linearly dependent");

  const Superoperator heisenberg = channel.adjoint();
  RMatrix a(r, r);
  for (Index b = 0; b < r; ++b) {
    const CMatrix image = heisenberg.apply(cartan[b].matrix());
    for (Index i = 0; i < r; ++i) a(i, b) = (cartan[i].matrix() * image).trace().real();
  }
  // Psi^dagger(H_b) = sum_a C_ab H_a + (outside the span) with C = G^{-1} A;
  // charges then move as q'_b = sum_a C_ab q_a.
  RMatrix m = lu.solve(a).transpose();
  if (!m.allFinite()) throw Error(ErrorKind::evaluation, "charge_transport: non-finite transport");
  return {std::move(source), std::move(target), std::move(m)};
}

RMatrix loop_holonomy(std::span<const TransportMap> transports, Index rank) {
  if (rank < 1) throw Error(ErrorKind::dimension, "loop_holonomy: rank must be positive");
  RMatrix product = RMatrix::Identity(rank, rank);
  if (transports.empty()) return RMatrix::Zero(rank, rank);
  for (std::size_t k = 0; k < transports.size(); ++k) {
    const TransportMap& t = transports[k];
    if (t.matrix.rows() != rank || t.matrix.cols() != rank) {
      throw Error(ErrorKind::dimension, "loop_holonomy: transport " + std::to_string(k) + " has wrong size");
    }
    if (k > 0 && transports[k - 1].target != t.source) {
      throw Error(ErrorKind::loop, "loop_holonomy: edge " + std::to_string(k) + " starts at '" + t.source +
                                       "' but the previous edge ends at '" + transports[k - 1].target + "'");
    }
    product = t.matrix * product;
  }
  if (transports.back().target != transports.front().source) {
    throw Error(ErrorKind::loop, "loop_holonomy: path from '" + transports.front().source + "' ends at '" +
                                     transports.back().target + "'");
  }
  return product - RMatrix::Identity(rank, rank);
}

Superoperator partial_swap_channel(Index dim, Index i, Index j, double theta) {
  if (dim < 2 || i < 0 || j < 0 || i >= dim || j >= dim || i == j) {
    throw Error(ErrorKind::domain, "partial_swap_channel: need distinct basis indices below the dimension");
  }
  if (!std::isfinite(theta)) throw Error(ErrorKind::domain, "partial_swap_channel: theta is not finite");
  CMatrix s = CMatrix::Identity(dim, dim);
  s(i, i) = s(j, j) = 0.0;
  s(i, j) = s(j, i) = 1.0;
  const CMatrix m = (1.0 - theta) * CMatrix::Identity(dim * dim, dim * dim) + theta * kron(s.transpose(), s);
  const MapKind kind = (theta >= 0.0 && theta <= 1.0) ? MapKind::channel : MapKind::general;
  return Superoperator(dim, m, kind);
}

HolonomyReport holonomy_fit(const LoopBuilder& builder, const std::vector<double>& thetas, Index rank) {
  std::vector<double> positive;
  for (double t : thetas) {
    if (!std::isfinite(t) || t < 0.0 || t >= 0.5) throw Error(ErrorKind::domain, "holonomy_fit: theta must lie in [0, 0.5)");
    if (t > 0.0) positive.push_back(t);
  }
  if (positive.size() < 3) throw Error(ErrorKind::domain, "holonomy_fit: need at least three positive theta values");

  HolonomyReport report;
  double theta_min = std::numeric_limits<double>::infinity();
  for (double t : thetas) {
    const std::vector<TransportMap> loop = builder(t);
    const RMatrix dev = loop_holonomy(loop, rank);
    report.theta_sweep.emplace_back(t, dev.norm());
    if (t > 0.0 && t < theta_min) {
      theta_min = t;
      report.deviation_matrix = dev;
      report.loop.clear();
      for (const auto& edge : loop) report.loop.emplace_back(edge.source, edge.target);
    }
  }

  // Least-squares slope of log ||R|| against log theta.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  bool all_flat = true;
  for (const auto& [t, norm] : report.theta_sweep) {
    if (t <= 0.0) continue;
    if (norm >= 1e-14) all_flat = false;
    if (norm <= 0.0) continue;
    const double x = std::log(t), y = std::log(norm);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  report.flat = all_flat;
  const double denom = count * sxx - sx * sx;
  report.fitted_exponent = (!all_flat && count >= 2 && denom > 0.0) ? (count * sxy - sx * sy) / denom
                                                                    : std::numeric_limits<double>::quiet_NaN();
  report.fitted_k = report.deviation_matrix / (theta_min * theta_min);
  return report;
}

LoopBuilder unitary_round_trip(const CMatrix& generator, const CartanSet& cartan, double scale) {
  if (generator.rows() != cartan.dim() || generator.cols() != cartan.dim()) {
    throw Error(ErrorKind::dimension, "unitary_round_trip: generator dimension mismatch");
  }
  HermitianOperator g(generator);
  return [g = g.matrix(), cartan, scale](double theta) {
    const CMatrix u = matrix_exponential(Complex(0.0, scale) * g, theta);
    std::vector<TransportMap> loop;
    loop.push_back(charge_transport(Superoperator::unitary_conjugation(u), cartan, "C0", "C1"));
    loop.push_back(charge_transport(Superoperator::unitary_conjugation(u.adjoint()), cartan, "C1", "C0"));
    return loop;
  };
}

LoopBuilder partial_swap_round_trip(Index i, Index j, const CartanSet& cartan, SwapReturn back) {
  partial_swap_channel(cartan.dim(), i, j, 0.0);
  return [i, j, cartan, back](double theta) {
    const double back_theta = back == SwapReturn::formal_inverse ? -theta : theta;
    std::vector<TransportMap> loop;
    loop.push_back(charge_transport(partial_swap_channel(cartan.dim(), i, j, theta), cartan, "C0", "C1"));
    loop.push_back(charge_transport(partial_swap_channel(cartan.dim(), i, j, back_theta), cartan, "C1", "C0"));
    return loop;
  };
}

}  // namespace nqs
