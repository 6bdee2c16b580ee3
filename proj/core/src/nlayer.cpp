#include "nqs/nlayer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace nqs {

// ---------------------------------------------------------------------------
// ContextGraph / ChargeField

ContextGraph::ContextGraph(std::vector<ContextVertex> vertices, std::vector<ContextEdge> edges)
    : vertices_(std::move(vertices)), edges_(std::move(edges)) {
  for (Index i = 0; i < static_cast<Index>(vertices_.size()); ++i) {
    const ContextVertex& v = vertices_[i];
    if (v.id.empty()) throw Error(ErrorKind::validation, "ContextGraph: empty vertex id");
    if (v.charge_dim < 1) throw Error(ErrorKind::validation, "ContextGraph: vertex '" + v.id + "' has no charges");
    if (!index_.emplace(v.id, i).second) throw Error(ErrorKind::validation, "ContextGraph: duplicate vertex '" + v.id + "'");
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (const ContextEdge& e : edges_) {
    if (!contains(e.source) || !contains(e.target)) {
      throw Error(ErrorKind::validation,
                  "ContextGraph: edge references unknown context '" + (contains(e.source) ? e.target : e.source) + "'");
    }
    if (e.source == e.target) throw Error(ErrorKind::validation, "ContextGraph: self-loop at '" + e.source + "'");
    if (!std::isfinite(e.weight) || e.weight < 0.0) {
      throw Error(ErrorKind::validation, "ContextGraph: edge weight must be finite and non-negative");
    }
    if (vertices_[index_.at(e.source)].charge_dim != vertices_[index_.at(e.target)].charge_dim) {
      throw Error(ErrorKind::validation, "ContextGraph: edge '" + e.source + "'-'" + e.target +
                                             "' joins charge spaces of different dimension");
    }
    const auto key = std::minmax(e.source, e.target);
    if (!seen.emplace(key.first, key.second).second) {
      throw Error(ErrorKind::validation, "ContextGraph: duplicate edge '" + e.source + "'-'" + e.target + "'");
    }
  }
}

Index ContextGraph::index_of(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorKind::field, "unknown context '" + id + "'");
  return it->second;
}

Index ContextGraph::degree(const std::string& id) const { return static_cast<Index>(neighbors(id).size()); }

std::vector<std::pair<std::string, double>> ContextGraph::neighbors(const std::string& id) const {
  index_of(id);
  std::vector<std::pair<std::string, double>> out;
  for (const ContextEdge& e : edges_) {
    if (e.source == id) out.emplace_back(e.target, e.weight);
    if (e.target == id) out.emplace_back(e.source, e.weight);
  }
  return out;
}

ContextGraph path_graph(Index n, double weight, Index charge_dim) {
  if (n < 1) throw Error(ErrorKind::domain, "path_graph: need at least one vertex");
  std::vector<ContextVertex> vertices;
  std::vector<ContextEdge> edges;
  char buf[32];
  for (Index i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "C%07ld", static_cast<long>(i));
    vertices.push_back({buf, charge_dim});
    if (i > 0) edges.push_back({vertices[i - 1].id, vertices[i].id, weight});
  }
  return ContextGraph(std::move(vertices), std::move(edges));
}

const RVector& ChargeField::at(const std::string& id) const {
  const auto it = values_.find(id);
  if (it == values_.end()) throw Error(ErrorKind::field, "charge field has no value at '" + id + "'");
  return it->second;
}

void ChargeField::validate_on(const ContextGraph& graph) const {
  for (const ContextVertex& v : graph.vertices()) {
    const RVector& q = at(v.id);
    if (q.size() != v.charge_dim) {
      throw Error(ErrorKind::field, "charge field at '" + v.id + "' has dimension " + std::to_string(q.size()) +
                                        ", expected " + std::to_string(v.charge_dim));
    }
    if (!q.allFinite()) throw Error(ErrorKind::field, "charge field at '" + v.id + "' is not finite");
  }
}

// ---------------------------------------------------------------------------
// Functionals

namespace {

Index functional_rank(const VertexFunctional& f) {
  return std::visit([](const auto& fn) -> Index {
    if constexpr (std::is_same_v<std::decay_t<decltype(fn)>, QuadraticFunctional>) {
      return fn.rank();
    } else {
      return fn.rank;
    }
  }, f);
}

double functional_value(const VertexFunctional& f, const RVector& q) {
  if (const auto* quad = std::get_if<QuadraticFunctional>(&f)) return quad->internal_cost(q);
  const auto& smooth = std::get<SmoothFunctional>(f);
  const double v = smooth.value(q);
  if (!std::isfinite(v)) throw Error(ErrorKind::evaluation, "functional returned a non-finite value");
  return v;
}

RVector functional_gradient(const VertexFunctional& f, const RVector& q) {
  if (const auto* quad = std::get_if<QuadraticFunctional>(&f)) return quad->gradient(q);
  const auto& smooth = std::get<SmoothFunctional>(f);
  RVector g = smooth.gradient ? smooth.gradient(q) : numerical_gradient(smooth.value, q);
  if (g.size() != q.size() || !g.allFinite()) throw Error(ErrorKind::evaluation, "functional gradient is invalid");
  return g;
}

RMatrix functional_hessian(const VertexFunctional& f, const RVector& q) {
  if (const auto* quad = std::get_if<QuadraticFunctional>(&f)) return quad->stiffness;
  const auto& smooth = std::get<SmoothFunctional>(f);
  RMatrix h;
  if (smooth.hessian) {
    h = smooth.hessian(q);
  } else if (smooth.gradient) {
    h = hessian_from_gradient(smooth.gradient, q).entries;
  } else {
    h = hessian_metric(smooth.value, q).entries;
  }
  if (h.rows() != q.size() || h.cols() != q.size() || !h.allFinite()) {
    throw Error(ErrorKind::evaluation, "functional Hessian is invalid");
  }
  return h;
}

/// Vertices in lexicographic id order with their offsets in the stacked
/// unknown vector. Assembly always uses this order.
struct Layout {
  std::vector<std::string> ids;
  std::map<std::string, Index> offset;
  std::map<std::string, Index> rank;
  Index size = 0;
};

Layout layout_of(const ContextGraph& graph) {
  Layout l;
  for (const auto& v : graph.vertices()) l.ids.push_back(v.id);
  std::sort(l.ids.begin(), l.ids.end());
  for (const auto& id : l.ids) {
    l.offset[id] = l.size;
    l.rank[id] = graph.vertices()[graph.index_of(id)].charge_dim;
    l.size += l.rank[id];
  }
  return l;
}

RVector stack(const Layout& l, const ChargeField& q) {
  RVector x(l.size);
  for (const auto& id : l.ids) x.segment(l.offset.at(id), l.rank.at(id)) = q.at(id);
  return x;
}

ChargeField unstack(const Layout& l, const RVector& x) {
  ChargeField q;
  for (const auto& id : l.ids) q.set(id, x.segment(l.offset.at(id), l.rank.at(id)));
  return q;
}

RMatrix coupling_matrix(const GlobalActionSpec& spec, const Layout& l) {
  RMatrix a = RMatrix::Zero(l.size, l.size);
  for (const ContextEdge& e : spec.graph.edges()) {
    const double c = spec.edge_coefficient(e.weight);
    const Index i = l.offset.at(e.source), j = l.offset.at(e.target), r = l.rank.at(e.source);
    for (Index k = 0; k < r; ++k) {
      a(i + k, i + k) += c;
      a(j + k, j + k) += c;
      a(i + k, j + k) -= c;
      a(j + k, i + k) -= c;
    }
  }
  return a;
}

double action_stacked(const GlobalActionSpec& spec, const Layout& l, const RVector& x) {
  return global_action(spec, unstack(l, x));
}

RVector gradient_stacked(const GlobalActionSpec& spec, const Layout& l, const RVector& x) {
  return stack(l, el_residual(spec, unstack(l, x)));
}

RMatrix hessian_stacked(const GlobalActionSpec& spec, const Layout& l, const RVector& x) {
  RMatrix h = coupling_matrix(spec, l);
  for (const auto& id : l.ids) {
    const Index o = l.offset.at(id), r = l.rank.at(id);
    h.block(o, o, r, r) += functional_hessian(spec.functionals.at(id), x.segment(o, r));
  }
  return 0.5 * (h + h.transpose());
}

double max_residual_stacked(const Layout& l, const RVector& g) {
  double worst = 0.0;
  for (const auto& id : l.ids) worst = std::max(worst, g.segment(l.offset.at(id), l.rank.at(id)).norm());
  return worst;
}

double min_eigenvalue(const RMatrix& h) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace

void GlobalActionSpec::validate() const {
  if (!std::isfinite(coupling) || coupling < 0.0) {
    throw Error(ErrorKind::validation, "GlobalActionSpec: coupling must be finite and non-negative");
  }
  for (const ContextVertex& v : graph.vertices()) {
    const auto it = functionals.find(v.id);
    if (it == functionals.end()) throw Error(ErrorKind::validation, "GlobalActionSpec: no functional for '" + v.id + "'");
    if (functional_rank(it->second) != v.charge_dim) {
      throw Error(ErrorKind::validation, "GlobalActionSpec: functional rank differs from charge dimension at '" +
                                             v.id + "'");
    }
  }
  for (const auto& [id, f] : functionals) {
    if (!graph.contains(id)) throw Error(ErrorKind::validation, "GlobalActionSpec: functional for unknown context '" + id + "'");
    if (const auto* smooth = std::get_if<SmoothFunctional>(&f); smooth && !smooth->value) {
      throw Error(ErrorKind::validation, "GlobalActionSpec: smooth functional at '" + id + "' has no value function");
    }
  }
}

ChargeField laplacian_apply(const ContextGraph& graph, const ChargeField& field) {
  field.validate_on(graph);
  std::map<std::string, RVector> out;
  for (const ContextVertex& v : graph.vertices()) out[v.id] = RVector::Zero(v.charge_dim);
  for (const ContextEdge& e : graph.edges()) {
    const RVector diff = field.at(e.source) - field.at(e.target);
    out[e.source] += e.weight * diff;
    out[e.target] -= e.weight * diff;
  }
  return ChargeField(std::move(out));
}

double global_action(const GlobalActionSpec& spec, const ChargeField& q) {
  spec.validate();
  q.validate_on(spec.graph);
  double value = 0.0;
  for (const ContextVertex& v : spec.graph.vertices()) value += functional_value(spec.functionals.at(v.id), q.at(v.id));
  for (const ContextEdge& e : spec.graph.edges()) {
    value += 0.5 * spec.edge_coefficient(e.weight) * (q.at(e.source) - q.at(e.target)).squaredNorm();
  }
  return value;
}

ChargeField el_residual(const GlobalActionSpec& spec, const ChargeField& q) {
  spec.validate();
  q.validate_on(spec.graph);
  std::map<std::string, RVector> out;
  for (const ContextVertex& v : spec.graph.vertices()) out[v.id] = functional_gradient(spec.functionals.at(v.id), q.at(v.id));
  for (const ContextEdge& e : spec.graph.edges()) {
    const RVector force = spec.edge_coefficient(e.weight) * (q.at(e.source) - q.at(e.target));
    out[e.source] += force;
    out[e.target] -= force;
  }
  return ChargeField(std::move(out));
}

double max_residual_norm(const ChargeField& residual) {
  double worst = 0.0;
  for (const auto& [id, r] : residual.values()) worst = std::max(worst, r.norm());
  return worst;
}

SelfConsistentSolution solve_self_consistent(const GlobalActionSpec& spec, const std::optional<ChargeField>& initial,
                                             double tol, Index max_iter) {
  spec.validate();
  if (!(tol > 0.0)) throw Error(ErrorKind::domain, "solve_self_consistent: tolerance must be positive");
  if (max_iter < 1) throw Error(ErrorKind::domain, "solve_self_consistent: iteration budget must be positive");
  const Layout l = layout_of(spec.graph);
  SelfConsistentSolution out;

  const bool quadratic = std::all_of(spec.functionals.begin(), spec.functionals.end(), [](const auto& kv) {
    return std::holds_alternative<QuadraticFunctional>(kv.second);
  });

  if (quadratic) {
    RMatrix a = coupling_matrix(spec, l);
    RVector b(l.size);
    for (const auto& id : l.ids) {
      const auto& f = std::get<QuadraticFunctional>(spec.functionals.at(id));
      const Index o = l.offset.at(id), r = l.rank.at(id);
      a.block(o, o, r, r) += f.stiffness;
      b.segment(o, r) = f.stiffness * f.preferred;
    }
    a = 0.5 * (a + a.transpose());
    out.hessian_min_eigenvalue = min_eigenvalue(a);
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    Eigen::LLT<RMatrix> llt(a);
    if (llt.info() != Eigen::Success || out.hessian_min_eigenvalue <= 1e-14 * scale) {
      throw Error(ErrorKind::degenerate_spec, "solve_self_consistent: assembled system is singular");
    }
    RVector x = llt.solve(b);
    for (int refine = 0; refine < 2; ++refine) x += llt.solve(b - a * x);
    out.q_star = unstack(l, x);
    out.residual_norm = max_residual_norm(el_residual(spec, out.q_star));
    out.iterations = 1;
    if (out.residual_norm > tol) {
      throw NonConvergenceError("solve_self_consistent: direct solve residual above tolerance", out.residual_norm);
    }
    return out;
  }

  RVector x(l.size);
  if (initial) {
    initial->validate_on(spec.graph);
    x = stack(l, *initial);
  } else {
    for (const auto& id : l.ids) {
      const auto& f = spec.functionals.at(id);
      const Index o = l.offset.at(id), r = l.rank.at(id);
      if (const auto* quad = std::get_if<QuadraticFunctional>(&f)) {
        x.segment(o, r) = quad->preferred;
      } else {
        x.segment(o, r).setZero();
      }
    }
  }

  RVector g = gradient_stacked(spec, l, x);
  double residual = max_residual_stacked(l, g);
  Index iter = 0;
  while (residual > tol) {
    if (iter >= max_iter) {
      throw NonConvergenceError("solve_self_consistent: iteration budget exhausted", residual);
    }
    ++iter;
    const RMatrix h = hessian_stacked(spec, l, x);
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    double shift = 0.0;
    Eigen::LLT<RMatrix> llt(h);
    while (llt.info() != Eigen::Success) {
      shift = shift == 0.0 ? 1e-8 * scale : 4.0 * shift;
      if (shift > 1e12 * scale) throw Error(ErrorKind::degenerate_spec, "solve_self_consistent: Hessian cannot be regularized");
      llt.compute(h + shift * RMatrix::Identity(l.size, l.size));
    }
    const RVector step = -llt.solve(g);
    const double s0 = action_stacked(spec, l, x);
    const double slope = g.dot(step);
    double t = 1.0;
    RVector trial = x + step;
    while (t > 1e-12) {
      trial = x + t * step;
      const double s = action_stacked(spec, l, trial);
      if (std::isfinite(s) && s <= s0 + 1e-4 * t * slope) break;
      t *= 0.5;
    }
    x = trial;
    g = gradient_stacked(spec, l, x);
    residual = max_residual_stacked(l, g);
  }

  out.q_star = unstack(l, x);
  out.residual_norm = residual;
  out.iterations = iter;
  out.hessian_min_eigenvalue = min_eigenvalue(hessian_stacked(spec, l, x));
  if (out.hessian_min_eigenvalue < -1e-8) {
    throw Error(ErrorKind::degenerate_spec, "solve_self_consistent: stationary point is not a local minimum");
  }
  return out;
}

ContinuumReport chain_continuum_report(Index n, double weight, const std::function<double(double)>& f,
                                       const std::function<double(double)>& second_derivative,
                                       std::optional<Index> refined_n) {
  if (n < 8) throw Error(ErrorKind::domain, "chain_continuum_report: need at least 8 vertices");
  if (!std::isfinite(weight) || weight <= 0.0) throw Error(ErrorKind::domain, "chain_continuum_report: weight must be positive");
  const Index fine = refined_n.value_or(2 * n);
  if (fine <= n) throw Error(ErrorKind::domain, "chain_continuum_report: refined vertex count must exceed n");

  const auto max_error = [&](Index count) {
    const ContextGraph graph = path_graph(count, weight);
    const double h = 1.0 / static_cast<double>(count - 1);
    ChargeField samples;
    for (Index i = 0; i < count; ++i) samples.set(graph.vertices()[i].id, RVector::Constant(1, f(i * h)));
    const ChargeField lap = laplacian_apply(graph, samples);
    double worst = 0.0;
    for (Index i = 1; i + 1 < count; ++i) {
      const double approx = lap.at(graph.vertices()[i].id)(0) / (weight * h * h);
      worst = std::max(worst, std::abs(approx + second_derivative(i * h)));
    }
    if (!std::isfinite(worst)) throw Error(ErrorKind::evaluation, "chain_continuum_report: non-finite samples");
    return worst;
  };

  ContinuumReport r;
  r.n = n;
  r.refined_n = fine;
  r.laplacian_error = max_error(n);
  r.refined_error = max_error(fine);
  const double h1 = 1.0 / static_cast<double>(n - 1), h2 = 1.0 / static_cast<double>(fine - 1);
  r.observed_order = (r.laplacian_error > 0.0 && r.refined_error > 0.0)
                         ? std::log(r.laplacian_error / r.refined_error) / std::log(h1 / h2)
                         : std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace nqs
