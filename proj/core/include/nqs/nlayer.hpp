#pragma once

// N-layer: context graphs, the context Laplacian, the global
// self-preservation action and its discrete self-consistency equations.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "nqs/slayer.hpp"

namespace nqs {

struct ContextVertex {
  std::string id;
  Index charge_dim = 1;
};

/// Undirected edge. Each unordered pair may appear at most once.
struct ContextEdge {
  std::string source;
  std::string target;
  double weight = 0.0;
};

class ContextGraph {
public:
  ContextGraph(std::vector<ContextVertex> vertices, std::vector<ContextEdge> edges);

  const std::vector<ContextVertex>& vertices() const noexcept { return vertices_; }
  const std::vector<ContextEdge>& edges() const noexcept { return edges_; }
  Index size() const noexcept { return static_cast<Index>(vertices_.size()); }

  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  /// Position in vertices(); throws ErrorKind::field for unknown ids.
  Index index_of(const std::string& id) const;
  Index degree(const std::string& id) const;
  /// (neighbor id, weight) pairs in edge-list order.
  std::vector<std::pair<std::string, double>> neighbors(const std::string& id) const;

private:
  std::vector<ContextVertex> vertices_;
  std::vector<ContextEdge> edges_;
  std::map<std::string, Index> index_;
};

/// Chain C0 - C1 - ... with uniform weight; ids are zero-padded so that
/// lexicographic and chain order agree.
ContextGraph path_graph(Index n, double weight, Index charge_dim = 1);

/// Context id -> charge vector.
class ChargeField {
public:
  ChargeField() = default;
  explicit ChargeField(std::map<std::string, RVector> values) : values_(std::move(values)) {}

  void set(const std::string& id, RVector q) { values_[id] = std::move(q); }
  /// Throws ErrorKind::field when the id is unassigned.
  const RVector& at(const std::string& id) const;
  bool contains(const std::string& id) const { return values_.count(id) != 0; }
  const std::map<std::string, RVector>& values() const noexcept { return values_; }

  /// Checks that every vertex is assigned with the right charge dimension.
  void validate_on(const ContextGraph& graph) const;

private:
  std::map<std::string, RVector> values_;
};

/// Differentiable per-context functional for the iterative solver path.
/// `hessian` is optional; finite differences of `gradient` are used otherwise.
struct SmoothFunctional {
  Index rank = 1;
  ScalarFunction value;
  GradientFunction gradient;
  std::function<RMatrix(const RVector&)> hessian;
};

using VertexFunctional = std::variant<QuadraticFunctional, SmoothFunctional>;

/// The per-edge coefficient in the action and the self-consistency
/// equations is (w + coupling): the neighbor term of each context's
/// functional is merged into the edge energy so it is not counted twice.
struct GlobalActionSpec {
  ContextGraph graph;
  std::map<std::string, VertexFunctional> functionals;
  double coupling = 0.0;

  void validate() const;
  double edge_coefficient(double weight) const { return weight + coupling; }
};

/// (Delta f)(C) = sum_{C' ~ C} w_{CC'} (f(C) - f(C')).
ChargeField laplacian_apply(const ContextGraph& graph, const ChargeField& field);

/// sum_C F_C(q(C)) + 1/2 sum_edges (w + coupling) ||q(C) - q(C')||^2,
/// each undirected edge counted once.
double global_action(const GlobalActionSpec& spec, const ChargeField& q);

/// grad F_C(q(C)) + sum_{C'~C} (w + coupling)(q(C) - q(C')).
ChargeField el_residual(const GlobalActionSpec& spec, const ChargeField& q);

/// max over vertices of the Euclidean residual norm.
double max_residual_norm(const ChargeField& residual);

struct SelfConsistentSolution {
  ChargeField q_star;
  double residual_norm = 0.0;
  Index iterations = 0;
  double hessian_min_eigenvalue = 0.0;
};

/// Quadratic specs are solved directly (iterations = 1); anything else by
/// damped Newton with backtracking. The initial field defaults to the
/// preferred charges (zero for smooth functionals).
SelfConsistentSolution solve_self_consistent(const GlobalActionSpec& spec,
                                             const std::optional<ChargeField>& initial = std::nullopt,
                                             double tol = 1e-10, Index max_iter = 10000);

struct ContinuumReport {
  Index n = 0;
  Index refined_n = 0;
  double laplacian_error = 0.0;
  double refined_error = 0.0;
  /// NaN when either error vanishes.
  double observed_order = 0.0;
};

/// Compares (Delta f)(x_i) / (w h^2) with -f''(x_i) on the interior of an
/// n-vertex path over [0, 1] and estimates the convergence order against
/// `refined_n` vertices (default 2n).
ContinuumReport chain_continuum_report(Index n, double weight, const std::function<double(double)>& f,
                                       const std::function<double(double)>& second_derivative,
                                       std::optional<Index> refined_n = std::nullopt);

}  // namespace nqs
