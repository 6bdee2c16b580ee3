#pragma once

// Scenario documents: a JSON surface describing contexts, a context graph
// and an ordered task list. Loading validates everything that can be
// checked without running an analysis.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nqs/cli/json_io.hpp"
#include "nqs/curvature.hpp"
#include "nqs/nlayer.hpp"

namespace nqs::cli {

inline constexpr const char* kFormatVersion = "nqs-geom/1";

/// Size caps keep malformed scenarios from exhausting memory or time.
struct Limits {
  static constexpr Index max_dim = 16;
  static constexpr std::size_t max_contexts = 256;
  static constexpr std::size_t max_edges = 4096;
  static constexpr std::size_t max_tasks = 256;
  static constexpr std::size_t max_operators = 64;
  static constexpr std::size_t max_thetas = 64;
  static constexpr int max_samples = 1000;
  static constexpr Index max_chain = 20000;
  static constexpr Index max_iterations = 1000000;
  static constexpr Index max_total_charges = 2048;  // dense solve-graph system size
};

struct Options {
  Tolerances tolerances;
  double fd_step = kDefaultHessianStep;
  std::optional<double> doeblin_t0;
  std::optional<std::uint64_t> seed;
};

struct DivergenceSpec {
  Divergence divergence = Divergence::relative_entropy;
  RVector anchor;  // Gibbs fields on the context's Cartan set
};

using FunctionalSpec = std::variant<std::monostate, QuadraticFunctional, DivergenceSpec>;

struct ContextSpec {
  std::string id;
  Index dim = 0;
  std::optional<GklsGenerator> generator;
  std::optional<CartanSet> cartan;
  FunctionalSpec functional;
};

/// A channel whose parameter may be tied to the holonomy sweep variable.
struct ChannelSpec {
  enum class Kind { identity, kraus, unitary, partial_swap } kind = Kind::identity;
  Index dim = 0;
  std::vector<CMatrix> kraus;
  CMatrix generator;  // unitary: U = exp(i * theta * generator)
  Index i = 0, j = 0; // partial swap indices
  double theta = 0.0; // fixed parameter, or multiplier of the sweep variable
  bool swept = false;

  Superoperator build(double sweep = 0.0) const;
  /// "unitary", "partial_swap (formal inverse)", ...
  std::string reading(double sweep = 1.0) const;
};

struct Direction {
  std::string label;
  Superoperator perturbation;
};

struct AnalyzeTask {
  std::string context;
  std::optional<double> t0;
};

struct SensitivityTask {
  std::string context;
  std::vector<Direction> directions;
  RVector dn;
  std::optional<double> t0;
  int samples = 0;  // > 0: seeded random perturbations instead of directions
  std::uint64_t seed = 0;
};

struct MetricTask {
  enum class Method { hessian, covariance, fisher } method = Method::hessian;
  std::string context;
  std::optional<RVector> at;
};

struct SolveGraphTask {
  double tol = 1e-10;
  Index max_iter = 10000;
};

struct HolonomyTask {
  std::string cartan_context;
  struct Edge {
    std::string source, target;
    ChannelSpec channel;
  };
  std::vector<Edge> loop;
  std::vector<double> thetas;
  std::vector<std::pair<std::string, ChannelSpec>> probes;
};

struct ChainDemoTask {
  enum class Function { sin_pi, linear, constant, cubic } function = Function::sin_pi;
  Index n = 50;
  std::optional<Index> refined_n;
  double weight = 1.0;
};

struct QutritDemoTask {
  std::string context;
};

struct ResponseChainTask {
  std::string context;
  std::vector<Direction> directions;
  RVector dn;
};

using TaskPayload = std::variant<AnalyzeTask, SensitivityTask, MetricTask, SolveGraphTask, HolonomyTask,
                                 ChainDemoTask, QutritDemoTask, ResponseChainTask>;

struct TaskSpec {
  std::string id;
  std::string kind;
  Json params;  // echoed verbatim as the task's inputs
  TaskPayload payload;
};

struct GraphSpec {
  double coupling = 0.0;
  std::vector<ContextEdge> edges;
};

struct Scenario {
  std::string name;
  Options options;
  std::vector<ContextSpec> contexts;
  std::optional<GraphSpec> graph;
  std::vector<TaskSpec> tasks;

  const ContextSpec& context(const std::string& id) const;
  /// Graph over all contexts with their Cartan ranks as charge dimensions.
  ContextGraph context_graph() const;
};

Scenario load_scenario(const std::string& text, const std::string& name = "scenario");
Scenario load_scenario_file(const std::string& path);

/// Task kinds in the order they are documented.
const std::vector<std::string>& task_kinds();

}  // namespace nqs::cli
