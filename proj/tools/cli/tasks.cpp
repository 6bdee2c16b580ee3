#include "nqs/cli/tasks.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <thread>

namespace nqs::cli {

namespace {

constexpr double kPi = 3.14159265358979323846;

Json spectrum_json(const std::vector<Complex>& values) {
  Json out = Json::array();
  for (const Complex& z : values) out.push_back(Json::array({number(z.real()), number(z.imag())}));
  return out;
}

Json labels_json(const std::vector<std::string>& labels) {
  Json out = Json::array();
  for (const auto& l : labels) out.push_back(l);
  return out;
}

std::optional<double> doeblin_time(const Scenario& s, const std::optional<double>& task_t0) {
  return task_t0 ? task_t0 : s.options.doeblin_t0;
}

Superoperator generator_of(const ContextSpec& c) { return build_superoperator(*c.generator); }

Superoperator random_direction(Index dim, std::uint64_t seed, std::uint64_t sample) {
  const std::uint64_t base = seed * 0x9E3779B97F4A7C15ULL + 2 * sample;
  return build_superoperator(random_gkls(dim, base)) - build_superoperator(random_gkls(dim, base + 1));
}

std::vector<Neighbor> graph_neighbors(const Scenario& s, const ContextSpec& c, Index rank) {
  std::vector<Neighbor> out;
  if (!s.graph) return out;
  const ContextGraph g = s.context_graph();
  for (const auto& [id, w] : g.neighbors(c.id)) {
    (void)w;
    const ContextSpec& other = s.context(id);
    RVector q = RVector::Zero(rank);
    if (const auto* f = std::get_if<QuadraticFunctional>(&other.functional)) q = f->preferred;
    out.push_back({q, s.graph->coupling});
  }
  return out;
}

std::vector<std::string> charge_labels(const ContextSpec& c, Index rank) {
  if (c.cartan && c.cartan->rank() == rank) return c.cartan->labels();
  std::vector<std::string> out;
  for (Index i = 0; i < rank; ++i) out.push_back("q" + std::to_string(i));
  return out;
}

/// Hessian of the context's own functional: the quadratic form with its
/// graph neighbors (coupling lambda per neighbor), or the divergence in
/// the Gibbs field coordinates.
MetricMatrix functional_hessian(const Scenario& s, const ContextSpec& c, const std::optional<RVector>& at) {
  if (const auto* f = std::get_if<QuadraticFunctional>(&c.functional)) {
    const std::vector<Neighbor> nb = graph_neighbors(s, c, f->rank());
    MetricMatrix m = hessian_metric([&](const RVector& q) { return quadratic_cost(q, *f, nb); },
                                    at.value_or(f->preferred), s.options.fd_step);
    m.labels = charge_labels(c, f->rank());
    return m;
  }
  const auto& d = std::get<DivergenceSpec>(c.functional);
  const DivergenceFunctional fn{gibbs_family(*c.cartan), d.anchor, d.divergence};
  MetricMatrix m = hessian_metric([&](const RVector& th) { return fn(th); }, at.value_or(d.anchor), s.options.fd_step);
  m.labels = c.cartan->labels();
  return m;
}

Json metric_outputs(const MetricMatrix& m, Json& flags) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(0.5 * (m.entries + m.entries.transpose()), Eigen::EigenvaluesOnly);
  const double asym = (m.entries - m.entries.transpose()).cwiseAbs().maxCoeff();
  flags["symmetric"] = asym <= 1e-10;
  flags["positive_semidefinite"] = es.eigenvalues()(0) >= -1e-8;
  return Json{{"labels", labels_json(m.labels)},
              {"metric", to_json(m.entries)},
              {"eigenvalues", to_json(RVector(es.eigenvalues()))}};
}

void analyze(const Scenario& s, const AnalyzeTask& t, TaskResult& r) {
  const ContextSpec& c = s.context(t.context);
  const Superoperator l = generator_of(c);
  const PrimitivityReport prim = primitivity_report(l, s.options.tolerances.faithfulness);
  r.outputs["stationary_kernel_dim"] = prim.stationary_kernel_dim;
  if (prim.min_eig_of_stationary) r.outputs["min_eig_of_stationary"] = number(*prim.min_eig_of_stationary);
  r.flags["primitive"] = prim.primitive;
  if (!prim.primitive) {
    throw Error(ErrorKind::non_primitive, prim.stationary_kernel_dim != 1
                                              ? "stationary state is not unique (kernel dimension " +
                                                    std::to_string(prim.stationary_kernel_dim) + ")"
                                              : "stationary state is not faithful");
  }
  const QContextReport q = analyze_context(l, doeblin_time(s, t.t0));
  r.outputs["stationary"] = to_json(q.stationary.matrix());
  r.outputs["gap"] = number(q.gap);
  r.outputs["doeblin_time"] = number(q.doeblin_time);
  r.outputs["doeblin_epsilon"] = number(q.doeblin_epsilon);
  if (q.doeblin_epsilon > 0.0 && q.doeblin_epsilon < 1.0) {
    const double dg = doeblin_gap(q.doeblin_epsilon, q.doeblin_time);
    r.outputs["doeblin_gap"] = number(dg);
    r.flags["doeblin_gap_within_gap"] = dg <= q.gap + 1e-9;
  }
  r.outputs["certified_sensitivity_factor"] = number(q.certified_sensitivity_factor);
  r.outputs["stationary_residual"] = number(trace_norm(l.apply(q.stationary.matrix())));
  r.outputs["spectrum"] = spectrum_json(q.eigenvalues);
}

void sensitivity(const Scenario& s, const SensitivityTask& t, TaskResult& r) {
  const ContextSpec& c = s.context(t.context);
  const Superoperator l = generator_of(c);
  const std::optional<double> t0 = doeblin_time(s, t.t0);
  if (t.samples > 0) {
    int certified_violations = 0, nominal_violations = 0;
    double worst_certified = 0.0, worst_nominal = 0.0;
    for (int i = 0; i < t.samples; ++i) {
      const SensitivityReport rep = sensitivity_report(l, random_direction(c.dim, t.seed, static_cast<std::uint64_t>(i)), t0);
      certified_violations += !rep.certified_satisfied;
      nominal_violations += !rep.nominal_satisfied;
      if (rep.rhs_certified > 0.0) worst_certified = std::max(worst_certified, rep.lhs / rep.rhs_certified);
      if (rep.rhs_nominal > 0.0) worst_nominal = std::max(worst_nominal, rep.lhs / rep.rhs_nominal);
    }
    r.outputs["samples"] = t.samples;
    r.outputs["seed"] = t.seed;
    r.outputs["certified_violations"] = certified_violations;
    r.outputs["nominal_violations"] = nominal_violations;
    r.outputs["max_certified_ratio"] = number(worst_certified);
    r.outputs["max_nominal_ratio"] = number(worst_nominal);
    r.flags["certified_satisfied"] = certified_violations == 0;
    r.flags["nominal_satisfied"] = nominal_violations == 0;
    return;
  }
  std::vector<std::pair<std::string, Superoperator>> dirs;
  for (const auto& d : t.directions) dirs.emplace_back(d.label, d.perturbation);
  const SensitivityTriple triple = make_sensitivity_triple(l, ResponseMap(c.id, dirs), t.dn);
  const SensitivityReport rep = sensitivity_report(l, triple.dl, t0);
  const CMatrix stat = stationary_state(l).matrix();
  r.outputs["lhs"] = number(rep.lhs);
  r.outputs["rhs_nominal"] = number(rep.rhs_nominal);
  r.outputs["rhs_certified"] = number(rep.rhs_certified);
  r.outputs["gap"] = number(rep.gap);
  r.outputs["doeblin_epsilon"] = number(rep.doeblin_epsilon);
  r.outputs["doeblin_time"] = number(rep.doeblin_time);
  r.outputs["perturbation_norm"] = number(rep.perturbation_norm);
  r.outputs["poisson_residual"] = number(trace_norm(l.apply(triple.drho) + triple.dl.apply(stat)));
  r.outputs["drho"] = to_json(triple.drho);
  r.flags["nominal_satisfied"] = rep.nominal_satisfied;
  r.flags["certified_satisfied"] = rep.certified_satisfied;
}

void metric(const Scenario& s, const MetricTask& t, TaskResult& r) {
  const ContextSpec& c = s.context(t.context);
  MetricMatrix m;
  switch (t.method) {
    case MetricTask::Method::hessian:
      m = functional_hessian(s, c, t.at);
      if (std::holds_alternative<QuadraticFunctional>(c.functional) && s.graph) {
        r.outputs["degree"] = s.context_graph().degree(c.id);
        r.outputs["coupling"] = number(s.graph->coupling);
      }
      break;
    case MetricTask::Method::covariance: {
      const DensityOperator rho = std::holds_alternative<DivergenceSpec>(c.functional)
                                      ? gibbs_state(*c.cartan, std::get<DivergenceSpec>(c.functional).anchor)
                                      : stationary_state(generator_of(c));
      m = covariance_metric(rho, *c.cartan);
      r.outputs["charges"] = to_json(charges(rho, *c.cartan).values);
      break;
    }
    case MetricTask::Method::fisher: {
      const auto& d = std::get<DivergenceSpec>(c.functional);
      m = fisher_from_divergence(gibbs_family(*c.cartan), t.at.value_or(d.anchor), s.options.fd_step, d.divergence);
      m.labels = c.cartan->labels();
      break;
    }
  }
  Json out = metric_outputs(m, r.flags);
  for (auto& item : out.items()) r.outputs[item.key()] = item.value();
}

void solve_graph(const Scenario& s, const SolveGraphTask& t, TaskResult& r) {
  std::map<std::string, VertexFunctional> fns;
  for (const auto& c : s.contexts) {
    if (const auto* q = std::get_if<QuadraticFunctional>(&c.functional)) {
      fns.emplace(c.id, *q);
    } else {
      const auto& d = std::get<DivergenceSpec>(c.functional);
      const DivergenceFunctional div{gibbs_family(*c.cartan), d.anchor, d.divergence};
      SmoothFunctional sf;
      sf.rank = c.cartan->rank();
      sf.value = [div](const RVector& th) { return div(th); };
      fns.emplace(c.id, sf);
    }
  }
  const GlobalActionSpec spec{s.context_graph(), fns, s.graph ? s.graph->coupling : 0.0};
  const SelfConsistentSolution sol = solve_self_consistent(spec, std::nullopt, t.tol, t.max_iter);
  const ChargeField residual = el_residual(spec, sol.q_star);
  Json q = Json::object(), res = Json::object();
  for (const auto& c : s.contexts) {
    q[c.id] = to_json(sol.q_star.at(c.id));
    res[c.id] = number(residual.at(c.id).norm());
  }
  r.outputs["q_star"] = std::move(q);
  r.outputs["residuals"] = std::move(res);
  r.outputs["max_residual"] = number(sol.residual_norm);
  r.outputs["iterations"] = sol.iterations;
  r.outputs["hessian_min_eigenvalue"] = number(sol.hessian_min_eigenvalue);
  r.outputs["action"] = number(global_action(spec, sol.q_star));
  r.flags["converged"] = sol.residual_norm <= t.tol;
  r.flags["local_minimum"] = sol.hessian_min_eigenvalue >= -1e-8;
}

void holonomy(const Scenario& s, const HolonomyTask& t, TaskResult& r) {
  const CartanSet& cartan = *s.context(t.cartan_context).cartan;
  const LoopBuilder builder = [&](double theta) {
    std::vector<TransportMap> loop;
    for (const auto& e : t.loop) loop.push_back(charge_transport(e.channel.build(theta), cartan, e.source, e.target));
    return loop;
  };
  const HolonomyReport h = holonomy_fit(builder, t.thetas, cartan.rank());
  Json loop = Json::array();
  for (const auto& e : t.loop) loop.push_back(Json{{"source", e.source}, {"target", e.target}, {"reading", e.channel.reading()}});
  Json sweep = Json::array();
  for (const auto& [theta, norm] : h.theta_sweep) sweep.push_back(Json::array({number(theta), number(norm)}));
  r.outputs["labels"] = labels_json(cartan.labels());
  r.outputs["loop"] = std::move(loop);
  r.outputs["theta_sweep"] = std::move(sweep);
  r.outputs["fitted_exponent"] = number(h.fitted_exponent);
  r.outputs["fitted_K"] = to_json(h.fitted_k);
  r.outputs["deviation_matrix"] = to_json(h.deviation_matrix);
  if (!t.probes.empty()) {
    Json probes = Json::object();
    for (const auto& [label, ch] : t.probes) probes[label] = to_json(charge_transport(ch.build(), cartan).matrix);
    r.outputs["probe_transports"] = std::move(probes);
  }
  r.flags["flat"] = h.flat;
  bool zero_at_origin = true;
  for (const auto& [theta, norm] : h.theta_sweep) zero_at_origin = zero_at_origin && (theta != 0.0 || norm == 0.0);
  r.flags["zero_at_theta_zero"] = zero_at_origin;
}

void chain_demo(const ChainDemoTask& t, TaskResult& r) {
  std::function<double(double)> f, f2;
  switch (t.function) {
    case ChainDemoTask::Function::sin_pi:
      f = [](double x) { return std::sin(kPi * x); };
      f2 = [](double x) { return -kPi * kPi * std::sin(kPi * x); };
      break;
    case ChainDemoTask::Function::linear:
      f = [](double x) { return 2.0 * x + 1.0; };
      f2 = [](double) { return 0.0; };
      break;
    case ChainDemoTask::Function::constant:
      f = [](double) { return 1.0; };
      f2 = [](double) { return 0.0; };
      break;
    case ChainDemoTask::Function::cubic:
      f = [](double x) { return x * x * x - x; };
      f2 = [](double x) { return 6.0 * x; };
      break;
  }
  const ContinuumReport c = chain_continuum_report(t.n, t.weight, f, f2, t.refined_n);
  r.outputs["n"] = c.n;
  r.outputs["refined_n"] = c.refined_n;
  r.outputs["laplacian_error"] = number(c.laplacian_error);
  r.outputs["refined_error"] = number(c.refined_error);
  r.outputs["observed_order"] = number(c.observed_order);
}

void qutrit_demo(const Scenario& s, const QutritDemoTask& t, TaskResult& r) {
  const ContextSpec& c = s.context(t.context);
  const auto& d = std::get<DivergenceSpec>(c.functional);
  const DensityOperator rho = gibbs_state(*c.cartan, d.anchor);
  const MetricMatrix fisher = fisher_from_divergence(gibbs_family(*c.cartan), d.anchor, s.options.fd_step, d.divergence);
  const MetricMatrix cov = covariance_metric(rho, *c.cartan);
  const double diff = (fisher.entries - cov.entries).cwiseAbs().maxCoeff();
  r.outputs["labels"] = labels_json(c.cartan->labels());
  r.outputs["anchor"] = to_json(d.anchor);
  r.outputs["charges"] = to_json(charges(rho, *c.cartan).values);
  r.outputs["fisher"] = to_json(fisher.entries);
  r.outputs["covariance"] = to_json(cov.entries);
  r.outputs["max_difference"] = number(diff);
  r.flags["fisher_matches_covariance"] = diff <= 1e-4;
}

void response(const Scenario& s, const ResponseChainTask& t, TaskResult& r) {
  const ContextSpec& c = s.context(t.context);
  const Superoperator l = generator_of(c);
  std::vector<std::pair<std::string, Superoperator>> dirs;
  for (const auto& d : t.directions) dirs.emplace_back(d.label, d.perturbation);
  const SensitivityTriple triple = make_sensitivity_triple(l, ResponseMap(c.id, dirs), t.dn);
  MetricMatrix m = functional_hessian(s, c, std::nullopt);
  if (m.entries.rows() != c.cartan->rank()) {
    throw Error(ErrorKind::dimension, "response-chain: functional rank differs from the Cartan rank");
  }
  const double gap = spectral_gap(l);
  const double pn = trace_norm(triple.dl.apply(stationary_state(l).matrix()));
  const ResponseChainReport rep = response_chain(triple.drho, *c.cartan, m.entries, gap, pn);
  r.outputs["charge_shift"] = to_json(rep.charge_shift);
  r.outputs["second_order_cost"] = number(rep.second_order_cost);
  r.outputs["lipschitz_constant"] = number(rep.lipschitz_constant);
  r.outputs["gap"] = number(rep.gap);
  r.outputs["perturbation_norm"] = number(rep.perturbation_norm);
  r.outputs["schematic_bound"] = number(rep.schematic_bound);
  r.outputs["ratio"] = number(rep.ratio);
  r.outputs["metric"] = to_json(m.entries);
  r.flags["diagnostic_only"] = true;
}

}  // namespace

TaskResult run_task(const Scenario& scenario, const TaskSpec& task) {
  TaskResult r;
  r.id = task.id;
  r.kind = task.kind;
  r.inputs = task.params;
  try {
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, AnalyzeTask>) analyze(scenario, p, r);
          else if constexpr (std::is_same_v<T, SensitivityTask>) sensitivity(scenario, p, r);
          else if constexpr (std::is_same_v<T, MetricTask>) metric(scenario, p, r);
          else if constexpr (std::is_same_v<T, SolveGraphTask>) solve_graph(scenario, p, r);
          else if constexpr (std::is_same_v<T, HolonomyTask>) holonomy(scenario, p, r);
          else if constexpr (std::is_same_v<T, ChainDemoTask>) chain_demo(p, r);
          else if constexpr (std::is_same_v<T, QutritDemoTask>) qutrit_demo(scenario, p, r);
          else response(scenario, p, r);
        },
        task.payload);
  } catch (const NonConvergenceError& e) {
    r.ok = false;
    r.error = TaskError{std::string(to_string(e.kind())), e.what()};
    r.outputs["last_residual"] = number(e.last_residual());
  } catch (const Error& e) {
    r.ok = false;
    r.error = TaskError{std::string(to_string(e.kind())), e.what()};
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = TaskError{"internal", e.what()};
  }
  return r;
}

Report run_tasks(const Scenario& scenario, const RunOptions& options) {
  Report report;
  report.version = kFormatVersion;
  report.scenario = scenario.name;
  const std::size_t n = scenario.tasks.size();
  report.results.resize(n);

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const auto start = std::chrono::steady_clock::now();
      TaskResult r = run_task(scenario, scenario.tasks[i]);
      if (options.timing) {
        r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      }
      report.results[i] = std::move(r);
    }
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, options.jobs)), n);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < workers; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return report;
}

}  // namespace nqs::cli
