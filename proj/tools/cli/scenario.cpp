#include "nqs/cli/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace nqs::cli {

namespace {

/// Runs a library constructor and reports its failure at `where`.
template <class Fn>
auto guarded(const Node& where, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    where.fail(std::string(to_string(e.kind())) + ": " + e.what());
  }
}

std::string parse_position(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

Superoperator kraus_channel(const std::vector<CMatrix>& ops, Index dim) {
  CMatrix m = CMatrix::Zero(dim * dim, dim * dim);
  for (const CMatrix& k : ops) m += kron(k.conjugate(), k);
  return Superoperator(dim, m, MapKind::channel);
}

class Loader {
public:
  explicit Loader(const Json& root) : root_(root, "") {}

  Scenario load(std::string name) {
    root_.only_keys({"version", "name", "options", "contexts", "graph", "tasks"});
    const Node version = root_["version"];
    if (version.string() != kFormatVersion) version.fail("unsupported version (expected \"" + std::string(kFormatVersion) + "\")");
    s_.name = root_.has("name") ? root_["name"].string() : std::move(name);
    if (root_.has("options")) load_options(root_["options"]);
    load_contexts(root_["contexts"]);
    if (root_.has("graph")) load_graph(root_["graph"]);
    load_tasks(root_.has("tasks") ? root_["tasks"] : Node(empty_, "/tasks"));
    return std::move(s_);
  }

private:
  void load_options(const Node& n) {
    n.only_keys({"tolerances", "fd_step", "doeblin_t0", "seed"});
    if (n.has("tolerances")) {
      const Node t = n["tolerances"];
      t.only_keys({"construction", "equality", "faithfulness"});
      if (t.has("construction")) s_.options.tolerances.construction = t["construction"].positive();
      if (t.has("equality")) s_.options.tolerances.equality = t["equality"].positive();
      if (t.has("faithfulness")) s_.options.tolerances.faithfulness = t["faithfulness"].positive();
    }
    if (n.has("fd_step")) {
      const Node h = n["fd_step"];
      s_.options.fd_step = h.positive();
      if (s_.options.fd_step > 0.1) h.fail("finite-difference step must not exceed 0.1");
    }
    if (n.has("doeblin_t0") && !n["doeblin_t0"].value().is_null()) s_.options.doeblin_t0 = n["doeblin_t0"].positive();
    if (n.has("seed")) s_.options.seed = n["seed"].seed();
  }

  double tol() const { return s_.options.tolerances.construction; }

  CMatrix square(const Node& n, Index dim) const {
    const CMatrix m = n.complex_matrix(Limits::max_dim);
    if (m.rows() != dim || m.cols() != dim) {
      n.fail("expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
    }
    return m;
  }

  std::vector<CMatrix> operator_list(const Node& n, Index dim) const {
    n.expect_array(Limits::max_operators);
    std::vector<CMatrix> out;
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back(square(n[i], dim));
    return out;
  }

  ChannelSpec channel(const Node& n, Index dim, bool swept) const {
    n.only_keys({"kind", "operators", "generator", "theta", "i", "j"});
    ChannelSpec c;
    c.dim = dim;
    c.swept = swept;
    const std::string kind = n["kind"].string();
    if (kind == "identity") {
      c.kind = ChannelSpec::Kind::identity;
    } else if (kind == "kraus") {
      c.kind = ChannelSpec::Kind::kraus;
      c.kraus = operator_list(n["operators"], dim);
      if (c.kraus.empty()) n["operators"].fail("at least one Kraus operator is required");
      CMatrix sum = CMatrix::Zero(dim, dim);
      for (const auto& k : c.kraus) sum += k.adjoint() * k;
      if ((sum - CMatrix::Identity(dim, dim)).cwiseAbs().maxCoeff() > s_.options.tolerances.equality) {
        n["operators"].fail("Kraus operators are not trace preserving");
      }
    } else if (kind == "unitary") {
      c.kind = ChannelSpec::Kind::unitary;
      const Node g = n["generator"];
      c.generator = guarded(g, [&] { return HermitianOperator(square(g, dim), tol()).matrix(); });
      c.theta = swept ? (n.has("theta") ? n["theta"].real() : 1.0) : n["theta"].real();
    } else if (kind == "partial_swap") {
      c.kind = ChannelSpec::Kind::partial_swap;
      if (dim < 2) n.fail("partial swap needs dimension at least 2");
      c.i = n["i"].integer(0, dim - 1);
      c.j = n["j"].integer(0, dim - 1);
      if (c.i == c.j) n["j"].fail("swap indices must differ");
      c.theta = swept ? (n.has("theta") ? n["theta"].real() : 1.0) : n["theta"].real();
      if (!swept && (c.theta < 0.0 || c.theta > 1.0)) n["theta"].fail("a physical partial swap needs theta in [0, 1]");
    } else {
      n["kind"].fail("unknown channel kind '" + kind + "'");
    }
    return c;
  }

  GklsGenerator generator(const Node& n, Index dim) const {
    const std::string form = n["form"].string();
    if (form == "hamiltonian_lindblad") {
      n.only_keys({"form", "hamiltonian", "jumps"});
      const Node h = n["hamiltonian"];
      HermitianOperator ham = guarded(h, [&] { return HermitianOperator(square(h, dim), tol()); });
      std::vector<CMatrix> jumps = n.has("jumps") ? operator_list(n["jumps"], dim) : std::vector<CMatrix>{};
      return guarded(n, [&] { return GklsGenerator(HamiltonianLindblad{ham, jumps}); });
    }
    if (form == "reset") {
      n.only_keys({"form", "rate", "target"});
      const double rate = n["rate"].positive();
      const Node t = n["target"];
      DensityOperator target = guarded(t, [&] { return DensityOperator(square(t, dim), tol()); });
      return guarded(n, [&] { return GklsGenerator(ResetForm{rate, target}); });
    }
    if (form == "channel_minus_id") {
      n.only_keys({"form", "rate", "channel"});
      const double rate = n["rate"].positive();
      const Node c = n["channel"];
      const ChannelSpec spec = channel(c, dim, false);
      Superoperator psi = guarded(c, [&] { return spec.build(); });
      return guarded(n, [&] { return GklsGenerator(ChannelMinusIdentity{rate, psi}); });
    }
    n["form"].fail("unknown generator form '" + form + "'");
  }

  CartanSet cartan(const Node& n, Index dim) const {
    n.only_keys({"labels", "matrices"});
    const Node labels = n["labels"], mats = n["matrices"];
    labels.expect_array(Limits::max_operators);
    mats.expect_array(Limits::max_operators);
    if (labels.size() != mats.size()) n.fail("labels and matrices differ in length");
    if (labels.size() == 0) n.fail("at least one Cartan generator is required");
    std::vector<std::string> ls;
    std::vector<HermitianOperator> hs;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      ls.push_back(labels[i].string());
      const Node m = mats[i];
      hs.push_back(guarded(m, [&] { return HermitianOperator(square(m, dim), tol()); }));
    }
    return guarded(n, [&] { return CartanSet(ls, hs, s_.options.tolerances.equality); });
  }

  FunctionalSpec functional(const Node& n, const std::optional<CartanSet>& c) const {
    const std::string kind = n["kind"].string();
    if (kind == "quadratic") {
      n.only_keys({"kind", "stiffness", "preferred"});
      const RVector pref = n["preferred"].real_vector(Limits::max_operators);
      if (pref.size() == 0) n["preferred"].fail("preferred charges must not be empty");
      if (c && pref.size() != c->rank()) n["preferred"].fail("length differs from the Cartan rank");
      const RMatrix k = n["stiffness"].real_matrix(Limits::max_operators);
      return guarded(n, [&] { return QuadraticFunctional(k, pref); });
    }
    if (kind == "divergence") {
      n.only_keys({"kind", "divergence", "family", "anchor"});
      DivergenceSpec d;
      if (n.has("divergence")) d.divergence = guarded(n["divergence"], [&] { return parse_divergence(n["divergence"].string()); });
      if (n.has("family") && n["family"].string() != "gibbs") n["family"].fail("only the 'gibbs' family is supported");
      if (!c) n.fail("a divergence functional needs a Cartan set on the context");
      d.anchor = n["anchor"].real_vector(Limits::max_operators);
      if (d.anchor.size() != c->rank()) n["anchor"].fail("length differs from the Cartan rank");
      return d;
    }
    n["kind"].fail("unknown functional kind '" + kind + "'");
  }

  void load_contexts(const Node& n) {
    n.expect_array(Limits::max_contexts);
    std::set<std::string> seen;
    for (std::size_t i = 0; i < n.size(); ++i) {
      const Node c = n[i];
      c.only_keys({"id", "dim", "generator", "cartan", "functional"});
      ContextSpec spec;
      spec.id = c["id"].string();
      if (spec.id.empty()) c["id"].fail("context id must not be empty");
      if (!seen.insert(spec.id).second) c["id"].fail("duplicate context id '" + spec.id + "'");
      spec.dim = c["dim"].integer(1, Limits::max_dim);
      if (c.has("generator")) spec.generator = generator(c["generator"], spec.dim);
      if (c.has("cartan")) spec.cartan = cartan(c["cartan"], spec.dim);
      if (c.has("functional")) spec.functional = functional(c["functional"], spec.cartan);
      s_.contexts.push_back(std::move(spec));
    }
  }

  const ContextSpec& context_ref(const Node& n) const {
    const std::string id = n.string();
    for (const auto& c : s_.contexts)
      if (c.id == id) return c;
    n.fail("unknown context '" + id + "'");
  }

  void load_graph(const Node& n) {
    n.only_keys({"coupling", "edges"});
    GraphSpec g;
    if (n.has("coupling")) g.coupling = n["coupling"].non_negative();
    if (n.has("edges")) {
      const Node edges = n["edges"];
      edges.expect_array(Limits::max_edges);
      for (std::size_t i = 0; i < edges.size(); ++i) {
        const Node e = edges[i];
        if (e.has("directed") && e["directed"].boolean()) e["directed"].fail("directed edges are not supported");
        e.only_keys({"source", "target", "weight", "directed"});
        g.edges.push_back({context_ref(e["source"]).id, context_ref(e["target"]).id,
                           e.has("weight") ? e["weight"].non_negative() : 1.0});
      }
    }
    s_.graph = std::move(g);
    guarded(n, [&] { return s_.context_graph(); });
  }

  std::vector<Direction> directions(const Node& n, Index dim) const {
    n.expect_array(Limits::max_operators);
    if (n.size() == 0) n.fail("at least one direction is required");
    std::vector<Direction> out;
    for (std::size_t i = 0; i < n.size(); ++i) {
      const Node d = n[i];
      d.only_keys({"label", "hamiltonian", "jumps", "scale"});
      const std::string label = d.has("label") ? d["label"].string() : "d" + std::to_string(i);
      const CMatrix h = d.has("hamiltonian") ? square(d["hamiltonian"], dim) : CMatrix::Zero(dim, dim);
      HermitianOperator ham = guarded(d, [&] { return HermitianOperator(h, tol()); });
      std::vector<CMatrix> jumps = d.has("jumps") ? operator_list(d["jumps"], dim) : std::vector<CMatrix>{};
      const double scale = d.has("scale") ? d["scale"].real() : 1.0;
      Superoperator dl = guarded(d, [&] {
        return build_superoperator(GklsGenerator(HamiltonianLindblad{ham, jumps})).scaled(scale);
      });
      out.push_back({label, std::move(dl)});
    }
    return out;
  }

  RVector openness(const Node& task, std::size_t count) const {
    if (!task.has("dN")) return RVector::Ones(static_cast<Index>(count));
    const RVector dn = task["dN"].real_vector(Limits::max_operators);
    if (static_cast<std::size_t>(dn.size()) != count) task["dN"].fail("length differs from the number of directions");
    return dn;
  }

  const ContextSpec& needs_generator(const Node& task) const {
    const ContextSpec& c = context_ref(task["context"]);
    if (!c.generator) task["context"].fail("context '" + c.id + "' has no generator");
    return c;
  }

  std::optional<double> time(const Node& task) const {
    if (task.has("t0")) return task["t0"].positive();
    return std::nullopt;
  }

  TaskPayload payload(const Node& t, const std::string& kind) const {
    if (kind == "analyze-context") {
      t.only_keys({"id", "kind", "context", "t0"});
      return AnalyzeTask{needs_generator(t).id, time(t)};
    }
    if (kind == "sensitivity") {
      t.only_keys({"id", "kind", "context", "t0", "directions", "dN", "mode", "samples", "seed"});
      const ContextSpec& c = needs_generator(t);
      SensitivityTask p;
      p.context = c.id;
      p.t0 = time(t);
      const std::string mode = t.has("mode") ? t["mode"].string() : "directions";
      if (mode == "random") {
        p.samples = t.has("samples") ? static_cast<int>(t["samples"].integer(1, Limits::max_samples)) : 100;
        if (t.has("seed")) {
          p.seed = t["seed"].seed();
        } else if (s_.options.seed) {
          p.seed = *s_.options.seed;
        } else {
          t.fail("random sampling requires a seed (task 'seed' or options.seed)");
        }
      } else if (mode == "directions") {
        p.directions = directions(t["directions"], c.dim);
        p.dn = openness(t, p.directions.size());
      } else {
        t["mode"].fail("mode must be 'directions' or 'random'");
      }
      return p;
    }
    if (kind == "metric") {
      t.only_keys({"id", "kind", "context", "method", "at"});
      const ContextSpec& c = context_ref(t["context"]);
      MetricTask p;
      p.context = c.id;
      const std::string method = t.has("method") ? t["method"].string() : "hessian";
      if (method == "hessian") {
        p.method = MetricTask::Method::hessian;
        if (std::holds_alternative<std::monostate>(c.functional)) t["context"].fail("context has no functional");
      } else if (method == "covariance") {
        p.method = MetricTask::Method::covariance;
        if (!c.cartan) t["context"].fail("covariance needs a Cartan set");
        if (!std::holds_alternative<DivergenceSpec>(c.functional) && !c.generator) {
          t["context"].fail("covariance needs a Gibbs anchor or a generator for the state");
        }
      } else if (method == "fisher") {
        p.method = MetricTask::Method::fisher;
        if (!std::holds_alternative<DivergenceSpec>(c.functional)) t["context"].fail("fisher needs a divergence functional");
      } else {
        t["method"].fail("method must be 'hessian', 'covariance' or 'fisher'");
      }
      if (t.has("at")) {
        if (p.method == MetricTask::Method::covariance) t["at"].fail("covariance is evaluated at the context state");
        RVector at = t["at"].real_vector(Limits::max_operators);
        const Index rank = std::holds_alternative<QuadraticFunctional>(c.functional)
                               ? std::get<QuadraticFunctional>(c.functional).rank()
                               : c.cartan->rank();
        if (at.size() != rank) t["at"].fail("length differs from the charge dimension");
        p.at = std::move(at);
      }
      return p;
    }
    if (kind == "solve-graph") {
      t.only_keys({"id", "kind", "tol", "max_iter"});
      SolveGraphTask p;
      if (t.has("tol")) p.tol = t["tol"].positive();
      if (t.has("max_iter")) p.max_iter = t["max_iter"].integer(1, Limits::max_iterations);
      if (s_.contexts.empty()) t.fail("solve-graph needs at least one context");
      Index total = 0;
      for (const auto& c : s_.contexts) {
        if (std::holds_alternative<std::monostate>(c.functional)) t.fail("context '" + c.id + "' has no functional");
      }
      for (const auto& v : s_.context_graph().vertices()) total += v.charge_dim;
      if (total > Limits::max_total_charges) t.fail("total charge dimension exceeds " + std::to_string(Limits::max_total_charges));
      return p;
    }
    if (kind == "holonomy") {
      t.only_keys({"id", "kind", "cartan_context", "loop", "thetas", "probes"});
      const ContextSpec& base = context_ref(t["cartan_context"]);
      if (!base.cartan) t["cartan_context"].fail("context has no Cartan set");
      HolonomyTask p;
      p.cartan_context = base.id;
      const Node loop = t["loop"];
      loop.expect_array(Limits::max_operators);
      if (loop.size() == 0) loop.fail("loop must contain at least one edge");
      for (std::size_t i = 0; i < loop.size(); ++i) {
        const Node e = loop[i];
        e.only_keys({"source", "target", "channel"});
        HolonomyTask::Edge edge{context_ref(e["source"]).id, context_ref(e["target"]).id,
                                channel(e["channel"], base.dim, true)};
        if (i > 0 && p.loop.back().target != edge.source) e["source"].fail("edge does not continue the loop");
        p.loop.push_back(std::move(edge));
      }
      if (p.loop.back().target != p.loop.front().source) loop.fail("loop does not close");
      const Node thetas = t["thetas"];
      thetas.expect_array(Limits::max_thetas);
      int positive = 0;
      for (std::size_t i = 0; i < thetas.size(); ++i) {
        const double th = thetas[i].real();
        if (th < 0.0 || th >= 0.5) thetas[i].fail("theta must lie in [0, 0.5)");
        positive += th > 0.0;
        p.thetas.push_back(th);
      }
      if (positive < 3) thetas.fail("at least three positive theta values are required");
      if (t.has("probes")) {
        const Node probes = t["probes"];
        probes.expect_array(Limits::max_operators);
        for (std::size_t i = 0; i < probes.size(); ++i) {
          const Node pr = probes[i];
          pr.only_keys({"label", "channel"});
          p.probes.emplace_back(pr["label"].string(), channel(pr["channel"], base.dim, false));
        }
      }
      return p;
    }
    if (kind == "chain-demo") {
      t.only_keys({"id", "kind", "function", "n", "refined_n", "weight"});
      ChainDemoTask p;
      if (t.has("function")) {
        const std::string f = t["function"].string();
        if (f == "sin_pi") p.function = ChainDemoTask::Function::sin_pi;
        else if (f == "linear") p.function = ChainDemoTask::Function::linear;
        else if (f == "constant") p.function = ChainDemoTask::Function::constant;
        else if (f == "cubic") p.function = ChainDemoTask::Function::cubic;
        else t["function"].fail("function must be one of sin_pi, linear, constant, cubic");
      }
      if (t.has("n")) p.n = t["n"].integer(8, Limits::max_chain);
      if (t.has("refined_n")) {
        p.refined_n = t["refined_n"].integer(9, Limits::max_chain);
        if (*p.refined_n <= p.n) t["refined_n"].fail("refined_n must exceed n");
      } else if (2 * p.n > Limits::max_chain) {
        t["n"].fail("default refinement 2n exceeds the chain limit");
      }
      if (t.has("weight")) p.weight = t["weight"].positive();
      return p;
    }
    if (kind == "qutrit-demo") {
      t.only_keys({"id", "kind", "context"});
      const ContextSpec& c = context_ref(t["context"]);
      if (!c.cartan || !std::holds_alternative<DivergenceSpec>(c.functional)) {
        t["context"].fail("qutrit-demo needs a Cartan set and a divergence functional");
      }
      return QutritDemoTask{c.id};
    }
    if (kind == "response-chain") {
      t.only_keys({"id", "kind", "context", "directions", "dN"});
      const ContextSpec& c = needs_generator(t);
      if (!c.cartan) t["context"].fail("response-chain needs a Cartan set");
      if (std::holds_alternative<std::monostate>(c.functional)) t["context"].fail("response-chain needs a functional");
      ResponseChainTask p;
      p.context = c.id;
      p.directions = directions(t["directions"], c.dim);
      p.dn = openness(t, p.directions.size());
      return p;
    }
    throw LoadError(LoadErrorKind::unsupported_task, t["kind"].path(), "unknown task kind '" + kind + "'");
  }

  void load_tasks(const Node& n) {
    n.expect_array(Limits::max_tasks);
    std::set<std::string> seen;
    for (std::size_t i = 0; i < n.size(); ++i) {
      const Node t = n[i];
      t.expect_object();
      TaskSpec spec;
      spec.id = t["id"].string();
      if (spec.id.empty()) t["id"].fail("task id must not be empty");
      if (!seen.insert(spec.id).second) t["id"].fail("duplicate task id '" + spec.id + "'");
      spec.kind = t["kind"].string();
      spec.payload = payload(t, spec.kind);
      spec.params = Json::object();
      for (const auto& item : t.value().items()) {
        if (item.key() != "id" && item.key() != "kind") spec.params[item.key()] = item.value();
      }
      s_.tasks.push_back(std::move(spec));
    }
  }

  Node root_;
  Json empty_ = Json::array();
  Scenario s_;
};

}  // namespace

Superoperator ChannelSpec::build(double sweep) const {
  const double param = swept ? theta * sweep : theta;
  switch (kind) {
    case Kind::identity: return Superoperator::identity(dim);
    case Kind::kraus: return kraus_channel(kraus, dim);
    case Kind::unitary: return Superoperator::unitary_conjugation(matrix_exponential(Complex(0.0, param) * generator));
    case Kind::partial_swap: return partial_swap_channel(dim, i, j, param);
  }
  throw Error(ErrorKind::validation, "unknown channel kind");
}

std::string ChannelSpec::reading(double sweep) const {
  const double param = swept ? theta * sweep : theta;
  switch (kind) {
    case Kind::identity: return "identity";
    case Kind::kraus: return "kraus";
    case Kind::unitary: return "unitary";
    case Kind::partial_swap: return (param >= 0.0 && param <= 1.0) ? "partial_swap" : "partial_swap (formal inverse)";
  }
  return "unknown";
}

const ContextSpec& Scenario::context(const std::string& id) const {
  for (const auto& c : contexts)
    if (c.id == id) return c;
  throw Error(ErrorKind::field, "unknown context '" + id + "'");
}

ContextGraph Scenario::context_graph() const {
  std::vector<ContextVertex> vertices;
  for (const auto& c : contexts) {
    Index rank = 1;
    if (const auto* q = std::get_if<QuadraticFunctional>(&c.functional)) {
      rank = q->rank();
    } else if (c.cartan) {
      rank = c.cartan->rank();
    }
    vertices.push_back({c.id, rank});
  }
  return ContextGraph(std::move(vertices), graph ? graph->edges : std::vector<ContextEdge>{});
}

Scenario load_scenario(const std::string& text, const std::string& name) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw LoadError(LoadErrorKind::parse, parse_position(text, e.byte == 0 ? 0 : e.byte - 1),
                    "malformed JSON document");
  } catch (const Json::exception& e) {
    // e.g. numeric literals outside the double range
    throw LoadError(LoadErrorKind::parse, "/", std::string("unreadable JSON document: ") + e.what());
  }
  if (!root.is_object()) throw LoadError(LoadErrorKind::parse, "/", "the document must be a JSON object");
  return Loader(root).load(name);
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(LoadErrorKind::parse, path, "cannot open scenario file");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string name = path;
  if (const auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
  if (const auto dot = name.rfind('.'); dot != std::string::npos && dot > 0) name = name.substr(0, dot);
  return load_scenario(buf.str(), name);
}

const std::vector<std::string>& task_kinds() {
  static const std::vector<std::string> kinds{"analyze-context", "sensitivity", "metric", "solve-graph",
                                              "holonomy", "chain-demo", "qutrit-demo", "response-chain"};
  return kinds;
}

}  // namespace nqs::cli
