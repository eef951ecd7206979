#include "pdd/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace pdd {

namespace {

using nlohmann::json;

Index idx(std::size_t v) { return static_cast<Index>(v); }

CombinationMatrix row_weights(const DirectedTopology& topo) {
  const auto n = topo.size();
  Mat a = Mat::Zero(idx(n), idx(n));
  for (std::size_t k = 0; k < n; ++k) {
    const auto& nk = topo.neighbors(k);
    for (auto l : nk) a(idx(l), idx(k)) = 1.0 / static_cast<double>(nk.size());
  }
  return CombinationMatrix(std::move(a), Stochasticity::row, topo);
}

DirectedTopology resolve_topology(const ExperimentConfig& c) {
  DirectedTopology topo = [&] {
    if (!c.topology.edge_list.empty()) {
      try {
        return read_edge_list(c.topology.edge_list);
      } catch (const std::exception& e) {
        throw ConfigError("topology.edge_list", e.what());
      }
    }
    return build_topology(c.topology.n, c.topology.kind, c.topology.density, c.seed);
  }();
  if (c.topology.regime == WeightRegime::doubly) return topo.undirected_closure();
  return topo;
}

CsInstance resolve_instance(const ExperimentConfig& c, std::size_t n) {
  if (!c.instance.dir.empty()) {
    try {
      auto inst = read_instance(c.instance.dir);
      if (inst.problem.agents() != n) {
        throw ConfigError("instance.dir", "instance has " + std::to_string(inst.problem.agents()) +
                                              " agents, topology has " + std::to_string(n));
      }
      return inst;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("instance.dir", e.what());
    }
  }
  CsOptions o;
  o.family = c.instance.family;
  o.n_agents = n;
  o.p = c.instance.p;
  o.m_k = c.instance.m_k;
  o.sparsity = c.instance.sparsity;
  o.noise_std = c.instance.noise_std;
  o.lambda = c.instance.lambda;
  o.ridge = c.instance.ridge;
  o.coupling_dim = c.instance.coupling_dim;
  o.gterm = c.instance.gterm;
  o.seed = c.seed;
  return make_cs_instance(o);
}

bool is_pdd(Method m) {
  return m == Method::pdd || m == Method::pdd_tracking || m == Method::pdd_network;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << v;
  return os.str();
}

void stamp(RunTrace& trace, const ExperimentConfig& c, Method m) {
  auto& meta = trace.metadata();
  meta["config_hash"] = config_hash(c);
  meta["seed"] = std::to_string(c.seed);
  meta["method"] = to_string(m);
  meta["instance_family"] = to_string(c.instance.family);
  meta["sq_error"] = "network sum";
}

std::filesystem::path with_format(const std::filesystem::path& p, const std::string& format) {
  if (format == "json") {
    auto q = p;
    q.replace_extension(".json");
    return q;
  }
  return p;
}

std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

json certificate_json(const CertificateReport& r) {
  const auto& c = r.certificate;
  return json{{"delta", c.delta},
              {"nu", c.nu},
              {"mu_w", c.steps.mu_w},
              {"mu_y", c.steps.mu_y},
              {"mu_w_max", c.bounds.mu_w_max},
              {"mu_y_max", c.bounds.mu_y_max},
              {"sigma_max_Cd", c.sigma_max_Cd},
              {"lambda_min_CdCdT", c.lambda_min_gram_Cd},
              {"sigma_min_A", c.sigma_min_A},
              {"gamma1", c.gamma1},
              {"gamma2", c.gamma2},
              {"gamma3", c.gamma3},
              {"gamma", c.gamma},
              {"full_row_rank_Cd", c.full_row_rank_Cd},
              {"C_o", r.initial_error_constant},
              {"certified", c.certified},
              {"violations", c.violations}};
}

}  // namespace

Experiment build_experiment(const ExperimentConfig& c) {
  DirectedTopology topo = resolve_topology(c);
  CombinationMatrix weights =
      c.topology.regime == WeightRegime::row ? row_weights(topo) : metropolis_weights(topo);
  CsInstance inst = resolve_instance(c, topo.size());
  return Experiment{std::move(topo), std::move(weights), std::move(inst)};
}

StepSizes resolve_steps(const Experiment& exp, const ExperimentConfig& c) {
  if (c.solver.mu_w && c.solver.mu_y) return {*c.solver.mu_w, *c.solver.mu_y};
  StepSizes s = default_steps(exp.instance.problem);
  if (c.solver.mu_w) s.mu_w = *c.solver.mu_w;
  if (c.solver.mu_y) s.mu_y = *c.solver.mu_y;
  return s;
}

MethodOutcome run_method(const Experiment& exp, const ExperimentConfig& c, Method method,
                         double tol, std::size_t max_iter) {
  const auto& problem = exp.instance.problem;
  const auto& truth = exp.instance.truth;
  MethodOutcome out;
  out.method = method;
  if (is_pdd(method)) {
    RunOptions opt;
    opt.policy = c.solver.weights;
    opt.steps = resolve_steps(exp, c);
    opt.max_iter = max_iter;
    opt.tol = tol;
    opt.engine = method == Method::pdd            ? Engine::per_agent
                 : method == Method::pdd_tracking ? Engine::tracking
                                                  : Engine::network;
    if (opt.engine == Engine::network && opt.policy == WeightsPolicy::adaptive) {
      throw ConfigError("solver.weights", "pdd-network supports static weights only");
    }
    opt.schedule = c.solver.schedule;
    opt.zeta = c.solver.zeta;
    opt.statistic = c.solver.statistic;
    opt.record_weights = !c.output.weights.empty();
    auto res = run(problem, exp.topology, exp.weights, &truth, opt);
    out.trace = std::move(res.trace);
    out.w = std::move(res.w);
    out.y = std::move(res.y);
    out.iterations = res.iterations;
    out.converged = res.converged;
    out.steps = res.steps;
    out.weight_history = std::move(res.weight_history);
    auto& meta = out.trace.metadata();
    meta["engine"] = to_string(opt.engine);
  } else {
    if (!exp.weights.is_symmetric()) {
      throw ConfigError("topology.regime",
                        to_string(method) + " needs symmetric doubly stochastic weights; use regime = doubly");
    }
    const auto cp = dual_consensus(problem);
    if (method == Method::diging && !cp.smooth()) {
      throw ConfigError("instance.gterm", "diging needs gterm = indicator-zero");
    }
    BaselineOptions bo;
    bo.alpha = c.solver.alpha;
    bo.max_iter = max_iter;
    bo.tol = tol;
    auto res = baseline_run(method == Method::extra ? BaselineMethod::extra : BaselineMethod::diging_atc,
                            cp, exp.weights, &truth, bo);
    out.trace = std::move(res.trace);
    out.w = std::move(res.w);
    out.y = std::move(res.y);
    out.iterations = res.iterations;
    out.converged = res.converged;
    out.steps = {res.alpha, res.alpha};
  }
  stamp(out.trace, c, method);
  out.final_sq_error = (out.w - truth.w_star).squaredNorm();
  return out;
}

CertificateReport certificate_report(const Experiment& exp, const ExperimentConfig& c) {
  const auto& problem = exp.instance.problem;
  const auto& truth = exp.instance.truth;
  CertificateReport r;
  const StepSizes steps = resolve_steps(exp, c);
  r.certificate = certify(problem, exp.weights, steps);
  const auto ops = network_operators(problem, exp.weights);
  const auto fp = network_fixed_point(problem, truth, ops, steps.mu_y);
  r.initial_error_constant =
      initial_error_constant(ops.cd, steps, r.certificate.sigma_max_Cd, -fp.w, -fp.y, -fp.x);
  return r;
}

void write_certificate_text(std::ostream& out, const CertificateReport& r) {
  const auto j = certificate_json(r);
  for (const char* key : {"delta", "nu", "mu_w", "mu_y", "mu_w_max", "mu_y_max", "sigma_max_Cd",
                          "lambda_min_CdCdT", "sigma_min_A", "gamma1", "gamma2", "gamma3", "gamma",
                          "full_row_rank_Cd", "C_o", "certified"}) {
    const auto& v = j.at(key);
    out << key << " = ";
    if (v.is_boolean()) out << (v.get<bool>() ? "true" : "false");
    else out << fmt(v.get<double>());
    out << '\n';
  }
  for (const auto& v : r.certificate.violations) out << "violation = " << v << '\n';
}

void write_certificate_json(std::ostream& out, const CertificateReport& r) {
  out << certificate_json(r).dump(2) << '\n';
}

void write_trace(std::ostream& out, const RunTrace& trace, const std::string& format) {
  if (format != "json") {
    write_trace_csv(out, trace);
    return;
  }
  json rows = json::array();
  for (const auto& r : trace.rows()) {
    rows.push_back(json{{"iter", r.iter},
                        {"sq_error", r.sq_error},
                        {"dual_consensus_residual", r.dual_consensus_residual},
                        {"grad_residual", r.grad_residual},
                        {"stepsize_mu_w", r.mu_w},
                        {"stepsize_mu_y", r.mu_y},
                        {"weights_policy", trace.weights_policy()}});
  }
  json meta = json::object();
  for (const auto& [k, v] : trace.metadata()) meta[k] = v;
  out << json{{"metadata", meta}, {"rows", rows}}.dump(1) << '\n';
}

std::vector<ComparisonRow> compare_methods(const Experiment& exp, const ExperimentConfig& c) {
  std::vector<ComparisonRow> rows;
  for (auto m : c.solver.compare) {
    const auto o = run_method(exp, c, m, c.solver.compare_tol, c.solver.compare_max_iter);
    rows.push_back({to_string(m), o.iterations, o.converged, o.final_sq_error});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    if (a.converged != b.converged) return a.converged;
    return a.iterations_to_tol < b.iterations_to_tol;
  });
  return rows;
}

int cmd_run(const ExperimentConfig& c, const std::filesystem::path& out_dir, const std::string& format,
            std::ostream& log) {
  const Experiment exp = build_experiment(c);
  if (!c.output.instance_dir.empty()) {
    const auto dir = out_dir / c.output.instance_dir;
    write_instance(exp.instance, dir);
    write_edge_list(exp.topology, dir / "topology.txt");
  }
  const auto trace_path = with_format(out_dir / c.output.trace, format);
  MethodOutcome o;
  try {
    o = run_method(exp, c, c.solver.method, c.solver.tol, c.solver.max_iter);
  } catch (DivergenceError& e) {
    RunTrace diag = e.trace();
    stamp(diag, c, c.solver.method);
    diag.metadata()["diverged_at"] = std::to_string(e.iteration());
    auto out = open_out(trace_path);
    write_trace(out, diag, format);
    throw;
  }
  {
    auto out = open_out(trace_path);
    write_trace(out, o.trace, format);
  }
  if (!c.output.weights.empty() && !o.weight_history.empty()) {
    auto out = open_out(out_dir / c.output.weights);
    out << "# config_hash=" << config_hash(c) << "\n# seed=" << c.seed << '\n';
    write_weight_history_csv(out, o.weight_history, exp.topology);
  }

  const auto& problem = exp.instance.problem;
  const Vec ybar = mean_block(o.y, problem.agents());
  const auto pair = pair_residuals(problem, o.w, ybar);
  json summary{{"config_hash", config_hash(c)},
               {"seed", c.seed},
               {"method", to_string(c.solver.method)},
               {"weights_policy", o.trace.weights_policy()},
               {"iterations", o.iterations},
               {"converged", o.converged},
               {"tol", c.solver.tol},
               {"final_sq_error", o.final_sq_error},
               {"final_stationarity_residual", pair.stationarity},
               {"final_inclusion_residual", pair.inclusion},
               {"final_dual_consensus_residual", dual_consensus_residual(o.y, problem.agents())},
               {"mu_w", o.steps.mu_w},
               {"mu_y", o.steps.mu_y}};
  if (is_pdd(c.solver.method)) {
    const auto cert = certificate_report(exp, c);
    summary["certificate"] = certificate_json(cert);
  }
  {
    auto out = open_out(out_dir / c.output.summary);
    out << summary.dump(2) << '\n';
  }
  log << "wrote " << trace_path.string() << " (" << o.trace.size() << " rows)\n";
  return 0;
}

int cmd_compare(const ExperimentConfig& c, const std::filesystem::path& out_dir,
                const std::string& format, std::ostream& log) {
  const Experiment exp = build_experiment(c);
  const auto rows = compare_methods(exp, c);
  const auto path = with_format(out_dir / c.output.comparison, format);
  auto out = open_out(path);
  if (format == "json") {
    json arr = json::array();
    for (const auto& r : rows) {
      arr.push_back(json{{"method", r.method},
                         {"iterations_to_tol", r.iterations_to_tol},
                         {"converged", r.converged},
                         {"final_sq_error", r.final_sq_error}});
    }
    out << json{{"config_hash", config_hash(c)}, {"seed", c.seed}, {"tol", c.solver.compare_tol},
                {"rows", arr}}
               .dump(2)
        << '\n';
  } else {
    out << "# config_hash=" << config_hash(c) << "\n# seed=" << c.seed << "\n# tol=" << fmt(c.solver.compare_tol)
        << '\n';
    out << "method,iterations_to_tol,converged,final_sq_error\n";
    for (const auto& r : rows) {
      out << r.method << ',' << r.iterations_to_tol << ',' << (r.converged ? "true" : "false") << ','
          << fmt(r.final_sq_error) << '\n';
    }
  }
  log << "wrote " << path.string() << " (" << rows.size() << " methods)\n";
  return 0;
}

int cmd_certify(const ExperimentConfig& c, const std::string& format, std::ostream& out) {
  const Experiment exp = build_experiment(c);
  const auto r = certificate_report(exp, c);
  if (format == "json") write_certificate_json(out, r);
  else write_certificate_text(out, r);
  return r.certificate.certified ? 0 : 1;
}

}  // namespace pdd
