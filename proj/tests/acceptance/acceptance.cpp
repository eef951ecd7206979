// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "pdd/baselines.hpp"
#include "pdd/certificate.hpp"
#include "pdd/experiment.hpp"
#include "pdd/metrics.hpp"
#include "pdd/solver.hpp"

using namespace pdd;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

// ---------------------------------------------------------------- 1
Verdict engine_equivalence() {
  const auto t0 = Clock::now();
  const std::size_t sizes[] = {3, 5, 20};
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const std::size_t n = sizes[seed % 3];
    std::mt19937_64 rng(seed);
    const auto kind = seed % 2 == 0 ? TopologyKind::undirected_random : TopologyKind::random_digraph;
    const auto topo = build_topology(n, kind, 0.4, seed);
    const auto a = metropolis_weights(topo);
    const auto problem = testutil::random_sharing(rng, n, 3, 2, NonSmoothTerm::l1(0.5));
    const auto steps = default_steps(problem);
    InitialPoint init;
    init.w = testutil::random_vec(rng, static_cast<Index>(problem.primal_dim()));
    init.y = testutil::random_vec(rng, static_cast<Index>(problem.dual_dim() * n));
    auto agents = init_state(problem, init);
    auto net = init_network(problem, init);
    auto track = init_tracking(problem, init);
    const auto ops = network_operators(problem, a);
    for (std::size_t i = 0; i < 200; ++i) {
      pdd_step(agents, problem, a, steps, i);
      network_step(net, problem, ops, steps, i);
      tracking_step(track, problem, a, steps, i);
      worst = std::max({worst, inf_norm(stack_w(agents) - net.w), inf_norm(stack_y(agents) - net.y),
                        inf_norm(track.w - net.w), inf_norm(track.y - net.y)});
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-10 && secs < 10.0, "max block gap " + num(worst) + ", " + num(secs) + " s"};
}

// ---------------------------------------------------------------- 2
Verdict certificate_rate() {
  const auto t0 = Clock::now();
  std::size_t failures = 0;
  double worst_margin = -1.0, worst_ratio = 0.0;
  std::string first_failure;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    CsOptions o;
    o.family = InstanceFamily::private_blocks;
    o.n_agents = 8;
    o.p = 8;
    o.m_k = 20;
    o.coupling_dim = 4;
    o.seed = seed;
    const auto inst = make_cs_instance(o);
    const auto topo = build_topology(8, TopologyKind::undirected_random, 0.4, seed);
    const auto a = metropolis_weights(topo);
    const auto steps = default_steps(inst.problem);
    const auto cert = certify(inst.problem, a, steps);
    const auto ops = network_operators(inst.problem, a);
    const auto fp = network_fixed_point(inst.problem, inst.truth, ops, steps.mu_y);
    const double c0 = initial_error_constant(ops.cd, steps, cert.sigma_max_Cd, -fp.w, -fp.y, -fp.x);
    RunOptions ro;
    ro.steps = steps;
    ro.max_iter = 600;
    const auto res = run(inst.problem, topo, a, &inst.truth, ro);
    const auto fit = fit_linear_rate(res.trace, 10);
    bool ok = cert.full_row_rank_Cd && fit.gamma_hat < 1.0 && fit.gamma_hat <= cert.gamma + 0.02;
    worst_margin = std::max(worst_margin, fit.gamma_hat - cert.gamma);
    const auto& rows = res.trace.rows();
    for (std::size_t i = 10; i < rows.size(); ++i) {
      const double bound = 1.05 * std::pow(cert.gamma, static_cast<double>(i)) * c0;
      worst_ratio = std::max(worst_ratio, rows[i].sq_error / bound);
      if (rows[i].sq_error > bound) ok = false;
    }
    if (!ok) {
      ++failures;
      if (first_failure.empty()) {
        first_failure = " (seed " + std::to_string(seed) + ": gamma_hat " + num(fit.gamma_hat) +
                        ", gamma " + num(cert.gamma) + ")";
      }
    }
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && secs < 60.0,
          std::to_string(50 - failures) + "/50 instances, max gamma_hat - gamma " + num(worst_margin) +
              ", max error/bound " + num(worst_ratio / 1.05) + ", " + num(secs) + " s" + first_failure};
}

// ---------------------------------------------------------------- 3
Verdict optimality_fixed_point() {
  double fp_res = 0.0, stationarity = 0.0, run_res = 0.0, run_cons = 0.0;
  std::size_t unconverged = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 4 + seed % 4;
    const auto topo = build_topology(n, TopologyKind::undirected_random, 0.4, seed);
    const auto a = metropolis_weights(topo);
    const auto g = seed % 2 == 0 ? NonSmoothTerm::l1(0.5) : NonSmoothTerm::indicator_zero();
    const auto problem = testutil::random_sharing(rng, n, 3, 2, g);
    const auto truth = solve_centralized(problem);
    const auto steps = default_steps(problem);
    const auto ops = network_operators(problem, a);
    const auto fp = network_fixed_point(problem, truth, ops, steps.mu_y);
    fp_res = std::max(fp_res, optimality_residuals(problem, fp.w, fp.y, fp.x, ops.d, steps.mu_y).max());
    auto moved = fp;
    network_step(moved, problem, ops, steps);
    stationarity = std::max({stationarity, inf_norm(moved.w - fp.w), inf_norm(moved.y - fp.y),
                             inf_norm(moved.x - fp.x)});

    auto net = init_network(problem);
    bool converged = false;
    for (std::size_t i = 0; i < 100000 && !converged; ++i) {
      network_step(net, problem, ops, steps, i);
      converged = (net.w - truth.w_star).squaredNorm() <= 1e-16;
    }
    if (!converged) {
      ++unconverged;
      continue;
    }
    run_res = std::max(run_res, optimality_residuals(problem, net.w, net.y, net.x, ops.d, steps.mu_y).max());
    run_cons = std::max(run_cons, dual_consensus_residual(net.y, n));
  }
  const bool ok = fp_res <= 1e-8 && stationarity <= 1e-10 && unconverged == 0 && run_res <= 1e-6 &&
                  run_cons <= 1e-6;
  return {ok, "fixed-point residual " + num(fp_res) + ", stationarity " + num(stationarity) +
                  ", converged-run residual " + num(run_res) + ", dual consensus " + num(run_cons) +
                  (unconverged ? ", " + std::to_string(unconverged) + " runs unconverged" : "")};
}

// ---------------------------------------------------------------- 4
// Golden-section minimisation of lambda |u| + (u - x)^2 / (2 mu).
double golden_soft_threshold(double x, double lambda, double mu) {
  auto f = [&](double u) { return lambda * std::abs(u) + (u - x) * (u - x) / (2.0 * mu); };
  double lo = -std::abs(x) - 1.0, hi = std::abs(x) + 1.0;
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - r * (hi - lo), d = lo + r * (hi - lo);
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    if (f(c) < f(d)) hi = d;
    else lo = c;
    c = hi - r * (hi - lo);
    d = lo + r * (hi - lo);
  }
  // A kink at zero is a common minimiser; golden section lands near it, snap if better.
  const double u = 0.5 * (lo + hi);
  return f(0.0) <= f(u) ? 0.0 : u;
}

Verdict prox_correctness() {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nd(0.0, 2.0);
  std::uniform_real_distribution<double> ud(0.05, 2.0);
  double soft = 0.0, moreau = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double lambda = ud(rng), mu = ud(rng);
    Vec v(4);
    for (Index i = 0; i < 4; ++i) v(i) = nd(rng);
    const auto g = NonSmoothTerm::l1(lambda);
    const Vec p = prox_g(g, mu, v);
    for (Index i = 0; i < 4; ++i) soft = std::max(soft, std::abs(p(i) - golden_soft_threshold(v(i), lambda, mu)));
    const Vec back = p + mu * prox_conjugate(g, 1.0 / mu, v / mu);
    moreau = std::max(moreau, inf_norm(back - v));
  }
  return {soft <= 1e-6 && moreau <= 1e-10, "soft-threshold gap " + num(soft) + ", Moreau gap " + num(moreau)};
}

// ---------------------------------------------------------------- 5
Verdict range_space_invariant() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    std::mt19937_64 rng(seed);
    const auto kind = seed <= 2 ? TopologyKind::undirected_random : TopologyKind::random_digraph;
    const auto topo = build_topology(6, kind, 0.4, seed);
    const auto a = metropolis_weights(topo);
    const auto problem = testutil::random_sharing(rng, 6, 3, 2, NonSmoothTerm::l1(1.0));
    const auto ops = network_operators(problem, a);
    const auto steps = default_steps(problem);
    Eigen::JacobiSVD<Mat> svd(ops.d, Eigen::ComputeFullU);
    const auto& sv = svd.singularValues();
    Index rank = 0;
    for (Index i = 0; i < sv.size(); ++i) rank += sv(i) > 1e-10 * sv(0) ? 1 : 0;
    const Mat off_range = svd.matrixU().rightCols(ops.d.rows() - rank);
    auto net = init_network(problem);
    for (std::size_t i = 0; i < 500; ++i) {
      network_step(net, problem, ops, steps, i);
      worst = std::max(worst, (off_range.transpose() * net.x).norm() / std::max(1.0, net.x.norm()));
    }
  }
  return {worst <= 1e-10, "max off-range component " + num(worst)};
}

// ---------------------------------------------------------------- 6
// Error recursion about the fixed point, in the network scaling and with
// u = w~_{i-1} - mu_w (grad J(W_{i-1}) - grad J(W*)):
//   ||w~_i||^2_{I - mu_w mu_y Cd^T Cd} + a_m (||z~_i||^2_A + ||x~_i||^2)
//     = ||u||^2 + a_m ||y~_{i-1}||^2_{I - mu_y mu_w Cd Cd^T} + a_m ||x~_{i-1}||^2_A
// together with ||u||^2 <= gamma1 ||w~_{i-1}||^2_{I - mu_w mu_y Cd^T Cd} and
// ||y~_i|| <= ||A z~_i|| from nonexpansiveness of the prox.
Verdict error_recursion_identity() {
  double eq_gap = 0.0, ineq_gap = 0.0, prox_gap = 0.0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 5;
    const auto topo = build_topology(n, TopologyKind::undirected_random, 0.5, seed);
    const auto a = metropolis_weights(topo);
    const auto g = seed % 2 == 0 ? NonSmoothTerm::zero() : NonSmoothTerm::indicator_zero();
    const auto problem = testutil::random_sharing(rng, n, 3, 2, g);
    const auto truth = solve_centralized(problem);
    const auto steps = default_steps(problem);
    const auto ops = network_operators(problem, a);
    const auto fp = network_fixed_point(problem, truth, ops, steps.mu_y);
    const auto cert = certify(problem, a, steps);
    const double mm = steps.mu_w * steps.mu_y, am = steps.mu_w / steps.mu_y;
    const Mat& cd = ops.cd;
    const Mat& mix = ops.mixing;
    const Mat pw = Mat::Identity(cd.cols(), cd.cols()) - mm * cd.transpose() * cd;
    const Mat py = Mat::Identity(cd.rows(), cd.rows()) - mm * cd * cd.transpose();
    const Vec grad_star = problem.stacked_gradient(fp.w);

    InitialPoint init;
    init.w = testutil::random_vec(rng, static_cast<Index>(problem.primal_dim()));
    init.y = testutil::random_vec(rng, cd.rows());
    auto net = init_network(problem, init);
    for (std::size_t i = 0; i < 100; ++i) {
      const Vec w0 = net.w - fp.w, y0 = net.y - fp.y, x0 = net.x - fp.x;
      const Vec u = w0 - steps.mu_w * (problem.stacked_gradient(net.w) - grad_star);
      network_step(net, problem, ops, steps, i);
      const Vec w1 = net.w - fp.w, z1 = net.z - fp.z, x1 = net.x - fp.x, y1 = net.y - fp.y;
      const double lhs = w1.dot(pw * w1) + am * (z1.dot(mix * z1) + x1.squaredNorm());
      const double rhs = u.squaredNorm() + am * y0.dot(py * y0) + am * x0.dot(mix * x0);
      eq_gap = std::max(eq_gap, std::abs(lhs - rhs) / std::max(1.0, rhs));
      const double wn = w0.dot(pw * w0);
      ineq_gap = std::max(ineq_gap, (u.squaredNorm() - cert.gamma1 * wn) / std::max(1.0, wn));
      prox_gap = std::max(prox_gap, (y1.norm() - (mix * z1).norm()) / std::max(1.0, y1.norm()));
    }
  }
  const bool ok = eq_gap <= 1e-8 && ineq_gap <= 1e-8 && prox_gap <= 1e-8;
  return {ok, "identity gap " + num(eq_gap) + ", gamma1 inequality excess " + num(ineq_gap) +
                  ", prox excess " + num(prox_gap)};
}

// ---------------------------------------------------------------- 7
Verdict desk_scale_experiment() {
  ExperimentConfig cfg;
  cfg.topology.n = 20;
  cfg.topology.kind = TopologyKind::random_digraph;
  cfg.topology.regime = WeightRegime::doubly;
  cfg.instance.lambda = 1.0;
  cfg.instance.gterm = NonSmoothKind::l1;
  cfg.solver.weights = WeightsPolicy::static_weights;
  std::size_t wins = 0;
  double slowest = 0.0;
  std::string tally;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    cfg.seed = seed;
    const auto exp = build_experiment(cfg);
    const auto t0 = Clock::now();
    const auto timed = run_method(exp, cfg, Method::pdd, 0.0, 500);
    slowest = std::max(slowest, seconds_since(t0));
    if (timed.iterations != 500) return {false, "500-iteration run stopped early"};
    const auto pdd = run_method(exp, cfg, Method::pdd, 1e-6, cfg.solver.compare_max_iter);
    const auto extra = run_method(exp, cfg, Method::extra, 1e-6, cfg.solver.compare_max_iter);
    if (pdd.converged && (!extra.converged || pdd.iterations <= extra.iterations)) ++wins;
    if (seed <= 3) {
      tally += " [" + std::to_string(pdd.converged ? pdd.iterations : 0) + " vs " +
               std::to_string(extra.converged ? extra.iterations : 0) + "]";
    }
  }
  return {wins >= 16 && slowest < 5.0, "PDD no slower on " + std::to_string(wins) +
                                           "/20 seeds, slowest 500-iteration run " + num(slowest) +
                                           " s, first seeds (pdd vs extra)" + tally};
}

// ---------------------------------------------------------------- 8
Verdict adaptive_weights() {
  double sum_gap = 0.0, repro = 0.0;
  bool structure = true;
  std::size_t snapshots = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 8;
    const auto kind = seed % 2 ? TopologyKind::random_digraph : TopologyKind::undirected_random;
    const auto topo = build_topology(n, kind, 0.35, seed);
    const auto a = metropolis_weights(topo);
    const auto problem = testutil::random_sharing(rng, n, 3, 2, NonSmoothTerm::l1(0.5));
    const auto truth = solve_centralized(problem);
    RunOptions ro;
    ro.max_iter = 200;
    ro.policy = WeightsPolicy::adaptive;
    ro.record_weights = true;
    for (auto stat : {WeightStatistic::filter, WeightStatistic::theorem_scaled}) {
      ro.statistic = stat;
      const auto res = run(problem, topo, a, &truth, ro);
      for (const auto& snap : res.weight_history) {
        ++snapshots;
        const Mat& w = snap.weights;
        sum_gap = std::max(sum_gap, (w.colwise().sum().array() - 1.0).abs().maxCoeff());
        for (std::size_t l = 0; l < n; ++l) {
          for (std::size_t k = 0; k < n; ++k) {
            const double v = w(static_cast<Index>(l), static_cast<Index>(k));
            if (topo.has_edge(l, k) ? !(v > 0.0) : v != 0.0) structure = false;
          }
        }
      }
    }
    RunOptions st;
    st.max_iter = 200;
    const auto base = run(problem, topo, a, &truth, st);
    RunOptions z = st;
    z.policy = WeightsPolicy::adaptive;
    z.zeta = 0.0;
    const auto same = run(problem, topo, a, &truth, z);
    repro = std::max({repro, inf_norm(same.w - base.w), inf_norm(same.y - base.y)});
    for (std::size_t i = 0; i < base.trace.size(); ++i) {
      repro = std::max(repro, std::abs(same.trace.rows()[i].sq_error - base.trace.rows()[i].sq_error));
    }
  }
  return {sum_gap <= 1e-12 && structure && repro <= 1e-10,
          std::to_string(snapshots) + " weight matrices, max sum gap " + num(sum_gap) +
              (structure ? ", sparsity respected" : ", SPARSITY VIOLATED") + ", zeta = 0 gap " + num(repro)};
}

// ---------------------------------------------------------------- 9
Verdict baseline_sanity() {
  double pair = 0.0, tracker = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CsOptions o;
    o.n_agents = 8;
    o.gterm = NonSmoothKind::indicator_zero;
    o.seed = seed;
    const auto inst = make_cs_instance(o);
    const auto topo = build_topology(8, TopologyKind::undirected_random, 0.4, seed);
    const auto w = metropolis_weights(topo);
    const auto cp = dual_consensus(inst.problem);
    const auto m = static_cast<Index>(cp.dim());
    BaselineOptions bo;
    bo.max_iter = 50000;
    bo.tol = 1e-14;
    const auto e = extra_run(cp, w, &inst.truth, bo);
    bo.observer = [&](std::size_t, const Vec& x, const Vec& tr) {
      Vec gs = Vec::Zero(m), ts = Vec::Zero(m);
      for (std::size_t k = 0; k < 8; ++k) {
        gs += cp.gradient(k, x.segment(static_cast<Index>(k) * m, m));
        ts += tr.segment(static_cast<Index>(k) * m, m);
      }
      tracker = std::max(tracker, (gs - ts).norm());
    };
    const auto d = diging_run(cp, w, &inst.truth, bo);
    RunOptions ro;
    ro.max_iter = 50000;
    ro.tol = 1e-14;
    const auto p = run(inst.problem, topo, w, &inst.truth, ro);
    pair = std::max({pair, (e.w - d.w).norm(), (e.w - p.w).norm(), (d.w - p.w).norm()});
  }
  return {pair <= 1e-6 && tracker <= 1e-10,
          "max pairwise w gap " + num(pair) + ", tracker-sum gap " + num(tracker)};
}

// ---------------------------------------------------------------- 10
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Verdict determinism() {
  const fs::path root = PDD_TEST_TMP;
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream(root / "config.ini") << "[topology]\nn = 10\n[solver]\nmax_iter = 200\n";
  }
  std::vector<std::string> traces;
  for (const char* sub : {"first", "second"}) {
    const fs::path out = root / sub;
    fs::create_directories(out);
    const std::string cmd = std::string("\"") + PDD_CLI_PATH + "\" run --config \"" +
                            (root / "config.ini").string() + "\" --out-dir \"" + out.string() + "\" > \"" +
                            (out / "log").string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    if (!WIFEXITED(rc) || WEXITSTATUS(rc) != 0) return {false, "cli run failed"};
    traces.push_back(slurp(out / "trace.csv"));
  }
  const bool same = !traces[0].empty() && traces[0] == traces[1];
  return {same, same ? "traces byte-identical (" + std::to_string(traces[0].size()) + " bytes)"
                     : "traces differ"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"engine equivalence", engine_equivalence},
      {"rate certificate", certificate_rate},
      {"optimality and fixed point", optimality_fixed_point},
      {"prox correctness", prox_correctness},
      {"range-space invariant", range_space_invariant},
      {"error-recursion identity", error_recursion_identity},
      {"desk-scale experiment", desk_scale_experiment},
      {"adaptive weights", adaptive_weights},
      {"baseline sanity", baseline_sanity},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    const auto t0 = Clock::now();
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first << ": "
              << v.detail << " [" << num(seconds_since(t0)) << " s]" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
