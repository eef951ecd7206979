#include "pdd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

namespace pdd {

namespace {

Index idx(std::size_t v) { return static_cast<Index>(v); }

void check_length(const std::optional<Vec>& v, std::size_t n, const char* what) {
  if (v && static_cast<std::size_t>(v->size()) != n) {
    throw std::invalid_argument(std::string("initial ") + what + " has length " +
                                std::to_string(v->size()) + ", expected " + std::to_string(n));
  }
}

void validate_init(const SharingProblem& problem, const InitialPoint& init) {
  const auto mn = problem.dual_dim() * problem.agents();
  check_length(init.w, problem.primal_dim(), "w");
  check_length(init.y, mn, "y");
  check_length(init.x, mn, "x");
  if (init.x && init.x->lpNorm<Eigen::Infinity>() != 0.0) {
    throw std::invalid_argument("initial x must be zero");
  }
}

/// Blockwise prox_{(mu_y/N) g*} on a stacked dual vector.
Vec prox_blocks(const SharingProblem& problem, double mu_y, const Vec& v) {
  const auto m = idx(problem.dual_dim());
  const double scale = mu_y / static_cast<double>(problem.agents());
  Vec out(v.size());
  for (std::size_t k = 0; k < problem.agents(); ++k) {
    out.segment(idx(k) * m, m) = prox_conjugate(problem.gterm, scale, v.segment(idx(k) * m, m));
  }
  return out;
}

/// U a with U = [u_1 ... u_N]: block k is sum_l a(l,k) u_l.
Vec mix(const Mat& a, const Vec& stacked, std::size_t m) {
  const auto n = a.rows();
  Eigen::Map<const Mat> u(stacked.data(), idx(m), n);
  Mat out = u * a;
  return Eigen::Map<const Vec>(out.data(), out.size());
}

void check_finite(const SharingProblem& problem, const Vec& w, const Vec& y, std::size_t iteration) {
  const auto m = idx(problem.dual_dim());
  for (std::size_t k = 0; k < problem.agents(); ++k) {
    if (!w.segment(idx(problem.offset(k)), idx(problem.block_dim(k))).allFinite() ||
        !y.segment(idx(k) * m, m).allFinite()) {
      throw NonFiniteError(k, iteration);
    }
  }
}

template <class Fn>
void for_agents(std::size_t n, Schedule schedule, Fn&& fn) {
  if (schedule == Schedule::sequential || n < 2) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  const std::size_t hw = std::max(2u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min(n, static_cast<std::size_t>(hw));
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t k = t; k < n; k += workers) fn(k);
    });
  }
  // Joining the pool is the phase barrier.
}

}  // namespace

std::vector<AgentState> init_state(const SharingProblem& problem, const InitialPoint& init) {
  validate_init(problem, init);
  const auto m = idx(problem.dual_dim());
  std::vector<AgentState> states(problem.agents());
  for (std::size_t k = 0; k < problem.agents(); ++k) {
    auto& s = states[k];
    const auto q = idx(problem.block_dim(k));
    s.w = init.w ? Vec(init.w->segment(idx(problem.offset(k)), q)) : Vec::Zero(q);
    s.y = init.y ? Vec(init.y->segment(idx(k) * m, m)) : Vec::Zero(m);
    s.psi = Vec::Zero(m);
    s.z = Vec::Zero(m);
    s.phi = Vec::Zero(m);
    s.x = Vec::Zero(m);
  }
  return states;
}

void pdd_step(std::vector<AgentState>& states, const SharingProblem& problem,
              const CombinationMatrix& a, const StepSizes& steps, std::size_t iteration,
              Schedule schedule) {
  const auto n = problem.agents();
  if (states.size() != n || a.size() != n) {
    throw std::invalid_argument("pdd_step: agent count mismatch");
  }
  const double scale = steps.mu_y / static_cast<double>(n);

  for_agents(n, schedule, [&](std::size_t k) {
    auto& s = states[k];
    const Mat& ck = problem.coupling.block(k);
    s.w = s.w - steps.mu_w * grad_local(problem.costs[k], s.w) - steps.mu_w * (ck.transpose() * s.y);
    Vec psi = s.y + steps.mu_y * (ck * s.w);
    s.z = s.phi + psi - s.psi;
    s.psi = std::move(psi);
  });

  for_agents(n, schedule, [&](std::size_t k) {
    auto& s = states[k];
    Vec phi = Vec::Zero(s.z.size());
    for (Index l = 0; l < idx(n); ++l) {
      const double alk = a.weights()(l, idx(k));
      if (alk != 0.0) phi.noalias() += alk * states[static_cast<std::size_t>(l)].z;
    }
    s.phi = std::move(phi);
  });

  for (std::size_t k = 0; k < n; ++k) {
    auto& s = states[k];
    s.y = prox_conjugate(problem.gterm, scale, s.phi);
    if (!s.w.allFinite() || !s.y.allFinite()) throw NonFiniteError(k, iteration);
  }
}

Vec stack_w(const std::vector<AgentState>& states) {
  Index total = 0;
  for (const auto& s : states) total += s.w.size();
  Vec out(total);
  Index off = 0;
  for (const auto& s : states) {
    out.segment(off, s.w.size()) = s.w;
    off += s.w.size();
  }
  return out;
}

namespace {
template <class Get>
Vec stack_dual(const std::vector<AgentState>& states, Get get) {
  if (states.empty()) return {};
  const auto m = get(states.front()).size();
  Vec out(m * idx(states.size()));
  for (std::size_t k = 0; k < states.size(); ++k) out.segment(idx(k) * m, m) = get(states[k]);
  return out;
}
}  // namespace

Vec stack_y(const std::vector<AgentState>& states) {
  return stack_dual(states, [](const AgentState& s) -> const Vec& { return s.y; });
}

Vec stack_phi(const std::vector<AgentState>& states) {
  return stack_dual(states, [](const AgentState& s) -> const Vec& { return s.phi; });
}

double dual_consensus_residual(const Vec& y, std::size_t agents) {
  const Vec mean = mean_block(y, agents);
  const auto m = mean.size();
  double worst = 0.0;
  for (std::size_t k = 0; k < agents; ++k) {
    worst = std::max(worst, (y.segment(idx(k) * m, m) - mean).norm());
  }
  return worst;
}

namespace {

Mat kron_identity(const Mat& a, std::size_t m) {
  const auto mm = idx(m);
  Mat out = Mat::Zero(a.rows() * mm, a.cols() * mm);
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) != 0.0) out.block(i * mm, j * mm, mm, mm).diagonal().setConstant(a(i, j));
    }
  }
  return out;
}

/// Square root of I - M. Symmetric M gets the PSD root; otherwise the principal root.
/// The consensus eigenvalue is deflated first: with P = 1 pi^T its spectral projector,
/// sqrt(I - M) = sqrt(I - M + P) - P and I - M + P is well away from singular, so the
/// null space survives rounding instead of picking up sqrt(eps) noise.
Mat deficiency_root(const CombinationMatrix& a) {
  const Mat def = consensus_deficiency(a);
  const auto n = def.rows();
  if (a.is_symmetric()) {
    const Mat proj = Mat::Constant(n, n, 1.0 / static_cast<double>(n));
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (def + def.transpose()) + proj);
    const Vec roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose() - proj;
  }
  Eigen::JacobiSVD<Mat> svd(def.transpose(), Eigen::ComputeFullV);
  Vec pi = svd.matrixV().col(n - 1);
  pi /= pi.sum();
  const Mat proj = Vec::Ones(n) * pi.transpose();
  const Mat root = Mat((def + proj).sqrt()) - proj;
  if (!root.allFinite()) throw std::runtime_error("network_operators: square root of I - A failed");
  return root;
}

Vec cd_apply(const SharingProblem& problem, const Vec& w) {
  const auto m = idx(problem.dual_dim());
  Vec out(m * idx(problem.agents()));
  for (std::size_t k = 0; k < problem.agents(); ++k) {
    out.segment(idx(k) * m, m) =
        problem.coupling.block(k) * w.segment(idx(problem.offset(k)), idx(problem.block_dim(k)));
  }
  return out;
}

Vec cd_transpose_apply(const SharingProblem& problem, const Vec& y) {
  const auto m = idx(problem.dual_dim());
  Vec out(idx(problem.primal_dim()));
  for (std::size_t k = 0; k < problem.agents(); ++k) {
    out.segment(idx(problem.offset(k)), idx(problem.block_dim(k))) =
        problem.coupling.block(k).transpose() * y.segment(idx(k) * m, m);
  }
  return out;
}

}  // namespace

NetworkOperators network_operators(const SharingProblem& problem, const CombinationMatrix& a) {
  if (a.size() != problem.agents()) throw std::invalid_argument("network_operators: size mismatch");
  NetworkOperators ops;
  ops.mixing = kron_identity(a.mixing(), problem.dual_dim());
  ops.d = kron_identity(deficiency_root(a), problem.dual_dim());
  ops.cd = problem.coupling.block_diagonal();
  return ops;
}

NetworkState init_network(const SharingProblem& problem, const InitialPoint& init) {
  validate_init(problem, init);
  const auto mn = idx(problem.dual_dim() * problem.agents());
  NetworkState net;
  net.w = init.w ? *init.w : Vec::Zero(idx(problem.primal_dim()));
  net.y = init.y ? *init.y : Vec::Zero(mn);
  net.psi = Vec::Zero(mn);
  net.z = Vec::Zero(mn);
  net.phi = Vec::Zero(mn);
  net.x = Vec::Zero(mn);
  return net;
}

void network_step(NetworkState& net, const SharingProblem& problem, const NetworkOperators& ops,
                  const StepSizes& steps, std::size_t iteration) {
  net.w = net.w - steps.mu_w * problem.stacked_gradient(net.w) -
          steps.mu_w * (ops.cd.transpose() * net.y);
  net.psi = net.y + steps.mu_y * (ops.cd * net.w);
  net.z = net.psi + ops.d * net.x;
  net.x = net.x - ops.d * net.z;
  net.phi = ops.mixing * net.z;
  net.y = prox_blocks(problem, steps.mu_y, net.phi);
  check_finite(problem, net.w, net.y, iteration);
}

NetworkState network_fixed_point(const SharingProblem& problem, const GroundTruth& truth,
                                 const NetworkOperators& ops, double mu_y) {
  const auto n = problem.agents();
  const Vec zeta = truth.y_star + (mu_y / static_cast<double>(n)) * problem.coupling.apply(truth.w_star);
  NetworkState fp;
  fp.w = truth.w_star;
  fp.y = truth.y_star.replicate(idx(n), 1);
  fp.z = zeta.replicate(idx(n), 1);
  fp.psi = fp.y + mu_y * (ops.cd * fp.w);
  fp.phi = ops.mixing * fp.z;
  fp.x = ops.d.completeOrthogonalDecomposition().solve(fp.z - fp.psi);
  return fp;
}

TrackingState init_tracking(const SharingProblem& problem, const InitialPoint& init) {
  validate_init(problem, init);
  const auto mn = idx(problem.dual_dim() * problem.agents());
  TrackingState t;
  t.w = init.w ? *init.w : Vec::Zero(idx(problem.primal_dim()));
  t.w_ref = Vec::Zero(idx(problem.primal_dim()));
  t.phi = Vec::Zero(mn);
  t.y = init.y ? *init.y : Vec::Zero(mn);
  t.y_prev = Vec::Zero(mn);
  return t;
}

void tracking_step(TrackingState& t, const SharingProblem& problem, const CombinationMatrix& a,
                   const StepSizes& steps, std::size_t iteration) {
  Vec w_new = t.w - steps.mu_w * problem.stacked_gradient(t.w) -
              steps.mu_w * cd_transpose_apply(problem, t.y);
  const Vec inner = t.phi + t.y - t.y_prev + steps.mu_y * cd_apply(problem, w_new - t.w_ref);
  t.phi = mix(a.weights(), inner, problem.dual_dim());
  t.y_prev = std::move(t.y);
  t.y = prox_blocks(problem, steps.mu_y, t.phi);
  t.w_ref = w_new;
  t.w = std::move(w_new);
  check_finite(problem, t.w, t.y, iteration);
}

std::string to_string(WeightsPolicy p) {
  return p == WeightsPolicy::adaptive ? "adaptive" : "static";
}

std::string to_string(Engine e) {
  switch (e) {
    case Engine::per_agent: return "per-agent";
    case Engine::network: return "network";
    case Engine::tracking: return "tracking";
  }
  return "per-agent";
}

std::string to_string(WeightStatistic s) {
  return s == WeightStatistic::theorem_scaled ? "theorem-scaled" : "filter";
}

WeightsPolicy parse_weights_policy(const std::string& name) {
  if (name == "static") return WeightsPolicy::static_weights;
  if (name == "adaptive") return WeightsPolicy::adaptive;
  throw std::invalid_argument("unknown weights policy '" + name + "'");
}

Engine parse_engine(const std::string& name) {
  if (name == "per-agent") return Engine::per_agent;
  if (name == "network") return Engine::network;
  if (name == "tracking") return Engine::tracking;
  throw std::invalid_argument("unknown engine '" + name + "'");
}

WeightStatistic parse_weight_statistic(const std::string& name) {
  if (name == "filter") return WeightStatistic::filter;
  if (name == "theorem-scaled") return WeightStatistic::theorem_scaled;
  throw std::invalid_argument("unknown weight statistic '" + name + "'");
}

StepSizes default_steps(const SharingProblem& problem) {
  const auto cd = spectral_summary(problem.coupling.block_diagonal());
  return auto_steps(stepsize_bounds(problem.delta, problem.nu, cd));
}

namespace {

/// Per-agent energies of the initial error for the theorem-scaled statistic.
std::vector<InitialErrorTerms> initial_terms(const SharingProblem& problem, const GroundTruth& truth,
                                             const CombinationMatrix& a, const StepSizes& steps,
                                             const Vec& w0, const Vec& y0) {
  const auto ops = network_operators(problem, a);
  const auto fp = network_fixed_point(problem, truth, ops, steps.mu_y);
  const auto m = idx(problem.dual_dim());
  const double mm = steps.mu_w * steps.mu_y;
  std::vector<InitialErrorTerms> out(problem.agents());
  for (std::size_t k = 0; k < problem.agents(); ++k) {
    const Mat& ck = problem.coupling.block(k);
    const auto q = idx(problem.block_dim(k));
    const Vec we = w0.segment(idx(problem.offset(k)), q) - truth.w_star.segment(idx(problem.offset(k)), q);
    const Vec ye = y0.segment(idx(k) * m, m) - truth.y_star;
    const Vec xe = -fp.x.segment(idx(k) * m, m);
    out[k].w_weighted = we.squaredNorm() - mm * (ck * we).squaredNorm();
    out[k].y_weighted = ye.squaredNorm() - mm * (ck.transpose() * ye).squaredNorm();
    out[k].x_sq = xe.squaredNorm();
  }
  return out;
}

}  // namespace

RunResult run(const SharingProblem& problem, const DirectedTopology& topo,
              const CombinationMatrix& weights, const GroundTruth* truth, const RunOptions& opt) {
  const auto n = problem.agents();
  if (topo.size() != n || weights.size() != n) {
    throw std::invalid_argument("run: topology, weights and problem disagree on the agent count");
  }
  const bool adaptive = opt.policy == WeightsPolicy::adaptive;
  if (adaptive && opt.engine == Engine::network) {
    throw std::invalid_argument("run: the network engine supports static weights only");
  }
  if (truth && static_cast<std::size_t>(truth->w_star.size()) != problem.primal_dim()) {
    throw std::invalid_argument("run: ground truth does not match the problem");
  }

  RunResult res;
  res.steps = opt.steps ? *opt.steps : default_steps(problem);
  if (!(res.steps.mu_w > 0.0 && res.steps.mu_y > 0.0)) {
    throw std::invalid_argument("run: step sizes must be positive");
  }
  res.trace = RunTrace(to_string(opt.policy));

  std::vector<AgentState> agents;
  NetworkState net;
  TrackingState track;
  std::optional<NetworkOperators> ops;
  switch (opt.engine) {
    case Engine::per_agent: agents = init_state(problem, opt.init); break;
    case Engine::network:
      net = init_network(problem, opt.init);
      ops = network_operators(problem, weights);
      break;
    case Engine::tracking: track = init_tracking(problem, opt.init); break;
  }
  auto current_w = [&]() -> Vec {
    switch (opt.engine) {
      case Engine::per_agent: return stack_w(agents);
      case Engine::network: return net.w;
      case Engine::tracking: return track.w;
    }
    return {};
  };
  auto current_y = [&]() -> Vec {
    switch (opt.engine) {
      case Engine::per_agent: return stack_y(agents);
      case Engine::network: return net.y;
      case Engine::tracking: return track.y;
    }
    return {};
  };

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const Vec w0 = current_w();
  const Vec y0 = current_y();
  Vec y_ref;
  if (truth) y_ref = truth->y_star.replicate(idx(n), 1);
  res.initial_sq_error = truth ? (w0 - truth->w_star).squaredNorm() : nan;
  const double div_ref = truth ? std::max(res.initial_sq_error, std::numeric_limits<double>::min())
                               : std::max(w0.squaredNorm(), 1.0);

  std::optional<AdaptiveWeightState> aw;
  std::optional<RateCertificate> cert;
  std::optional<std::vector<InitialErrorTerms>> terms;
  if (adaptive) {
    aw.emplace(topo, opt.zeta, &weights);
    if (opt.statistic == WeightStatistic::theorem_scaled) {
      cert = certify(problem, weights, res.steps);
      if (truth) terms = initial_terms(problem, *truth, weights, res.steps, w0, y0);
    }
  }

  Vec w = w0;
  Vec y = y0;
  for (std::size_t i = 0; i < opt.max_iter; ++i) {
    if (truth && (w - truth->w_star).squaredNorm() <= opt.tol) {
      res.converged = true;
      break;
    }
    std::optional<CombinationMatrix> step_weights;
    if (adaptive) {
      if (opt.statistic == WeightStatistic::filter) {
        for (std::size_t k = 0; k < n; ++k) {
          aw->update_filter(k, w.segment(idx(problem.offset(k)), idx(problem.block_dim(k))));
        }
      } else {
        aw->update_chi_theorem_scaled(*cert, terms);
      }
      step_weights = compute_weights(*aw, topo);
      if (opt.record_weights) res.weight_history.push_back({i, step_weights->weights()});
    }
    const CombinationMatrix& a = step_weights ? *step_weights : weights;
    switch (opt.engine) {
      case Engine::per_agent: pdd_step(agents, problem, a, res.steps, i, opt.schedule); break;
      case Engine::network: network_step(net, problem, *ops, res.steps, i); break;
      case Engine::tracking: tracking_step(track, problem, a, res.steps, i); break;
    }
    w = current_w();
    y = current_y();

    TraceRow row;
    row.iter = i;
    row.sq_error = truth ? (w - truth->w_star).squaredNorm() : nan;
    row.dual_sq_error = truth ? (y - y_ref).squaredNorm() : nan;
    row.dual_consensus_residual = dual_consensus_residual(y, n);
    row.grad_residual = (problem.stacked_gradient(w) + cd_transpose_apply(problem, y)).norm();
    row.mu_w = res.steps.mu_w;
    row.mu_y = res.steps.mu_y;
    res.trace.append(row);
    res.iterations = i + 1;

    const double growth = truth ? row.sq_error : w.squaredNorm();
    if (growth > opt.divergence_factor * div_ref) {
      throw DivergenceError("run diverged at iteration " + std::to_string(i), res.trace, i);
    }
  }
  if (!res.converged && truth && (w - truth->w_star).squaredNorm() <= opt.tol) res.converged = true;
  res.w = std::move(w);
  res.y = std::move(y);
  return res;
}

RunResult run(const SharingProblem& problem, const DirectedTopology& topo, const GroundTruth* truth,
              const RunOptions& options) {
  return run(problem, topo, metropolis_weights(topo), truth, options);
}

}  // namespace pdd
