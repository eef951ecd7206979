#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pdd/adaptive_weights.hpp"
#include "pdd/certificate.hpp"
#include "pdd/metrics.hpp"
#include "pdd/problem.hpp"
#include "pdd/topology.hpp"

namespace pdd {

/// Per-agent iterates of the primal-dual diffusion recursion.
struct AgentState {
  Vec w;    // primal block, Q_k
  Vec y;    // local dual copy, M
  Vec psi;  // M
  Vec z;    // M
  Vec phi;  // M
  Vec x;    // auxiliary, M; zero at start
};

/// Starting point in stacked form. Missing entries start at zero; x must be zero.
struct InitialPoint {
  std::optional<Vec> w;  // Q
  std::optional<Vec> y;  // M N
  std::optional<Vec> x;  // M N
};

/// psi(-1) = phi(-1) = 0 and x = 0. Throws std::invalid_argument on a size
/// mismatch or a non-zero x.
std::vector<AgentState> init_state(const SharingProblem& problem, const InitialPoint& init = {});

enum class Schedule { sequential, concurrent };

/// One iteration for every agent:
///   w_k   <- w_k - mu_w grad J_k(w_k) - mu_w C_k^T y_k
///   psi_k <- y_k + mu_y C_k w_k
///   z_k   <- phi_k + psi_k - psi_k(prev)
///   phi_k <- sum_{l in N_k} a(l,k) z_l        (after all z are ready)
///   y_k   <- prox_{(mu_y/N) g*}(phi_k)
/// Throws NonFiniteError naming the first offending agent.
void pdd_step(std::vector<AgentState>& states, const SharingProblem& problem,
              const CombinationMatrix& a, const StepSizes& steps, std::size_t iteration = 0,
              Schedule schedule = Schedule::sequential);

/// Stacked operators. mixing = M (x) I, d = D (x) I with D^2 = I - M, cd = blkdiag{C_k}.
struct NetworkOperators {
  Mat mixing;
  Mat d;
  Mat cd;
};

NetworkOperators network_operators(const SharingProblem& problem, const CombinationMatrix& a);

struct NetworkState {
  Vec w;    // Q
  Vec y;    // M N
  Vec psi;  // M N
  Vec z;    // M N
  Vec phi;  // M N
  Vec x;    // M N
};

NetworkState init_network(const SharingProblem& problem, const InitialPoint& init = {});

///   W <- W - mu_w grad J(W) - mu_w C_d^T Y
///   Z <- Y + mu_y C_d W + D X
///   X <- X - D Z
///   Y <- prox(mixing Z)
void network_step(NetworkState& net, const SharingProblem& problem, const NetworkOperators& ops,
                  const StepSizes& steps, std::size_t iteration = 0);

/// Stationary point of network_step: W*, Y* = 1 (x) y*, Z* = 1 (x) (y* + (mu_y/N) C W*)
/// and X* = D^+ (Z* - Y* - mu_y C_d W*).
NetworkState network_fixed_point(const SharingProblem& problem, const GroundTruth& truth,
                                 const NetworkOperators& ops, double mu_y);

/// Tracking form with X eliminated:
///   phi_i = A (phi_{i-1} + Y_{i-1} - Y_{i-2} + mu_y C_d (W_i - W_{i-1}))
/// The histories start at zero, which matches psi(-1) = 0 in the per-agent form.
struct TrackingState {
  Vec w;       // W_{i-1}
  Vec w_ref;   // W used in the difference term; zero before the first step
  Vec phi;     // phi_{i-1}
  Vec y;       // Y_{i-1}
  Vec y_prev;  // Y_{i-2}
};

TrackingState init_tracking(const SharingProblem& problem, const InitialPoint& init = {});

void tracking_step(TrackingState& track, const SharingProblem& problem,
                   const CombinationMatrix& a, const StepSizes& steps, std::size_t iteration = 0);

/// Stacked views of per-agent states.
Vec stack_w(const std::vector<AgentState>& states);
Vec stack_y(const std::vector<AgentState>& states);
Vec stack_phi(const std::vector<AgentState>& states);

/// max_k ||y_k - mean y||.
double dual_consensus_residual(const Vec& y_stacked, std::size_t agents);

enum class WeightsPolicy { static_weights, adaptive };
enum class Engine { per_agent, network, tracking };
enum class WeightStatistic { filter, theorem_scaled };

std::string to_string(WeightsPolicy p);
std::string to_string(Engine e);
std::string to_string(WeightStatistic s);
WeightsPolicy parse_weights_policy(const std::string& name);
Engine parse_engine(const std::string& name);
WeightStatistic parse_weight_statistic(const std::string& name);

inline constexpr double kDivergenceFactor = 1e6;
inline constexpr std::size_t kDefaultMaxIter = 500;

struct RunOptions {
  WeightsPolicy policy = WeightsPolicy::static_weights;
  /// Unset: 0.9 times the step-size bounds.
  std::optional<StepSizes> steps;
  std::size_t max_iter = kDefaultMaxIter;
  /// Stop once ||W_i - W*||^2 <= tol. Needs ground truth.
  double tol = 0.0;
  Engine engine = Engine::per_agent;
  Schedule schedule = Schedule::sequential;
  double zeta = kDefaultZeta;
  WeightStatistic statistic = WeightStatistic::filter;
  bool record_weights = false;
  InitialPoint init;
  double divergence_factor = kDivergenceFactor;
};

struct RunResult {
  RunTrace trace;
  Vec w;
  Vec y;
  StepSizes steps;
  std::size_t iterations = 0;
  bool converged = false;
  double initial_sq_error = 0.0;
  std::vector<WeightSnapshot> weight_history;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, RunTrace trace, std::size_t iteration)
      : std::runtime_error(what), trace_(std::move(trace)), iteration_(iteration) {}
  const RunTrace& trace() const { return trace_; }
  std::size_t iteration() const { return iteration_; }

 private:
  RunTrace trace_;
  std::size_t iteration_;
};

/// Iterates until ||W_i - W*||^2 <= tol or max_iter. Row i of the trace holds
/// the state after iteration i. Without ground truth sq_error is NaN, tol is
/// ignored and divergence is judged on ||W_i||^2. The adaptive policy starts
/// from `weights` and is not available on the network engine.
RunResult run(const SharingProblem& problem, const DirectedTopology& topo,
              const CombinationMatrix& weights, const GroundTruth* truth,
              const RunOptions& options = {});

/// Same with Metropolis weights on `topo`.
RunResult run(const SharingProblem& problem, const DirectedTopology& topo,
              const GroundTruth* truth, const RunOptions& options = {});

/// 0.9 times the bounds for this problem.
StepSizes default_steps(const SharingProblem& problem);

}  // namespace pdd
