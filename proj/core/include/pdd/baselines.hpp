#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pdd/metrics.hpp"
#include "pdd/problem.hpp"
#include "pdd/topology.hpp"

namespace pdd {

/// Consensus problem min_y sum_k f_k(y) + r(y) with quadratic
///   f_k(y) = 1/2 y^T P_k y - q_k^T y + const,
/// obtained from the dual of a sharing problem: f_k(y) = J_k*(-C_k^T y),
/// P_k = C_k H_k^{-1} C_k^T, q_k = C_k H_k^{-1} b_k, and r = g*.
/// Primal blocks are recovered as w_k = H_k^{-1}(b_k - C_k^T y_k).
struct ConsensusProblem {
  std::vector<Mat> p;
  std::vector<Vec> q;
  std::vector<Mat> recover_map;  // H_k^{-1} C_k^T
  std::vector<Vec> recover_offset;  // H_k^{-1} b_k
  NonSmoothTerm gterm;  // r = g*
  double smoothness = 0.0;  // max_k lambda_max(P_k)

  std::size_t agents() const { return p.size(); }
  std::size_t dim() const { return p.empty() ? 0 : static_cast<std::size_t>(p.front().rows()); }
  Vec gradient(std::size_t k, const Vec& y) const { return p[k] * y - q[k]; }
  /// True when r vanishes (g is the indicator of zero).
  bool smooth() const { return gterm.kind == NonSmoothKind::indicator_zero; }
  /// Stacked primal W from stacked local duals.
  Vec recover(const Vec& y_stacked) const;
};

ConsensusProblem dual_consensus(const SharingProblem& problem);

enum class BaselineMethod { extra, diging_atc };
std::string to_string(BaselineMethod m);
BaselineMethod parse_baseline_method(const std::string& name);

struct BaselineOptions {
  /// Unset: tuned by halving from 1 / smoothness until the run does not diverge.
  /// Zero is accepted and leaves only the averaging.
  std::optional<double> alpha;
  std::size_t max_iter = 500;
  double tol = 0.0;
  double divergence_factor = 1e6;
  std::optional<Vec> y0;  // stacked, zero by default
  int max_halvings = 40;
  /// Called after every iteration with the stacked iterate and the method's
  /// auxiliary sequence (EXTRA: the pre-prox point; DIGing: the gradient tracker).
  std::function<void(std::size_t iter, const Vec& x, const Vec& aux)> observer;
};

struct BaselineResult {
  RunTrace trace;
  double alpha = 0.0;
  int halvings = 0;
  Vec y;
  Vec w;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Proximal EXTRA with W~ = (I + W) / 2:
///   x^{1/2} = W x^0 - alpha grad f(x^0),  x^1 = prox_{alpha r}(x^{1/2})
///   x^{k+1+1/2} = W x^{k+1} + x^{k+1/2} - W~ x^k - alpha (grad f(x^{k+1}) - grad f(x^k))
///   x^{k+2} = prox_{alpha r}(x^{k+1+1/2})
/// With r = 0 this is plain EXTRA. W must be symmetric doubly stochastic.
BaselineResult extra_run(const ConsensusProblem& problem, const CombinationMatrix& w,
                         const GroundTruth* truth, const BaselineOptions& options = {});

/// DIGing in adapt-then-combine form:
///   x^{k+1} = W (x^k - alpha y^k),  y^{k+1} = W (y^k + grad f(x^{k+1}) - grad f(x^k)),
///   y^0 = grad f(x^0).
/// Needs smooth r; throws std::invalid_argument otherwise.
BaselineResult diging_run(const ConsensusProblem& problem, const CombinationMatrix& w,
                          const GroundTruth* truth, const BaselineOptions& options = {});

BaselineResult baseline_run(BaselineMethod method, const ConsensusProblem& problem,
                            const CombinationMatrix& w, const GroundTruth* truth,
                            const BaselineOptions& options = {});

}  // namespace pdd
