#include "pdd/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "pdd/solver.hpp"

namespace pdd {

namespace {

Index idx(std::size_t v) { return static_cast<Index>(v); }

Vec mix(const Mat& a, const Vec& stacked, std::size_t m) {
  Eigen::Map<const Mat> u(stacked.data(), idx(m), a.rows());
  Mat out = u * a;
  return Eigen::Map<const Vec>(out.data(), out.size());
}

Vec stacked_gradient(const ConsensusProblem& cp, const Vec& y) {
  const auto m = idx(cp.dim());
  Vec g(y.size());
  for (std::size_t k = 0; k < cp.agents(); ++k) {
    g.segment(idx(k) * m, m) = cp.gradient(k, y.segment(idx(k) * m, m));
  }
  return g;
}

Vec prox_stacked(const ConsensusProblem& cp, double alpha, const Vec& v) {
  if (cp.smooth()) return v;
  const auto m = idx(cp.dim());
  Vec out(v.size());
  for (std::size_t k = 0; k < cp.agents(); ++k) {
    out.segment(idx(k) * m, m) = prox_conjugate(cp.gterm, alpha, v.segment(idx(k) * m, m));
  }
  return out;
}

void require_symmetric_doubly(const CombinationMatrix& w, std::size_t n) {
  if (w.size() != n) throw std::invalid_argument("baseline: weight matrix size mismatch");
  if (!w.is_symmetric()) {
    throw std::invalid_argument("baseline: W must be symmetric doubly stochastic");
  }
}

/// Shared loop. `state` holds whatever the method needs; `step` advances it and
/// returns the new stacked local variables.
struct Loop {
  const ConsensusProblem& cp;
  const GroundTruth* truth;
  const BaselineOptions& opt;
  double alpha;
  std::string name;

  BaselineResult operator()(Vec y, const std::function<Vec(std::size_t)>& step) const {
    const auto n = cp.agents();
    const auto m = idx(cp.dim());
    BaselineResult res;
    res.alpha = alpha;
    res.trace = RunTrace(name);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    Vec y_ref;
    if (truth) y_ref = truth->y_star.replicate(idx(n), 1);
    Vec w = cp.recover(y);
    const double init = truth ? (w - truth->w_star).squaredNorm() : nan;
    const double div_ref =
        truth ? std::max(init, std::numeric_limits<double>::min()) : std::max(y.squaredNorm(), 1.0);
    for (std::size_t i = 0; i < opt.max_iter; ++i) {
      if (truth && (w - truth->w_star).squaredNorm() <= opt.tol) {
        res.converged = true;
        break;
      }
      y = step(i);
      if (!y.allFinite()) {
        for (std::size_t k = 0; k < n; ++k) {
          if (!y.segment(idx(k) * m, m).allFinite()) throw NonFiniteError(k, i);
        }
      }
      w = cp.recover(y);
      TraceRow row;
      row.iter = i;
      row.sq_error = truth ? (w - truth->w_star).squaredNorm() : nan;
      row.dual_sq_error = truth ? (y - y_ref).squaredNorm() : nan;
      row.dual_consensus_residual = dual_consensus_residual(y, n);
      const Vec ybar = mean_block(y, n);
      Vec gsum = Vec::Zero(m);
      for (std::size_t k = 0; k < n; ++k) gsum += cp.gradient(k, ybar);
      const Vec fb = cp.smooth() ? Vec(ybar - gsum) : prox_conjugate(cp.gterm, 1.0, ybar - gsum);
      row.grad_residual = (ybar - fb).norm();
      row.mu_w = alpha;
      row.mu_y = alpha;
      res.trace.append(row);
      res.iterations = i + 1;
      const double growth = truth ? row.sq_error : y.squaredNorm();
      if (growth > opt.divergence_factor * div_ref) {
        throw DivergenceError(name + " diverged at iteration " + std::to_string(i), res.trace, i);
      }
    }
    if (!res.converged && truth && (w - truth->w_star).squaredNorm() <= opt.tol) res.converged = true;
    res.y = std::move(y);
    res.w = std::move(w);
    return res;
  }
};

Vec initial_y(const ConsensusProblem& cp, const BaselineOptions& opt) {
  const auto mn = idx(cp.dim() * cp.agents());
  if (!opt.y0) return Vec::Zero(mn);
  if (opt.y0->size() != mn) throw std::invalid_argument("baseline: initial point has wrong length");
  return *opt.y0;
}

BaselineResult extra_fixed(const ConsensusProblem& cp, const CombinationMatrix& wm,
                           const GroundTruth* truth, const BaselineOptions& opt, double alpha) {
  const auto m = cp.dim();
  const Mat& a = wm.weights();
  const Mat a_tilde = 0.5 * (Mat::Identity(a.rows(), a.cols()) + a);
  Vec x_prev = initial_y(cp, opt);
  Vec x = x_prev;
  Vec half_prev;
  Vec g_prev;
  auto step = [&](std::size_t i) -> Vec {
    if (i == 0) {
      g_prev = stacked_gradient(cp, x_prev);
      half_prev = mix(a, x_prev, m) - alpha * g_prev;
      x = prox_stacked(cp, alpha, half_prev);
      if (opt.observer) opt.observer(i, x, half_prev);
      return x;
    }
    const Vec g = stacked_gradient(cp, x);
    const Vec half = mix(a, x, m) + half_prev - mix(a_tilde, x_prev, m) - alpha * (g - g_prev);
    x_prev = x;
    g_prev = g;
    half_prev = half;
    x = prox_stacked(cp, alpha, half);
    if (opt.observer) opt.observer(i, x, half_prev);
    return x;
  };
  Loop loop{cp, truth, opt, alpha, "extra"};
  return loop(x, step);
}

BaselineResult diging_fixed(const ConsensusProblem& cp, const CombinationMatrix& wm,
                            const GroundTruth* truth, const BaselineOptions& opt, double alpha) {
  const auto m = cp.dim();
  const Mat& a = wm.weights();
  Vec x = initial_y(cp, opt);
  Vec g = stacked_gradient(cp, x);
  Vec tracker = g;
  auto step = [&](std::size_t i) -> Vec {
    Vec x_new = mix(a, x - alpha * tracker, m);
    const Vec g_new = stacked_gradient(cp, x_new);
    tracker = mix(a, tracker + g_new - g, m);
    g = g_new;
    x = std::move(x_new);
    if (opt.observer) opt.observer(i, x, tracker);
    return x;
  };
  Loop loop{cp, truth, opt, alpha, "diging-atc"};
  return loop(x, step);
}

template <class Fixed>
BaselineResult tuned(Fixed fixed, const ConsensusProblem& cp, const CombinationMatrix& w,
                     const GroundTruth* truth, const BaselineOptions& opt) {
  if (opt.alpha) {
    if (!(*opt.alpha >= 0.0)) throw std::invalid_argument("baseline: alpha must be nonnegative");
    auto res = fixed(cp, w, truth, opt, *opt.alpha);
    res.trace.metadata()["alpha"] = std::to_string(*opt.alpha);
    return res;
  }
  double alpha = 1.0 / cp.smoothness;
  for (int h = 0;; ++h) {
    try {
      auto res = fixed(cp, w, truth, opt, alpha);
      res.halvings = h;
      std::ostringstream os;
      os.precision(17);
      os << alpha;
      res.trace.metadata()["alpha"] = os.str();
      res.trace.metadata()["alpha_halvings"] = std::to_string(h);
      return res;
    } catch (const DivergenceError&) {
      if (h >= opt.max_halvings) throw;
    } catch (const NonFiniteError&) {
      if (h >= opt.max_halvings) throw;
    }
    alpha *= 0.5;
  }
}

}  // namespace

Vec ConsensusProblem::recover(const Vec& y) const {
  const auto m = idx(dim());
  Index total = 0;
  for (const auto& r : recover_offset) total += r.size();
  Vec w(total);
  Index off = 0;
  for (std::size_t k = 0; k < agents(); ++k) {
    const auto q = recover_offset[k].size();
    w.segment(off, q) = recover_offset[k] - recover_map[k] * y.segment(idx(k) * m, m);
    off += q;
  }
  return w;
}

ConsensusProblem dual_consensus(const SharingProblem& problem) {
  if (!(problem.nu > 0.0)) throw std::invalid_argument("dual_consensus: needs nu > 0");
  ConsensusProblem cp;
  cp.gterm = problem.gterm;
  for (std::size_t k = 0; k < problem.agents(); ++k) {
    const auto& cost = problem.costs[k];
    const Mat& ck = problem.coupling.block(k);
    Eigen::LLT<Mat> llt(cost.hessian());
    const Mat hinv_ct = llt.solve(ck.transpose());
    const Vec hinv_b = llt.solve(cost.linear());
    Mat pk = ck * hinv_ct;
    pk = 0.5 * (pk + pk.transpose());
    cp.p.push_back(pk);
    cp.q.push_back(ck * hinv_b);
    cp.recover_map.push_back(hinv_ct);
    cp.recover_offset.push_back(hinv_b);
    Eigen::SelfAdjointEigenSolver<Mat> es(pk, Eigen::EigenvaluesOnly);
    cp.smoothness = std::max(cp.smoothness, es.eigenvalues().maxCoeff());
  }
  if (!(cp.smoothness > 0.0)) throw std::invalid_argument("dual_consensus: zero coupling");
  return cp;
}

std::string to_string(BaselineMethod m) { return m == BaselineMethod::extra ? "extra" : "diging-atc"; }

BaselineMethod parse_baseline_method(const std::string& name) {
  if (name == "extra") return BaselineMethod::extra;
  if (name == "diging-atc" || name == "diging") return BaselineMethod::diging_atc;
  throw std::invalid_argument("unknown baseline method '" + name + "'");
}

BaselineResult extra_run(const ConsensusProblem& cp, const CombinationMatrix& w,
                         const GroundTruth* truth, const BaselineOptions& opt) {
  require_symmetric_doubly(w, cp.agents());
  return tuned(extra_fixed, cp, w, truth, opt);
}

BaselineResult diging_run(const ConsensusProblem& cp, const CombinationMatrix& w,
                          const GroundTruth* truth, const BaselineOptions& opt) {
  require_symmetric_doubly(w, cp.agents());
  if (!cp.smooth()) {
    throw std::invalid_argument("diging_run: requires a smooth problem (g = indicator-zero)");
  }
  return tuned(diging_fixed, cp, w, truth, opt);
}

BaselineResult baseline_run(BaselineMethod method, const ConsensusProblem& cp,
                            const CombinationMatrix& w, const GroundTruth* truth,
                            const BaselineOptions& opt) {
  return method == BaselineMethod::extra ? extra_run(cp, w, truth, opt) : diging_run(cp, w, truth, opt);
}

}  // namespace pdd
