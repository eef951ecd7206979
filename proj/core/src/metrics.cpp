#include "pdd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

namespace pdd {

void RunTrace::append(const TraceRow& row) {
  if (!rows_.empty() && row.iter <= rows_.back().iter) {
    throw std::invalid_argument("RunTrace: iteration index must increase");
  }
  if (rows_.empty() && row.iter != 0) throw std::invalid_argument("RunTrace: first row must be iter 0");
  if (row.sq_error < 0.0) throw std::invalid_argument("RunTrace: sq_error must be nonnegative");
  rows_.push_back(row);
}

std::vector<double> RunTrace::sq_errors() const {
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(r.sq_error);
  return out;
}

void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  for (const auto& [k, v] : trace.metadata()) out << "# " << k << "=" << v << '\n';
  out << "iter,sq_error,dual_consensus_residual,grad_residual,stepsize_mu_w,stepsize_mu_y,weights_policy\n";
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : trace.rows()) {
    out << r.iter << ',' << r.sq_error << ',' << r.dual_consensus_residual << ',' << r.grad_residual
        << ',' << r.mu_w << ',' << r.mu_y << ',' << trace.weights_policy() << '\n';
  }
  out.precision(old);
}

RunTrace read_trace_csv(std::istream& in) {
  RunTrace trace;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        trace.metadata()[line.substr(2, eq - 2)] = line.substr(eq + 1);
      }
      continue;
    }
    if (!header) {
      header = true;
      continue;
    }
    std::stringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw std::runtime_error("trace CSV: expected 7 columns");
    TraceRow r;
    r.iter = std::stoul(cells[0]);
    r.sq_error = std::stod(cells[1]);
    r.dual_consensus_residual = std::stod(cells[2]);
    r.grad_residual = std::stod(cells[3]);
    r.mu_w = std::stod(cells[4]);
    r.mu_y = std::stod(cells[5]);
    trace.set_weights_policy(cells[6]);
    trace.append(r);
  }
  return trace;
}

RateFit fit_linear_rate(std::span<const double> sq, std::size_t burn_in) {
  std::vector<double> xs, ys;
  for (std::size_t i = burn_in; i < sq.size(); ++i) {
    if (!(sq[i] > kRateFitFloor)) break;
    xs.push_back(static_cast<double>(i));
    ys.push_back(std::log(sq[i]));
  }
  if (xs.size() < 10) {
    throw std::invalid_argument("fit_linear_rate: fewer than 10 usable rows above the floor");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  RateFit fit;
  fit.slope = sxy / sxx;
  const double intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (intercept + fit.slope * xs[i]);
    sse += e * e;
  }
  fit.slope_stderr = std::sqrt(sse / (n - 2.0) / sxx);
  fit.gamma_hat = std::exp(fit.slope);
  fit.lower = std::exp(fit.slope - 2.0 * fit.slope_stderr);
  fit.upper = std::exp(fit.slope + 2.0 * fit.slope_stderr);
  fit.rows_used = xs.size();
  return fit;
}

RateFit fit_linear_rate(const RunTrace& trace, std::size_t burn_in) {
  const auto sq = trace.sq_errors();
  return fit_linear_rate(std::span<const double>(sq), burn_in);
}

TrialDeviation steady_state_deviation(const RunTrace& trace, std::size_t n_agents) {
  if (trace.empty()) throw std::invalid_argument("steady_state_deviation: empty trace");
  const std::size_t window = std::max<std::size_t>(1, trace.size() / 10);
  std::vector<double> p, d;
  for (std::size_t i = trace.size() - window; i < trace.size(); ++i) {
    p.push_back(trace.rows()[i].sq_error);
    d.push_back(trace.rows()[i].dual_sq_error);
  }
  const double scale = static_cast<double>(window) * static_cast<double>(n_agents);
  return {pairwise_sum(p) / scale, pairwise_sum(d) / scale};
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const auto half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t t) {
  // splitmix64 of (seed, t)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(t) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

MsdEstimate msd_estimate(const std::function<TrialDeviation(std::uint64_t)>& trial,
                         std::size_t n_trials, std::uint64_t seed, bool parallel) {
  if (n_trials == 0) throw std::invalid_argument("msd_estimate: n_trials must be >= 1");
  MsdEstimate est;
  est.trials.resize(n_trials);
  if (parallel && n_trials > 1) {
    const std::size_t workers = std::max(1U, std::thread::hardware_concurrency());
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < n_trials; t += workers) est.trials[t] = trial(trial_seed(seed, t));
      });
    }
  } else {
    for (std::size_t t = 0; t < n_trials; ++t) est.trials[t] = trial(trial_seed(seed, t));
  }
  std::vector<double> p, d;
  for (const auto& t : est.trials) {
    p.push_back(t.primal);
    d.push_back(t.dual);
  }
  const double n = static_cast<double>(n_trials);
  est.msd_primal = pairwise_sum(p) / n;
  est.msd_dual = pairwise_sum(d) / n;
  if (n_trials > 1) {
    std::vector<double> sp, sd;
    for (std::size_t t = 0; t < n_trials; ++t) {
      sp.push_back((p[t] - est.msd_primal) * (p[t] - est.msd_primal));
      sd.push_back((d[t] - est.msd_dual) * (d[t] - est.msd_dual));
    }
    est.stderr_primal = std::sqrt(pairwise_sum(sp) / (n - 1.0) / n);
    est.stderr_dual = std::sqrt(pairwise_sum(sd) / (n - 1.0) / n);
  }
  return est;
}

}  // namespace pdd
