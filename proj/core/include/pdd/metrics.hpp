#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pdd/types.hpp"

namespace pdd {

struct TraceRow {
  std::size_t iter = 0;
  double sq_error = 0.0;                 // ||W_i - W*||^2, network sum
  double dual_consensus_residual = 0.0;  // max_k ||y_k - mean y||
  double grad_residual = 0.0;
  double mu_w = 0.0;
  double mu_y = 0.0;
  // Not part of the CSV schema; kept for the dual-form MSD.
  double dual_sq_error = 0.0;            // ||Y_i - 1 (x) y*||^2
};

/// Per-iteration record of one run. Rows must have strictly increasing iter
/// starting at 0 and nonnegative sq_error (NaN when no reference is known);
/// append() enforces both.
class RunTrace {
 public:
  RunTrace() = default;
  explicit RunTrace(std::string weights_policy) : policy_(std::move(weights_policy)) {}

  void append(const TraceRow& row);

  const std::vector<TraceRow>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const TraceRow& back() const { return rows_.back(); }

  const std::string& weights_policy() const { return policy_; }
  void set_weights_policy(std::string p) { policy_ = std::move(p); }

  /// Free-form metadata written as leading '#' comment lines.
  std::map<std::string, std::string>& metadata() { return meta_; }
  const std::map<std::string, std::string>& metadata() const { return meta_; }

  std::vector<double> sq_errors() const;

 private:
  std::vector<TraceRow> rows_;
  std::string policy_ = "static";
  std::map<std::string, std::string> meta_;
};

/// Columns: iter,sq_error,dual_consensus_residual,grad_residual,stepsize_mu_w,stepsize_mu_y,weights_policy
void write_trace_csv(std::ostream& out, const RunTrace& trace);
RunTrace read_trace_csv(std::istream& in);

inline constexpr double kRateFitFloor = 1e-24;

struct RateFit {
  double gamma_hat = 1.0;
  double lower = 1.0;  // exp(slope - 2 se)
  double upper = 1.0;  // exp(slope + 2 se)
  double slope = 0.0;
  double slope_stderr = 0.0;
  std::size_t rows_used = 0;
};

/// Least-squares slope of log(sq_error) against the row index after
/// `burn_in`, stopping at the first value at or below 1e-24. Needs at least
/// ten usable rows; throws std::invalid_argument otherwise.
RateFit fit_linear_rate(std::span<const double> sq_errors, std::size_t burn_in);
RateFit fit_linear_rate(const RunTrace& trace, std::size_t burn_in);

/// Steady-state deviation of one trial: averages over the last 10% of rows of
/// sq_error / N (primal) and dual_sq_error / N (dual).
struct TrialDeviation {
  double primal = 0.0;
  double dual = 0.0;
};
TrialDeviation steady_state_deviation(const RunTrace& trace, std::size_t n_agents);

struct MsdEstimate {
  double msd_primal = 0.0;
  double msd_dual = 0.0;
  double stderr_primal = 0.0;
  double stderr_dual = 0.0;
  std::vector<TrialDeviation> trials;
};

/// Seed for trial `t` of a Monte Carlo study keyed by `seed`.
std::uint64_t trial_seed(std::uint64_t seed, std::size_t t);

/// Monte Carlo MSD over `n_trials` independent realizations. Trials may run
/// concurrently; aggregation uses pairwise summation in trial order.
MsdEstimate msd_estimate(const std::function<TrialDeviation(std::uint64_t)>& trial,
                         std::size_t n_trials, std::uint64_t seed, bool parallel = false);

/// Pairwise (cascade) summation.
double pairwise_sum(std::span<const double> values);

}  // namespace pdd
