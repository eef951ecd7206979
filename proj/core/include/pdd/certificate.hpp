#pragma once

#include <string>
#include <vector>

#include "pdd/problem.hpp"
#include "pdd/topology.hpp"
#include "pdd/types.hpp"

namespace pdd {

struct StepBounds {
  double mu_w_max = 0.0;  // 1 / (2 delta), inclusive
  double mu_y_max = 0.0;  // nu / (2 sigma_max^2(C_d)), strict
};

/// Throws std::invalid_argument("curvature bounds violated ...") unless 0 < nu <= delta,
/// and when sigma_max(C_d) is not positive.
StepBounds stepsize_bounds(double delta, double nu, const SpectralSummary& coupling);

inline constexpr double kAutoStepSafety = 0.9;
inline constexpr double kStrictMargin = 1e-12;

/// Steps at `safety` times the bounds.
StepSizes auto_steps(const StepBounds& bounds, double safety = kAutoStepSafety);

struct RateCertificate {
  StepSizes steps;
  StepBounds bounds;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  double gamma3 = 1.0;
  double gamma = 1.0;
  bool full_row_rank_Cd = false;
  bool certified = false;
  /// Inequalities that fail; empty iff certified.
  std::vector<std::string> violations;

  // Inputs kept so downstream quantities (C_o, the weight statistic) use the same values.
  double delta = 0.0;
  double nu = 0.0;
  double sigma_max_Cd = 0.0;
  double lambda_min_gram_Cd = 0.0;
  double sigma_min_A = 0.0;

  /// 1 - mu_y mu_w sigma_max^2(C_d), the denominator of gamma1 and C_o.
  double energy_floor() const { return 1.0 - steps.mu_y * steps.mu_w * sigma_max_Cd * sigma_max_Cd; }
};

/// gamma1 = (1 - mu_w nu (1 - mu_w delta)) / (1 - mu_y mu_w sigma_max^2(C_d))
/// gamma2 = 1 - mu_w mu_y lambda_min(C_d C_d^T)
/// gamma3 = sigma_min_nonzero^2(A)
/// Out-of-bound steps give an uncertified verdict naming the violated inequality.
RateCertificate rate_gamma(const StepSizes& steps, double delta, double nu,
                           const SpectralSummary& coupling, const SpectralSummary& mixing);

/// Convenience wrapper evaluating the spectral summaries of C_d and A.
RateCertificate certify(const SharingProblem& problem, const CombinationMatrix& a,
                        const StepSizes& steps);

/// Weighted initial error energy
///   (||w~||^2_{I - mu_y mu_w C_d^T C_d} + a_m ||y~||^2_{I - mu_y mu_w C_d C_d^T} + a_m ||x~||^2)
///   / (1 - mu_y mu_w sigma_max^2(C_d))
/// with C_d, w~, y~, x~ given in stacked network form.
double initial_error_constant(const Mat& cd, const StepSizes& steps, double sigma_max_cd,
                              const Vec& w_err, const Vec& y_err, const Vec& x_err);

/// Residuals of the stacked optimality conditions for (W, Y, X).
/// X is taken in the scaling of the network recursion (Z = Y + mu_y C_d W + D X),
/// so the inclusion is tested for C_d W + D X / mu_y.
struct OptimalityResiduals {
  double r_primal = 0.0;  // ||grad J(W) + C_d^T Y||
  double r_nullD = 0.0;   // ||D Y||
  double r_prox = 0.0;    // ||Y - prox_{G*}(Y + C_d W + D X / mu_y)||
  PairResiduals r_pair;   // centralized pair (W, mean of the y_k)

  double max() const;
};

OptimalityResiduals optimality_residuals(const SharingProblem& problem, const Vec& w, const Vec& y,
                                         const Vec& x, const Mat& d, double mu_y);

/// Mean of the N dual blocks of a stacked Y.
Vec mean_block(const Vec& stacked, std::size_t blocks);

}  // namespace pdd
