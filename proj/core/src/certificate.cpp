#include "pdd/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pdd {

StepBounds stepsize_bounds(double delta, double nu, const SpectralSummary& coupling) {
  if (!(nu > 0.0) || !(delta >= nu)) {
    throw std::invalid_argument("curvature bounds violated: need 0 < nu <= delta");
  }
  if (!(coupling.sigma_max > 0.0)) {
    throw std::invalid_argument("stepsize_bounds: sigma_max(C_d) must be positive");
  }
  return {1.0 / (2.0 * delta), nu / (2.0 * coupling.sigma_max * coupling.sigma_max)};
}

StepSizes auto_steps(const StepBounds& bounds, double safety) {
  return {safety * bounds.mu_w_max, safety * bounds.mu_y_max};
}

RateCertificate rate_gamma(const StepSizes& steps, double delta, double nu,
                           const SpectralSummary& coupling, const SpectralSummary& mixing) {
  RateCertificate c;
  c.steps = steps;
  c.delta = delta;
  c.nu = nu;
  c.sigma_max_Cd = coupling.sigma_max;
  c.lambda_min_gram_Cd = coupling.lambda_min_gram;
  c.sigma_min_A = mixing.sigma_min_nonzero;
  c.full_row_rank_Cd = coupling.full_row_rank();

  const double mw = steps.mu_w;
  const double my = steps.mu_y;
  c.gamma1 = (1.0 - mw * nu * (1.0 - mw * delta)) / c.energy_floor();
  c.gamma2 = 1.0 - mw * my * coupling.lambda_min_gram;
  c.gamma3 = mixing.sigma_min_nonzero * mixing.sigma_min_nonzero;
  c.gamma = std::max({c.gamma1, c.gamma2, c.gamma3});

  auto fmt = [](double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
  };
  if (!(mw > 0.0) || !(my > 0.0)) c.violations.push_back("step sizes must be strictly positive");
  if (nu > 0.0 && delta >= nu && coupling.sigma_max > 0.0) {
    c.bounds = stepsize_bounds(delta, nu, coupling);
    if (mw > c.bounds.mu_w_max) {
      c.violations.push_back("mu_w <= 1/(2 delta) violated: " + fmt(mw) + " > " + fmt(c.bounds.mu_w_max));
    }
    if (!(my < c.bounds.mu_y_max - kStrictMargin)) {
      c.violations.push_back("mu_y < nu/(2 sigma_max^2(C_d)) violated: " + fmt(my) +
                             " >= " + fmt(c.bounds.mu_y_max));
    }
  } else {
    c.violations.push_back("curvature bounds violated: need 0 < nu <= delta");
  }
  if (!c.full_row_rank_Cd) c.violations.push_back("C_d is not full row rank");
  if (!(c.gamma1 < 1.0)) c.violations.push_back("gamma1 < 1 violated: " + fmt(c.gamma1));
  if (!(c.gamma2 < 1.0)) c.violations.push_back("gamma2 < 1 violated: " + fmt(c.gamma2));
  if (!(c.gamma3 < 1.0)) c.violations.push_back("gamma3 < 1 violated: " + fmt(c.gamma3));
  if (!std::isfinite(c.gamma)) c.violations.push_back("gamma is not finite");
  c.certified = c.violations.empty();
  return c;
}

RateCertificate certify(const SharingProblem& problem, const CombinationMatrix& a,
                        const StepSizes& steps) {
  return rate_gamma(steps, problem.delta, problem.nu,
                    spectral_summary(problem.coupling.block_diagonal()), spectral_summary(a.weights()));
}

double initial_error_constant(const Mat& cd, const StepSizes& steps, double sigma_max_cd,
                              const Vec& w_err, const Vec& y_err, const Vec& x_err) {
  const double mm = steps.mu_y * steps.mu_w;
  const double am = steps.ratio();
  const Vec cw = cd * w_err;
  const Vec cty = cd.transpose() * y_err;
  const double w_term = w_err.squaredNorm() - mm * cw.squaredNorm();
  const double y_term = y_err.squaredNorm() - mm * cty.squaredNorm();
  return (w_term + am * y_term + am * x_err.squaredNorm()) /
         (1.0 - mm * sigma_max_cd * sigma_max_cd);
}

double OptimalityResiduals::max() const {
  return std::max({r_primal, r_nullD, r_prox, r_pair.max()});
}

Vec mean_block(const Vec& stacked, std::size_t blocks) {
  const auto n = static_cast<Index>(blocks);
  const Index m = stacked.size() / n;
  Vec mean = Vec::Zero(m);
  for (Index k = 0; k < n; ++k) mean += stacked.segment(k * m, m);
  return mean / static_cast<double>(n);
}

OptimalityResiduals optimality_residuals(const SharingProblem& problem, const Vec& w, const Vec& y,
                                         const Vec& x, const Mat& d, double mu_y) {
  const auto n = problem.agents();
  const auto m = static_cast<Index>(problem.dual_dim());
  if (y.size() != m * static_cast<Index>(n) || x.size() != y.size() || d.rows() != y.size()) {
    throw std::invalid_argument("optimality_residuals: dimension mismatch");
  }
  const Mat cd = problem.coupling.block_diagonal();
  OptimalityResiduals r;
  r.r_primal = (problem.stacked_gradient(w) + cd.transpose() * y).norm();
  r.r_nullD = (d * y).norm();
  const Vec u = y + cd * w + d * x / mu_y;
  double gap = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto seg = static_cast<Index>(k) * m;
    const Vec yk = y.segment(seg, m);
    gap += (yk - prox_conjugate(problem.gterm, 1.0 / static_cast<double>(n), u.segment(seg, m))).squaredNorm();
  }
  r.r_prox = std::sqrt(gap);
  r.r_pair = pair_residuals(problem, w, mean_block(y, n));
  return r;
}

}  // namespace pdd
