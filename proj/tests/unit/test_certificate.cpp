#include <doctest.h>

#include <Eigen/SVD>
#include <random>

#include "helpers.hpp"
#include "pdd/certificate.hpp"
#include "pdd/solver.hpp"

using namespace pdd;

namespace {

SpectralSummary summary(double smax, double lmin_gram, double smin = 1.0, bool full = true) {
  SpectralSummary s;
  s.sigma_max = smax;
  s.sigma_min_nonzero = smin;
  s.lambda_min_gram = lmin_gram;
  s.rows = 2;
  s.rank = full ? 2 : 1;
  return s;
}

}  // namespace

TEST_CASE("step-size bounds") {
  CHECK(stepsize_bounds(2.0, 1.0, summary(1.0, 1.0)).mu_w_max == 0.25);
  CHECK(stepsize_bounds(1.0, 1.0, summary(1.0, 1.0)).mu_y_max == 0.5);
  CHECK_THROWS_WITH_AS(stepsize_bounds(1.0, 0.0, summary(1.0, 1.0)), doctest::Contains("curvature bounds violated"),
                       std::invalid_argument);
  CHECK_THROWS(stepsize_bounds(1.0, 2.0, summary(1.0, 1.0)));
  const auto st = auto_steps(stepsize_bounds(2.0, 1.0, summary(2.0, 1.0)));
  CHECK(st.mu_w == doctest::Approx(0.9 * 0.25));
  CHECK(st.mu_y == doctest::Approx(0.9 * 1.0 / 8.0));
}

TEST_CASE("bound monotonicity on grids") {
  double prev_w = 1e300;
  for (double delta = 1.0; delta <= 10.0; delta += 0.5) {
    const auto b = stepsize_bounds(delta, 0.5, summary(1.0, 1.0));
    CHECK(b.mu_w_max <= prev_w);
    prev_w = b.mu_w_max;
  }
  double prev_y = 1e300;
  for (double s = 0.5; s <= 5.0; s += 0.25) {
    const auto b = stepsize_bounds(2.0, 0.5, summary(s, 1.0));
    CHECK(b.mu_y_max < prev_y);
    prev_y = b.mu_y_max;
  }
}

TEST_CASE("rate_gamma reference example") {
  const auto c = rate_gamma({0.1, 0.1}, 1.0, 1.0, summary(1.0, 1.0, 0.9), summary(1.0, 1.0, 0.9));
  // Independent evaluation of the three formulas.
  const double g1 = (1 - 0.1 * 1 * (1 - 0.1 * 1)) / (1 - 0.1 * 0.1 * 1);
  CHECK(c.gamma1 == doctest::Approx(g1).epsilon(1e-15));
  CHECK(c.gamma1 == doctest::Approx(0.91 / 0.99).epsilon(1e-14));
  CHECK(c.gamma2 == doctest::Approx(0.99).epsilon(1e-15));
  CHECK(c.gamma3 == doctest::Approx(0.81).epsilon(1e-15));
  CHECK(c.gamma == doctest::Approx(0.99).epsilon(1e-15));
  CHECK(c.certified);
  CHECK(c.violations.empty());
}

TEST_CASE("rate_gamma degenerate and violating inputs") {
  const auto zero = rate_gamma({0.0, 0.0}, 1.0, 1.0, summary(1.0, 1.0), summary(1.0, 1.0, 0.5));
  CHECK(zero.gamma1 == 1.0);
  CHECK(zero.gamma2 == 1.0);
  CHECK_FALSE(zero.certified);

  const auto rank_def = rate_gamma({0.1, 0.1}, 1.0, 1.0, summary(1.0, 0.0, 1.0, false), summary(1.0, 1.0, 0.5));
  CHECK_FALSE(rank_def.full_row_rank_Cd);
  CHECK_FALSE(rank_def.certified);

  const auto big_w = rate_gamma({1.0, 0.1}, 1.0, 1.0, summary(1.0, 1.0), summary(1.0, 1.0, 0.5));
  CHECK_FALSE(big_w.certified);
  bool named = false;
  for (const auto& v : big_w.violations) named = named || v.find("mu_w <= 1/(2 delta)") != std::string::npos;
  CHECK(named);

  // mu_y exactly at the strict bound is rejected.
  const auto at_bound = rate_gamma({0.1, 0.5}, 1.0, 1.0, summary(1.0, 1.0), summary(1.0, 1.0, 0.5));
  CHECK_FALSE(at_bound.certified);
  const auto inside = rate_gamma({0.1, 0.5 - 1e-9}, 1.0, 1.0, summary(1.0, 1.0), summary(1.0, 1.0, 0.5));
  CHECK(inside.certified);
}

TEST_CASE("certify uses independent spectral quantities") {
  std::mt19937_64 rng(2);
  const auto p = testutil::random_sharing(rng, 4, 3, 2, NonSmoothTerm::l1(1.0));
  const auto topo = build_topology(4, TopologyKind::undirected_random, 0.5, 2);
  const auto a = metropolis_weights(topo);
  const auto st = default_steps(p);
  const auto c = certify(p, a, st);
  Eigen::JacobiSVD<Mat> svd(p.coupling.block_diagonal());
  CHECK(c.sigma_max_Cd == doctest::Approx(svd.singularValues()(0)).epsilon(1e-12));
  CHECK(c.lambda_min_gram_Cd ==
        doctest::Approx(svd.singularValues().tail(1)(0) * svd.singularValues().tail(1)(0)).epsilon(1e-10));
  CHECK(c.steps.mu_w == doctest::Approx(0.9 / (2 * p.delta)));
  CHECK(c.certified);
}

TEST_CASE("initial error constant matches a direct evaluation") {
  std::mt19937_64 rng(3);
  const Mat cd = testutil::random_mat(rng, 4, 6);
  const Vec w = testutil::random_vec(rng, 6), y = testutil::random_vec(rng, 4), x = testutil::random_vec(rng, 4);
  const StepSizes st{0.2, 0.05};
  const double smax = Eigen::JacobiSVD<Mat>(cd).singularValues()(0);
  const double mm = 0.01;
  const Mat pw = Mat::Identity(6, 6) - mm * cd.transpose() * cd;
  const Mat py = Mat::Identity(4, 4) - mm * cd * cd.transpose();
  const double num = w.dot(pw * w) + 4.0 * y.dot(py * y) + 4.0 * x.squaredNorm();
  CHECK(initial_error_constant(cd, st, smax, w, y, x) == doctest::Approx(num / (1 - mm * smax * smax)).epsilon(1e-13));
}

TEST_CASE("optimality residuals") {
  std::mt19937_64 rng(4);
  const auto p = testutil::random_sharing(rng, 5, 3, 2, NonSmoothTerm::l1(0.5));
  const auto gt = solve_centralized(p);
  const auto topo = build_topology(5, TopologyKind::undirected_random, 0.4, 4);
  const auto ops = network_operators(p, metropolis_weights(topo));
  const auto st = default_steps(p);
  const auto fp = network_fixed_point(p, gt, ops, st.mu_y);
  const auto r = optimality_residuals(p, fp.w, fp.y, fp.x, ops.d, st.mu_y);
  CHECK(r.r_primal <= 1e-8);
  CHECK(r.r_nullD <= 1e-8);
  CHECK(r.r_prox <= 1e-8);
  CHECK(r.r_pair.max() <= 1e-8);

  const auto rr = optimality_residuals(p, testutil::random_vec(rng, 15), testutil::random_vec(rng, 10),
                                       testutil::random_vec(rng, 10), ops.d, st.mu_y);
  CHECK(rr.max() > 1e-8);
  CHECK(rr.r_primal >= 0.0);
}

TEST_CASE("pair residual with a linear-solve dual") {
  std::mt19937_64 rng(5);
  // Square invertible C = [C_1 C_2] so -C^T y = grad J(w) has an exact solution.
  std::vector<LocalCost> costs = {LocalCost(testutil::random_spd(rng, 2, 1, 2), testutil::random_vec(rng, 2)),
                                  LocalCost(testutil::random_spd(rng, 2, 1, 2), testutil::random_vec(rng, 2))};
  const SharingProblem p(costs, CouplingMatrices({testutil::random_mat(rng, 4, 2), testutil::random_mat(rng, 4, 2)}),
                         NonSmoothTerm::zero());
  const auto gt = solve_centralized(p);
  const Vec y = p.coupling.stacked().transpose().fullPivLu().solve(-p.stacked_gradient(gt.w_star));
  CHECK(pair_residuals(p, gt.w_star, y).max() <= 1e-10);
}
