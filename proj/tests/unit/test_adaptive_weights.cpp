#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "pdd/adaptive_weights.hpp"
#include "pdd/solver.hpp"

using namespace pdd;

namespace {

// Node 0 hears from 1 and 2 (plus itself); the ring closes the graph.
DirectedTopology hub() { return DirectedTopology(3, {{1, 0}, {2, 0}, {0, 1}, {1, 2}}); }

}  // namespace

TEST_CASE("filter arithmetic") {
  const auto t = hub();
  AdaptiveWeightState one(t, 1.0);
  const Vec w = (Vec(2) << 1.0, 2.0).finished();
  one.update_filter(0, w);
  for (auto l : one.neighbors(0)) CHECK(one.chi_sq(l, 0) == 5.0);
  CHECK(one.chi_sq(0, 1) == 0.0);

  AdaptiveWeightState frozen(t, 0.0);
  frozen.set_chi_sq(1, 0, 0.7);
  frozen.update_filter(0, w);
  CHECK(frozen.chi_sq(1, 0) == 0.7);

  AdaptiveWeightState half(t, 0.5);
  const Vec two = Vec::Constant(1, 2.0);  // ||w||^2 = 4
  half.set_chi_sq(2, 0, 2.0);
  half.update_filter(0, two);
  CHECK(half.chi_sq(2, 0) == 3.0);
  CHECK_THROWS_AS(AdaptiveWeightState(t, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(half.set_chi_sq(2, 1, 1.0), std::invalid_argument);
}

TEST_CASE("softmax weights") {
  const auto t = hub();
  AdaptiveWeightState s(t, 0.5);
  for (auto l : s.neighbors(0)) s.set_chi_sq(l, 0, 0.4);
  auto a = compute_weights(s, t);
  for (std::size_t l = 0; l < 3; ++l) CHECK(a(l, 0) == doctest::Approx(1.0 / 3).epsilon(1e-15));

  s.set_chi_sq(0, 0, 1e6);
  s.set_chi_sq(1, 0, 1.0);
  s.set_chi_sq(2, 0, 1.0);
  a = compute_weights(s, t);
  // exp(1e-6) / (exp(1e-6) + 2e) and e / (exp(1e-6) + 2e), evaluated directly.
  const double denom = std::exp(1e-6) + 2.0 * std::exp(1.0);
  CHECK(a(0, 0) == doctest::Approx(std::exp(1e-6) / denom).epsilon(1e-14));
  CHECK(a(1, 0) == doctest::Approx(std::exp(1.0) / denom).epsilon(1e-14));
  CHECK(a(0, 0) < a(1, 0));
}

TEST_CASE("softmax output is a valid combination matrix on random fields") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto t = build_topology(10, TopologyKind::random_digraph, 0.3, seed);
    AdaptiveWeightState s(t, 0.3);
    for (std::size_t k = 0; k < 10; ++k)
      for (auto l : s.neighbors(k)) s.set_chi_sq(l, k, std::pow(10.0, u(rng) - 2.0));
    const auto a = compute_weights(s, t);
    const Mat& w = a.weights();
    CHECK((w.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
    for (std::size_t k = 0; k < 10; ++k)
      for (auto l : s.neighbors(k)) CHECK(a(l, k) > 0.0);
  }
}

TEST_CASE("softmax shift invariance and clamping") {
  const auto t = hub();
  AdaptiveWeightState s(t, 0.5), shifted(t, 0.5);
  const double inv[3] = {0.5, 2.0, 7.0};
  for (std::size_t l = 0; l < 3; ++l) {
    s.set_chi_sq(l, 0, 1.0 / inv[l]);
    shifted.set_chi_sq(l, 0, 1.0 / (inv[l] + 3.0));
  }
  const auto a = compute_weights(s, t), b = compute_weights(shifted, t);
  for (std::size_t l = 0; l < 3; ++l) CHECK(a(l, 0) == doctest::Approx(b(l, 0)).epsilon(1e-13));

  AdaptiveWeightState zeros(t, 0.5);  // chi^2 = 0 everywhere: clamped, uniform
  const auto z = compute_weights(zeros, t);
  CHECK(z(1, 0) == doctest::Approx(1.0 / 3));
  zeros.set_chi_sq(1, 0, 1e-12);  // below the floor, same as zero
  CHECK(compute_weights(zeros, t)(1, 0) == doctest::Approx(1.0 / 3));
}

TEST_CASE("prior initialisation reproduces the static weights") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto t = build_topology(8, TopologyKind::random_digraph, 0.3, seed);
    const auto prior = metropolis_weights(t.undirected_closure());
    const auto closure = t.undirected_closure();
    AdaptiveWeightState s(closure, 0.0, &prior);
    const auto a = compute_weights(s, closure);
    CHECK((a.weights() - prior.weights()).lpNorm<Eigen::Infinity>() <= 1e-13);
  }
}

TEST_CASE("theorem-scaled statistic") {
  const auto t = hub();
  SpectralSummary cd;
  cd.sigma_max = 1.0;
  cd.lambda_min_gram = 1.0;
  cd.rank = cd.rows = 1;
  SpectralSummary am;
  am.sigma_min_nonzero = 0.9;
  const auto cert = rate_gamma({0.1, 0.1}, 1.0, 1.0, cd, am);

  AdaptiveWeightState s(t, 0.25);
  for (std::size_t k = 0; k < 3; ++k)
    for (auto l : s.neighbors(k)) s.set_chi_sq(l, k, 2.0);
  CHECK_THROWS_WITH_AS(s.update_chi_theorem_scaled(cert, std::nullopt),
                       "oracle-dependent weight rule requires GroundTruth", std::invalid_argument);

  std::vector<InitialErrorTerms> zero(3);
  auto decayed = s;
  decayed.update_chi_theorem_scaled(cert, zero);
  CHECK(decayed.chi_sq(1, 0) == doctest::Approx(1.5));

  AdaptiveWeightState frozen = s;
  AdaptiveWeightState f0(t, 0.0);
  f0.set_chi_sq(1, 0, 2.0);
  f0.update_chi_theorem_scaled(cert, std::vector<InitialErrorTerms>(3, {1.0, 1.0, 1.0}));
  CHECK(f0.chi_sq(1, 0) == 2.0);

  std::vector<InitialErrorTerms> unit(3, {1.0, 1.0, 1.0});
  s.update_chi_theorem_scaled(cert, unit);
  // 0.75 * 2 + 0.25 * max(0.91/0.99, 0.99, 0.81) * (1 + 1 + 1) / 0.99
  const double expect = 0.75 * 2.0 + 0.25 * 0.99 * 3.0 / 0.99;
  CHECK(s.chi_sq(2, 0) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("weight history csv") {
  const auto t = build_topology(3, TopologyKind::ring_digraph);
  const auto a = metropolis_weights(t);
  std::ostringstream os;
  write_weight_history_csv(os, {{0, a.weights()}, {1, a.weights()}}, t);
  const auto text = os.str();
  CHECK(text.rfind("iter,receiver,sender,weight\n", 0) == 0);
  CHECK(text.find("0,2,1,0.5\n") != std::string::npos);
  std::size_t lines = 0;
  for (char c : text) lines += c == '\n' ? 1 : 0;
  CHECK(lines == 1 + 2 * 6);
}

TEST_CASE("adaptive runs keep valid weights and zeta = 0 matches the static run") {
  std::mt19937_64 rng(5);
  const auto topo = build_topology(6, TopologyKind::undirected_random, 0.4, 5);
  const auto a = metropolis_weights(topo);
  const auto p = testutil::random_sharing(rng, 6, 3, 2, NonSmoothTerm::l1(0.5));
  const auto gt = solve_centralized(p);
  RunOptions opt;
  opt.max_iter = 150;
  opt.policy = WeightsPolicy::static_weights;
  const auto st = run(p, topo, a, &gt, opt);
  opt.policy = WeightsPolicy::adaptive;
  opt.zeta = 0.0;
  for (auto engine : {Engine::per_agent, Engine::tracking}) {
    opt.engine = engine;
    const auto ad = run(p, topo, a, &gt, opt);
    CHECK((ad.w - st.w).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
  opt.zeta = 0.2;
  opt.record_weights = true;
  opt.engine = Engine::per_agent;
  const auto ad = run(p, topo, a, &gt, opt);
  CHECK(ad.weight_history.size() == 150);
  opt.statistic = WeightStatistic::theorem_scaled;
  CHECK(run(p, topo, a, &gt, opt).trace.size() == 150);
  CHECK_THROWS_WITH(run(p, topo, a, nullptr, opt), "oracle-dependent weight rule requires GroundTruth");
}
