#pragma once

#include <random>

#include "pdd/problem.hpp"
#include "pdd/topology.hpp"

namespace testutil {

inline pdd::Vec random_vec(std::mt19937_64& rng, pdd::Index n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  pdd::Vec v(n);
  for (pdd::Index i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

inline pdd::Mat random_mat(std::mt19937_64& rng, pdd::Index r, pdd::Index c, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  pdd::Mat m(r, c);
  for (pdd::Index i = 0; i < r; ++i)
    for (pdd::Index j = 0; j < c; ++j) m(i, j) = d(rng);
  return m;
}

/// SPD matrix with eigenvalues in [lo, hi].
inline pdd::Mat random_spd(std::mt19937_64& rng, pdd::Index n, double lo, double hi) {
  Eigen::HouseholderQR<pdd::Mat> qr(random_mat(rng, n, n));
  const pdd::Mat q = qr.householderQ();
  std::uniform_real_distribution<double> u(lo, hi);
  pdd::Vec ev(n);
  for (pdd::Index i = 0; i < n; ++i) ev(i) = u(rng);
  ev(0) = lo;
  if (n > 1) ev(n - 1) = hi;
  pdd::Mat h = q * ev.asDiagonal() * q.transpose();
  return 0.5 * (h + h.transpose());
}

/// Random quadratic sharing problem with N agents, block size q and coupling rows m.
inline pdd::SharingProblem random_sharing(std::mt19937_64& rng, std::size_t n, pdd::Index q,
                                          pdd::Index m, pdd::NonSmoothTerm g, double lo = 0.5,
                                          double hi = 2.0) {
  std::vector<pdd::LocalCost> costs;
  std::vector<pdd::Mat> blocks;
  for (std::size_t k = 0; k < n; ++k) {
    costs.emplace_back(random_spd(rng, q, lo, hi), random_vec(rng, q));
    blocks.push_back(random_mat(rng, m, q, 1.0 / std::sqrt(static_cast<double>(q))));
  }
  return pdd::SharingProblem(std::move(costs), pdd::CouplingMatrices(std::move(blocks)), g);
}

}  // namespace testutil
