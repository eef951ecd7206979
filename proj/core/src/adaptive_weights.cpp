#include "pdd/adaptive_weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace pdd {

namespace {

double clamped_inverse(double chi_sq) {
  return std::min(1.0 / std::max(chi_sq, kChiSqFloor), kInvChiSqCap);
}

}  // namespace

AdaptiveWeightState::AdaptiveWeightState(const DirectedTopology& topo, double zeta,
                                         const CombinationMatrix* prior)
    : zeta_(zeta) {
  if (!(zeta >= 0.0 && zeta <= 1.0)) {
    throw std::invalid_argument("AdaptiveWeightState: zeta must lie in [0, 1]");
  }
  const auto n = topo.size();
  neighbors_.resize(n);
  for (std::size_t k = 0; k < n; ++k) neighbors_[k] = topo.neighbors(k);
  chi_sq_ = Mat::Zero(static_cast<Index>(n), static_cast<Index>(n));
  if (prior == nullptr) return;
  if (prior->size() != n) throw std::invalid_argument("AdaptiveWeightState: prior size mismatch");
  // chi^{-2}(l,k) = log a(l,k) + c_k with c_k chosen so the largest inverse
  // lands just under the cap; the softmax then returns a(., k) unchanged.
  for (std::size_t k = 0; k < n; ++k) {
    double max_log = -std::numeric_limits<double>::infinity();
    for (auto l : neighbors_[k]) {
      const double a = (*prior)(l, k);
      if (!(a > 0.0)) {
        throw std::invalid_argument("AdaptiveWeightState: prior weights must be positive on edges");
      }
      max_log = std::max(max_log, std::log(a));
    }
    const double shift = 0.5 * kInvChiSqCap - max_log;
    for (auto l : neighbors_[k]) {
      const double inv = std::log((*prior)(l, k)) + shift;
      if (!(inv > 0.0) || inv > kInvChiSqCap) {
        throw std::invalid_argument("AdaptiveWeightState: prior weights span too wide a range");
      }
      chi_sq_(static_cast<Index>(l), static_cast<Index>(k)) = 1.0 / inv;
    }
  }
}

void AdaptiveWeightState::set_chi_sq(std::size_t sender, std::size_t receiver, double value) {
  if (receiver >= neighbors_.size() ||
      !std::binary_search(neighbors_[receiver].begin(), neighbors_[receiver].end(), sender)) {
    throw std::invalid_argument("set_chi_sq: sender is not an in-neighbor of receiver");
  }
  if (!(value >= 0.0)) throw std::invalid_argument("set_chi_sq: value must be nonnegative");
  chi_sq_(static_cast<Index>(sender), static_cast<Index>(receiver)) = value;
}

void AdaptiveWeightState::update_filter(std::size_t k, const Vec& w_prev_k) {
  const double s = w_prev_k.squaredNorm();
  for (auto l : neighbors_[k]) {
    double& c = chi_sq_(static_cast<Index>(l), static_cast<Index>(k));
    c = (1.0 - zeta_) * c + zeta_ * s;
  }
}

void AdaptiveWeightState::update_chi_theorem_scaled(
    const RateCertificate& cert, const std::optional<std::vector<InitialErrorTerms>>& initial) {
  if (!initial) {
    throw std::invalid_argument("oracle-dependent weight rule requires GroundTruth");
  }
  if (initial->size() != neighbors_.size()) {
    throw std::invalid_argument("update_chi_theorem_scaled: one entry per agent required");
  }
  const double am = cert.steps.ratio();
  const double denom = cert.energy_floor();
  for (std::size_t k = 0; k < neighbors_.size(); ++k) {
    const auto& e = (*initial)[k];
    const double injected = cert.gamma * (e.w_weighted + am * e.y_weighted + am * e.x_sq) / denom;
    for (auto l : neighbors_[k]) {
      double& c = chi_sq_(static_cast<Index>(l), static_cast<Index>(k));
      c = (1.0 - zeta_) * c + zeta_ * injected;
    }
  }
}

CombinationMatrix compute_weights(const AdaptiveWeightState& state, const DirectedTopology& topo) {
  const auto n = state.size();
  if (topo.size() != n) throw std::invalid_argument("compute_weights: topology size mismatch");
  Mat a = Mat::Zero(static_cast<Index>(n), static_cast<Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const auto& nk = state.neighbors(k);
    double top = -std::numeric_limits<double>::infinity();
    for (auto l : nk) top = std::max(top, clamped_inverse(state.chi_sq(l, k)));
    double total = 0.0;
    for (auto l : nk) {
      // Shifting by the maximum leaves the softmax unchanged and keeps exp() in range.
      const double e = std::exp(clamped_inverse(state.chi_sq(l, k)) - top);
      a(static_cast<Index>(l), static_cast<Index>(k)) = e;
      total += e;
    }
    for (auto l : nk) a(static_cast<Index>(l), static_cast<Index>(k)) /= total;
  }
  return CombinationMatrix(std::move(a), Stochasticity::row, topo);
}

void write_weight_history_csv(std::ostream& out, const std::vector<WeightSnapshot>& history,
                              const DirectedTopology& topo) {
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "iter,receiver,sender,weight\n";
  for (const auto& snap : history) {
    for (std::size_t k = 0; k < topo.size(); ++k) {
      for (auto l : topo.neighbors(k)) {
        out << snap.iter << ',' << k + 1 << ',' << l + 1 << ','
            << snap.weights(static_cast<Index>(l), static_cast<Index>(k)) << '\n';
      }
    }
  }
}

}  // namespace pdd
