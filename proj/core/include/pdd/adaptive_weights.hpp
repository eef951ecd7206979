#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "pdd/certificate.hpp"
#include "pdd/topology.hpp"

namespace pdd {

inline constexpr double kDefaultZeta = 0.1;
inline constexpr double kChiSqFloor = 1e-8;
inline constexpr double kInvChiSqCap = 50.0;

/// Per-agent initial error energies feeding the theorem-scaled statistic:
/// ||w~_k(-1)||^2_{I - mu_y mu_w C_k^T C_k}, ||y~_k(-1)||^2_{I - mu_y mu_w C_k C_k^T}
/// and ||x~_k(-1)||^2.
struct InitialErrorTerms {
  double w_weighted = 0.0;
  double y_weighted = 0.0;
  double x_sq = 0.0;
};

/// Filtered per-pair statistics chi^2(l, k), defined for l in N_k.
class AdaptiveWeightState {
 public:
  /// Without `prior` every chi^2 starts at zero. With a prior the statistics
  /// start where the softmax rule reproduces the prior weights exactly.
  AdaptiveWeightState(const DirectedTopology& topo, double zeta,
                      const CombinationMatrix* prior = nullptr);

  double zeta() const { return zeta_; }
  double chi_sq(std::size_t sender, std::size_t receiver) const {
    return chi_sq_(static_cast<Index>(sender), static_cast<Index>(receiver));
  }
  std::size_t size() const { return neighbors_.size(); }
  const std::vector<std::size_t>& neighbors(std::size_t k) const { return neighbors_[k]; }

  /// Overwrites one statistic; throws std::invalid_argument off the neighborhood or for negative values.
  void set_chi_sq(std::size_t sender, std::size_t receiver, double value);

  /// chi^2(l,k) <- (1 - zeta) chi^2(l,k) + zeta ||w_k(i-1)||^2 for every l in N_k.
  void update_filter(std::size_t k, const Vec& w_prev_k);

  /// chi^2(l,k) <- (1 - zeta) chi^2(l,k) + zeta * gamma * E_k / (1 - mu_y mu_w sigma_max^2(C_d))
  /// with gamma = max(gamma1, gamma2, gamma3) and
  /// E_k = w_weighted + a_m y_weighted + a_m x_sq. Needs the oracle terms; throws
  /// std::invalid_argument when they are absent.
  void update_chi_theorem_scaled(const RateCertificate& cert,
                                 const std::optional<std::vector<InitialErrorTerms>>& initial);

 private:
  std::vector<std::vector<std::size_t>> neighbors_;
  Mat chi_sq_;
  double zeta_;
};

/// a(l,k) = exp(chi^{-2}(l,k)) / sum_{j in N_k} exp(chi^{-2}(j,k)), row tagged.
/// chi^2 is floored at 1e-8 and chi^{-2} capped at 50 before exponentiation.
CombinationMatrix compute_weights(const AdaptiveWeightState& state, const DirectedTopology& topo);

struct WeightSnapshot {
  std::size_t iter = 0;
  Mat weights;
};

/// CSV with columns iter,receiver,sender,weight (1-indexed agents), one line per edge.
void write_weight_history_csv(std::ostream& out, const std::vector<WeightSnapshot>& history,
                              const DirectedTopology& topo);

}  // namespace pdd
