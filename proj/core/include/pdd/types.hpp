#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pdd {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Primal and dual step sizes of the primal-dual recursion.
struct StepSizes {
  double mu_w = 0.0;
  double mu_y = 0.0;

  /// a_m = mu_w / mu_y, the weight that balances primal and dual energies.
  double ratio() const { return mu_w / mu_y; }
};

/// Raised when an iterate stops being finite.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(std::size_t agent, std::size_t iteration)
      : std::runtime_error("non-finite iterate at agent " + std::to_string(agent) +
                           ", iteration " + std::to_string(iteration)),
        agent_(agent),
        iteration_(iteration) {}

  std::size_t agent() const { return agent_; }
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t agent_;
  std::size_t iteration_;
};

}  // namespace pdd
