#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pdd/types.hpp"

namespace pdd {

/// J(w) = 1/2 w^T H w - b^T w + c. A ridge rho adds rho * I to H.
class LocalCost {
 public:
  LocalCost(Mat hessian, Vec linear, double offset = 0.0, double ridge = 0.0);

  std::size_t dim() const { return static_cast<std::size_t>(b_.size()); }
  const Mat& hessian() const { return h_; }
  const Vec& linear() const { return b_; }
  double offset() const { return c_; }

  double value(const Vec& w) const;
  Vec gradient(const Vec& w) const;

  double lambda_max() const { return lmax_; }
  double lambda_min() const { return lmin_; }

 private:
  Mat h_;
  Vec b_;
  double c_;
  double lmax_ = 0.0;
  double lmin_ = 0.0;
};

/// grad J_k(w) = H_k w - b_k; throws std::invalid_argument on size mismatch.
Vec grad_local(const LocalCost& cost, const Vec& w);

enum class NonSmoothKind { zero, l1, indicator_zero };

/// The shared term g. For l1, g(u) = lambda * ||u||_1.
struct NonSmoothTerm {
  NonSmoothKind kind = NonSmoothKind::zero;
  double lambda = 0.0;

  static NonSmoothTerm zero() { return {}; }
  static NonSmoothTerm l1(double lambda);
  static NonSmoothTerm indicator_zero() { return {NonSmoothKind::indicator_zero, 0.0}; }

  /// g(u); +infinity outside the domain of an indicator.
  double value(const Vec& u) const;
  /// g*(v); +infinity outside its domain.
  double conjugate_value(const Vec& v) const;
};

std::string to_string(NonSmoothKind kind);
NonSmoothKind parse_nonsmooth_kind(const std::string& name);

/// prox_{mu g}(v) = argmin_u g(u) + ||v - u||^2 / (2 mu).
Vec prox_g(const NonSmoothTerm& g, double mu, const Vec& v);

/// prox_{mu g*}(v), evaluated through the Moreau decomposition
/// v - mu * prox_{g/mu}(v / mu). For l1 this is clamping to [-lambda, lambda].
Vec prox_conjugate(const NonSmoothTerm& g, double mu, const Vec& v);

/// Per-agent coupling blocks C_k (M x Q_k) and their stacked forms.
class CouplingMatrices {
 public:
  explicit CouplingMatrices(std::vector<Mat> blocks);

  std::size_t agents() const { return blocks_.size(); }
  std::size_t rows() const { return m_; }
  std::size_t total_cols() const { return q_; }
  const Mat& block(std::size_t k) const { return blocks_[k]; }
  const std::vector<Mat>& blocks() const { return blocks_; }
  /// Offset of agent k's block inside the stacked primal vector.
  std::size_t offset(std::size_t k) const { return offsets_[k]; }

  /// C = [C_1 ... C_N], M x Q.
  Mat stacked() const;
  /// C_d = blkdiag{C_k}, MN x Q.
  Mat block_diagonal() const;
  /// C W = sum_k C_k w_k.
  Vec apply(const Vec& w_stacked) const;

 private:
  std::vector<Mat> blocks_;
  std::vector<std::size_t> offsets_;
  std::size_t m_ = 0;
  std::size_t q_ = 0;
};

/// min_W sum_k J_k(w_k) + g(sum_k C_k w_k).
struct SharingProblem {
  std::vector<LocalCost> costs;
  CouplingMatrices coupling;
  NonSmoothTerm gterm;
  /// Smoothness and strong convexity of the stacked cost (max / min Hessian eigenvalue).
  double delta = 0.0;
  double nu = 0.0;

  SharingProblem(std::vector<LocalCost> costs, CouplingMatrices coupling, NonSmoothTerm gterm);

  std::size_t agents() const { return costs.size(); }
  std::size_t dual_dim() const { return coupling.rows(); }
  std::size_t primal_dim() const { return coupling.total_cols(); }
  std::size_t offset(std::size_t k) const { return coupling.offset(k); }
  std::size_t block_dim(std::size_t k) const { return costs[k].dim(); }

  Vec stacked_gradient(const Vec& w) const;
  double smooth_value(const Vec& w) const;
  double objective(const Vec& w) const;
};

struct GroundTruth {
  Vec w_star;
  Vec y_star;
  double primal_value = 0.0;
  std::size_t iterations = 0;
  /// max of the two centralized optimality residuals at the returned pair.
  double residual = 0.0;
};

/// Stationarity ||C^T y + grad J(W)|| and inclusion C W in dg*(y), the latter
/// measured as ||y - prox_{g*}(y + C W)||.
struct PairResiduals {
  double stationarity = 0.0;
  double inclusion = 0.0;
  double max() const { return stationarity > inclusion ? stationarity : inclusion; }
};
PairResiduals pair_residuals(const SharingProblem& problem, const Vec& w, const Vec& y);

class CentralizedSolveError : public std::runtime_error {
 public:
  CentralizedSolveError(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

inline constexpr double kCentralizedTolerance = 1e-10;
inline constexpr std::size_t kCentralizedMaxIterations = 1'000'000;

/// Centralized reference solution. Runs accelerated forward-backward
/// iterations on the dual min_y sum_k J_k*(-C_k^T y) + g*(y), recovers
/// W(y) = H^{-1}(b - C^T y) and polishes the active set. Requires nu > 0.
GroundTruth solve_centralized(const SharingProblem& problem, double tol = kCentralizedTolerance,
                              std::size_t max_iter = kCentralizedMaxIterations);

/// How the compressed-sensing data maps onto the sharing form.
///  - private_blocks: agent k owns w_k, C_k is a random M x p matrix and
///    g = lambda ||sum_k C_k w_k||_1.
///  - consensus_mean: C_k = I / N so g acts on the network average.
enum class InstanceFamily { private_blocks, consensus_mean };

std::string to_string(InstanceFamily family);
InstanceFamily parse_instance_family(const std::string& name);

inline constexpr double kDefaultRidge = 1e-3;
inline constexpr double kDefaultNoiseStd = 1e-2;

struct CsOptions {
  InstanceFamily family = InstanceFamily::consensus_mean;
  std::size_t n_agents = 20;
  std::size_t p = 10;
  std::size_t m_k = 30;
  /// 0 selects ceil(p / 10).
  std::size_t sparsity = 0;
  double noise_std = kDefaultNoiseStd;
  double lambda = 1.0;
  /// Applied only when m_k < p.
  double ridge = kDefaultRidge;
  /// Rows M of each C_k for private_blocks; 0 selects max(1, p / 2).
  std::size_t coupling_dim = 0;
  NonSmoothKind gterm = NonSmoothKind::l1;
  std::uint64_t seed = 1;
};

struct CsInstance {
  CsOptions options;
  SharingProblem problem;
  GroundTruth truth;
  /// Stacked true signal (one copy per agent for consensus_mean).
  Vec signal;
  std::vector<Mat> sensing;
  std::vector<Vec> measurements;
  double ridge_applied = 0.0;
};

/// y_k = M_k x_k + e_k with J_k(w) = 1/2 ||y_k - M_k w||^2 (+ ridge).
/// Bit-identical for a fixed seed on a given build.
CsInstance make_cs_instance(const CsOptions& options);

/// Writes H_k, b_k, C_k, M_k, y_k as CSV files plus manifest.txt.
void write_instance(const CsInstance& instance, const std::filesystem::path& dir);
CsInstance read_instance(const std::filesystem::path& dir);

void write_matrix_csv(const Mat& m, const std::filesystem::path& path);
Mat read_matrix_csv(const std::filesystem::path& path);

}  // namespace pdd
