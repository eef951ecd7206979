#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pdd/types.hpp"

namespace pdd {

/// Directed edge (sender, receiver), 0-indexed.
using Edge = std::pair<std::size_t, std::size_t>;

enum class TopologyKind { ring_digraph, random_digraph, undirected_random };

/// Communication graph. Every node carries a self-loop and the graph is
/// strongly connected; both are enforced by the constructor.
class DirectedTopology {
 public:
  DirectedTopology(std::size_t n_agents, std::vector<Edge> edges);

  std::size_t size() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }

  /// In-neighborhood N_k = { l : (l, k) is an edge }, sorted, contains k.
  const std::vector<std::size_t>& neighbors(std::size_t k) const { return in_[k]; }

  bool has_edge(std::size_t sender, std::size_t receiver) const;

  /// True when every edge (l, k) has its reverse (k, l).
  bool is_symmetric() const;

  /// Graph with every edge made bidirectional.
  DirectedTopology undirected_closure() const;

 private:
  std::size_t n_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> in_;
  std::vector<std::vector<char>> adjacency_;
};

bool strongly_connected(std::size_t n, const std::vector<Edge>& edges);

inline constexpr double kDefaultEdgeDensity = 0.3;
inline constexpr int kDefaultTopologyRetries = 100;

/// Deterministic for a fixed seed. Random kinds redraw until strongly
/// connected and throw std::runtime_error after `max_retries` failures.
DirectedTopology build_topology(std::size_t n, TopologyKind kind,
                                double edge_density = kDefaultEdgeDensity,
                                std::uint64_t seed = 0,
                                int max_retries = kDefaultTopologyRetries);

TopologyKind parse_topology_kind(std::string_view name);
std::string to_string(TopologyKind kind);

// Edge-list text format: one "l k" pair per line (sender then receiver),
// 1-indexed, '#' starts a comment. Self-loops are implied.
std::string to_edge_list(const DirectedTopology& topo);
DirectedTopology parse_edge_list(std::string_view text);
void write_edge_list(const DirectedTopology& topo, const std::filesystem::path& path);
DirectedTopology read_edge_list(const std::filesystem::path& path);

/// Which weight sums equal one. Entries are indexed a(l, k): the weight
/// receiver k assigns to sender l.
///  - row:    every receiver's incoming weights sum to one (sum_l a(l,k) = 1),
///            i.e. the mixing operator phi = M z with M = a^T is row-stochastic
///  - column: every sender's outgoing weights sum to one (sum_k a(l,k) = 1)
///  - doubly: both
enum class Stochasticity { row, column, doubly };

std::string to_string(Stochasticity s);

inline constexpr double kStochasticTolerance = 1e-12;

class CombinationMatrix {
 public:
  /// Validates nonnegativity, entries in [0,1], the declared sums and that
  /// the sparsity pattern is contained in the topology.
  CombinationMatrix(Mat weights, Stochasticity stochasticity, const DirectedTopology& topo);

  double operator()(std::size_t sender, std::size_t receiver) const {
    return a_(static_cast<Index>(sender), static_cast<Index>(receiver));
  }
  const Mat& weights() const { return a_; }
  Stochasticity stochasticity() const { return kind_; }
  std::size_t size() const { return static_cast<std::size_t>(a_.rows()); }
  bool is_symmetric(double tol = kStochasticTolerance) const;

  /// Receiver-major operator M = a^T so that phi_k = sum_l a(l,k) z_l is (M z)_k.
  Mat mixing() const { return a_.transpose(); }

 private:
  Mat a_;
  Stochasticity kind_;
};

/// Metropolis rule. Symmetric topologies get the doubly stochastic
/// a(l,k) = 1/max(|N_k|, |N_l|); directed ones get a(l,k) = 1/|N_k|.
CombinationMatrix metropolis_weights(const DirectedTopology& topo);

/// I - M for the mixing operator M; its null space is the consensus line.
Mat consensus_deficiency(const CombinationMatrix& a);

struct SpectralSummary {
  double sigma_max = 0.0;
  double sigma_min_nonzero = 0.0;
  /// Smallest eigenvalue of M M^T (zero when M has more rows than columns).
  double lambda_min_gram = 0.0;
  std::size_t rank = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  bool full_row_rank() const { return rank == rows; }
};

inline constexpr double kSingularZeroThreshold = 1e-10;

/// Singular values below 1e-10 * sigma_max count as zero. Throws
/// std::invalid_argument for empty input and std::domain_error
/// ("no non-zero singular value") for an all-zero matrix.
SpectralSummary spectral_summary(const Mat& m);

}  // namespace pdd
