#include "pdd/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace pdd {

namespace {

std::vector<Edge> normalized_edges(std::size_t n, std::vector<Edge> edges) {
  for (std::size_t k = 0; k < n; ++k) edges.emplace_back(k, k);
  for (const auto& [l, k] : edges) {
    if (l >= n || k >= n) {
      throw std::invalid_argument("edge (" + std::to_string(l) + ", " + std::to_string(k) +
                                  ") out of range for " + std::to_string(n) + " agents");
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

bool reaches_all(std::size_t n, const std::vector<std::vector<std::size_t>>& adj) {
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const auto u = stack.back();
    stack.pop_back();
    for (auto v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == n;
}

}  // namespace

bool strongly_connected(std::size_t n, const std::vector<Edge>& edges) {
  if (n == 0) return false;
  std::vector<std::vector<std::size_t>> fwd(n), rev(n);
  for (const auto& [l, k] : edges) {
    fwd[l].push_back(k);
    rev[k].push_back(l);
  }
  return reaches_all(n, fwd) && reaches_all(n, rev);
}

DirectedTopology::DirectedTopology(std::size_t n_agents, std::vector<Edge> edges)
    : n_(n_agents) {
  if (n_ == 0) throw std::invalid_argument("topology needs at least one agent");
  edges_ = normalized_edges(n_, std::move(edges));
  if (!strongly_connected(n_, edges_)) {
    throw std::invalid_argument("topology is not strongly connected");
  }
  in_.assign(n_, {});
  adjacency_.assign(n_, std::vector<char>(n_, 0));
  for (const auto& [l, k] : edges_) {
    in_[k].push_back(l);
    adjacency_[l][k] = 1;
  }
  for (auto& nk : in_) std::sort(nk.begin(), nk.end());
}

bool DirectedTopology::has_edge(std::size_t sender, std::size_t receiver) const {
  return sender < n_ && receiver < n_ && adjacency_[sender][receiver] != 0;
}

bool DirectedTopology::is_symmetric() const {
  return std::all_of(edges_.begin(), edges_.end(),
                     [this](const Edge& e) { return has_edge(e.second, e.first); });
}

DirectedTopology DirectedTopology::undirected_closure() const {
  std::vector<Edge> both = edges_;
  for (const auto& [l, k] : edges_) both.emplace_back(k, l);
  return DirectedTopology(n_, std::move(both));
}

DirectedTopology build_topology(std::size_t n, TopologyKind kind, double edge_density,
                                std::uint64_t seed, int max_retries) {
  if (n == 0) throw std::invalid_argument("build_topology: n must be >= 1");
  if (kind == TopologyKind::ring_digraph) {
    std::vector<Edge> edges;
    if (n > 1) {
      for (std::size_t k = 0; k < n; ++k) edges.emplace_back(k, (k + 1) % n);
    }
    return DirectedTopology(n, std::move(edges));
  }
  if (!(edge_density > 0.0 && edge_density <= 1.0)) {
    throw std::invalid_argument("build_topology: edge density must lie in (0, 1]");
  }
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(edge_density);
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    std::vector<Edge> edges;
    for (std::size_t l = 0; l < n; ++l) {
      const std::size_t first = kind == TopologyKind::undirected_random ? l + 1 : 0;
      for (std::size_t k = first; k < n; ++k) {
        if (k == l) continue;
        if (coin(rng)) {
          edges.emplace_back(l, k);
          if (kind == TopologyKind::undirected_random) edges.emplace_back(k, l);
        }
      }
    }
    auto full = normalized_edges(n, edges);
    if (strongly_connected(n, full)) return DirectedTopology(n, std::move(full));
  }
  throw std::runtime_error("build_topology: no strongly connected draw after " +
                           std::to_string(max_retries) + " attempts");
}

TopologyKind parse_topology_kind(std::string_view name) {
  if (name == "ring-digraph") return TopologyKind::ring_digraph;
  if (name == "random-digraph") return TopologyKind::random_digraph;
  if (name == "undirected-random") return TopologyKind::undirected_random;
  throw std::invalid_argument("unknown topology kind '" + std::string(name) + "'");
}

std::string to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::ring_digraph: return "ring-digraph";
    case TopologyKind::random_digraph: return "random-digraph";
    case TopologyKind::undirected_random: return "undirected-random";
  }
  return "unknown";
}

std::string to_edge_list(const DirectedTopology& topo) {
  std::ostringstream os;
  os << "# agents " << topo.size() << "\n";
  for (const auto& [l, k] : topo.edges()) os << (l + 1) << ' ' << (k + 1) << '\n';
  return os.str();
}

DirectedTopology parse_edge_list(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<Edge> edges;
  std::size_t n = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long long l = 0, k = 0;
    if (!(ls >> l)) continue;
    std::string rest;
    if (!(ls >> k) || (ls >> rest) || l < 1 || k < 1) {
      throw std::invalid_argument("edge list line " + std::to_string(line_no) +
                                  ": expected two positive indices");
    }
    edges.emplace_back(static_cast<std::size_t>(l - 1), static_cast<std::size_t>(k - 1));
    n = std::max({n, static_cast<std::size_t>(l), static_cast<std::size_t>(k)});
  }
  if (n == 0) throw std::invalid_argument("edge list contains no edges");
  return DirectedTopology(n, std::move(edges));
}

void write_edge_list(const DirectedTopology& topo, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << to_edge_list(topo);
}

DirectedTopology read_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_edge_list(ss.str());
}

std::string to_string(Stochasticity s) {
  switch (s) {
    case Stochasticity::row: return "row";
    case Stochasticity::column: return "column";
    case Stochasticity::doubly: return "doubly";
  }
  return "unknown";
}

CombinationMatrix::CombinationMatrix(Mat weights, Stochasticity stochasticity,
                                     const DirectedTopology& topo)
    : a_(std::move(weights)), kind_(stochasticity) {
  const auto n = static_cast<Index>(topo.size());
  if (a_.rows() != n || a_.cols() != n) {
    throw std::invalid_argument("combination matrix dimension does not match topology");
  }
  for (Index l = 0; l < n; ++l) {
    for (Index k = 0; k < n; ++k) {
      const double v = a_(l, k);
      if (!std::isfinite(v) || v < 0.0 || v > 1.0 + kStochasticTolerance) {
        throw std::invalid_argument("combination weight outside [0, 1]");
      }
      if (v != 0.0 && !topo.has_edge(static_cast<std::size_t>(l), static_cast<std::size_t>(k))) {
        throw std::invalid_argument("combination weight on a non-edge (" + std::to_string(l + 1) +
                                    ", " + std::to_string(k + 1) + ")");
      }
    }
  }
  const bool need_receiver = kind_ != Stochasticity::column;
  const bool need_sender = kind_ != Stochasticity::row;
  if (need_receiver && ((a_.colwise().sum().array() - 1.0).abs() > kStochasticTolerance).any()) {
    throw std::invalid_argument("receiver weights do not sum to one");
  }
  if (need_sender && ((a_.rowwise().sum().array() - 1.0).abs() > kStochasticTolerance).any()) {
    throw std::invalid_argument("sender weights do not sum to one");
  }
}

bool CombinationMatrix::is_symmetric(double tol) const {
  return (a_ - a_.transpose()).cwiseAbs().maxCoeff() <= tol;
}

CombinationMatrix metropolis_weights(const DirectedTopology& topo) {
  const auto n = topo.size();
  Mat a = Mat::Zero(static_cast<Index>(n), static_cast<Index>(n));
  if (topo.is_symmetric()) {
    for (std::size_t k = 0; k < n; ++k) {
      double off = 0.0;
      for (auto l : topo.neighbors(k)) {
        if (l == k) continue;
        const double w =
            1.0 / static_cast<double>(std::max(topo.neighbors(k).size(), topo.neighbors(l).size()));
        a(static_cast<Index>(l), static_cast<Index>(k)) = w;
        off += w;
      }
      a(static_cast<Index>(k), static_cast<Index>(k)) = 1.0 - off;
    }
    return CombinationMatrix(std::move(a), Stochasticity::doubly, topo);
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double w = 1.0 / static_cast<double>(topo.neighbors(k).size());
    for (auto l : topo.neighbors(k)) a(static_cast<Index>(l), static_cast<Index>(k)) = w;
  }
  return CombinationMatrix(std::move(a), Stochasticity::row, topo);
}

Mat consensus_deficiency(const CombinationMatrix& a) {
  const auto n = static_cast<Index>(a.size());
  return Mat::Identity(n, n) - a.mixing();
}

SpectralSummary spectral_summary(const Mat& m) {
  if (m.size() == 0) throw std::invalid_argument("spectral_summary: empty matrix");
  Eigen::JacobiSVD<Mat> svd(m);
  const Vec& s = svd.singularValues();
  SpectralSummary out;
  out.rows = static_cast<std::size_t>(m.rows());
  out.cols = static_cast<std::size_t>(m.cols());
  out.sigma_max = s(0);
  if (!(out.sigma_max > 0.0)) throw std::domain_error("no non-zero singular value");
  const double cut = kSingularZeroThreshold * out.sigma_max;
  out.sigma_min_nonzero = out.sigma_max;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > cut) {
      out.sigma_min_nonzero = s(i);
      ++out.rank;
    }
  }
  // The Gram matrix M M^T has rows(M) eigenvalues; only min(rows, cols) can be non-zero.
  if (m.rows() <= m.cols()) {
    const double smin = s(s.size() - 1);
    out.lambda_min_gram = smin > cut ? smin * smin : 0.0;
  }
  return out;
}

}  // namespace pdd
