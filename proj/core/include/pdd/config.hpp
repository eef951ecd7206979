#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdd/baselines.hpp"
#include "pdd/problem.hpp"
#include "pdd/solver.hpp"
#include "pdd/topology.hpp"

namespace pdd {

/// Invalid or unknown configuration entry. key() is "section.name".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error("config key '" + key + "': " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

enum class Method { pdd, pdd_tracking, pdd_network, extra, diging };
std::string to_string(Method m);
Method parse_method(const std::string& name);

/// Which combination matrix the experiment uses.
///  - auto:   Metropolis on the topology as drawn (row weights on a digraph)
///  - doubly: Metropolis on the undirected closure, symmetric doubly stochastic
///  - row:    1/|N_k| weights on the topology as drawn
enum class WeightRegime { automatic, doubly, row };
std::string to_string(WeightRegime r);
WeightRegime parse_weight_regime(const std::string& name);

struct ExperimentConfig {
  std::uint64_t seed = 7;

  struct Topology {
    std::size_t n = 20;
    TopologyKind kind = TopologyKind::random_digraph;
    double density = kDefaultEdgeDensity;
    WeightRegime regime = WeightRegime::automatic;
    /// Edge-list file; overrides kind/density when set.
    std::string edge_list;
  } topology;

  struct Instance {
    InstanceFamily family = InstanceFamily::consensus_mean;
    std::size_t p = 10;
    std::size_t m_k = 30;
    std::size_t sparsity = 0;
    double noise_std = kDefaultNoiseStd;
    double lambda = 1.0;
    double ridge = kDefaultRidge;
    std::size_t coupling_dim = 0;
    NonSmoothKind gterm = NonSmoothKind::l1;
    /// Instance directory to load instead of generating.
    std::string dir;
  } instance;

  struct Solver {
    Method method = Method::pdd;
    std::vector<Method> compare = {Method::pdd, Method::extra};
    WeightsPolicy weights = WeightsPolicy::adaptive;
    WeightStatistic statistic = WeightStatistic::filter;
    std::optional<double> mu_w;  // unset = auto
    std::optional<double> mu_y;
    std::optional<double> alpha;  // baselines; unset = tuned
    double zeta = kDefaultZeta;
    std::size_t max_iter = kDefaultMaxIter;
    double tol = 0.0;
    double compare_tol = 1e-6;
    std::size_t compare_max_iter = 20000;
    Schedule schedule = Schedule::sequential;
  } solver;

  struct Output {
    std::string trace = "trace.csv";
    std::string summary = "summary.json";
    std::string comparison = "comparison.csv";
    std::string weights;  // empty = not written
    std::string instance_dir;  // empty = not written
    std::string format = "csv";
  } output;
};

/// Parses the INI-style text. Unknown sections or keys and malformed values
/// raise ConfigError naming the key.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical key = value text for `config`, one section per block.
std::string to_text(const ExperimentConfig& config);

/// Annotated default configuration.
std::string default_config_text();

/// FNV-1a 64 of the canonical text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace pdd
