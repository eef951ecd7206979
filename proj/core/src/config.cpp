#include "pdd/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace pdd {

std::string to_string(Method m) {
  switch (m) {
    case Method::pdd: return "pdd";
    case Method::pdd_tracking: return "pdd-tracking";
    case Method::pdd_network: return "pdd-network";
    case Method::extra: return "extra";
    case Method::diging: return "diging";
  }
  return "pdd";
}

Method parse_method(const std::string& name) {
  if (name == "pdd") return Method::pdd;
  if (name == "pdd-tracking") return Method::pdd_tracking;
  if (name == "pdd-network") return Method::pdd_network;
  if (name == "extra") return Method::extra;
  if (name == "diging" || name == "diging-atc") return Method::diging;
  throw std::invalid_argument("unknown method '" + name + "'");
}

std::string to_string(WeightRegime r) {
  switch (r) {
    case WeightRegime::automatic: return "auto";
    case WeightRegime::doubly: return "doubly";
    case WeightRegime::row: return "row";
  }
  return "auto";
}

WeightRegime parse_weight_regime(const std::string& name) {
  if (name == "auto") return WeightRegime::automatic;
  if (name == "doubly") return WeightRegime::doubly;
  if (name == "row") return WeightRegime::row;
  throw std::invalid_argument("unknown weight regime '" + name + "'");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto s = trim(v);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(key, "expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(to_u64(key, v));
}

double to_double(const std::string& key, const std::string& v) {
  const auto s = trim(v);
  if (s == "inf") return std::numeric_limits<double>::infinity();
  std::istringstream is(s);
  double out = 0.0;
  is >> out;
  if (!is || !is.eof() || !std::isfinite(out)) {
    throw ConfigError(key, "expected a number, got '" + v + "'");
  }
  return out;
}

std::optional<double> to_step(const std::string& key, const std::string& v) {
  if (trim(v) == "auto") return std::nullopt;
  const double d = to_double(key, v);
  if (!(d > 0.0)) throw ConfigError(key, "must be positive or 'auto'");
  return d;
}

template <class Parse>
auto to_enum(const std::string& key, const std::string& v, Parse parse) {
  try {
    return parse(trim(v));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key, e.what());
  }
}

std::string fmt_double(double v) {
  if (std::isinf(v)) return "inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string fmt_step(const std::optional<double>& v) { return v ? fmt_double(*v) : "auto"; }

std::string join_methods(const std::vector<Method>& ms) {
  std::string out;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (i) out += ", ";
    out += to_string(ms[i]);
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> s = {
      {"experiment",
       {{"seed", [](auto& c, auto& k, auto& v) { c.seed = to_u64(k, v); }}}},
      {"topology",
       {{"n",
         [](auto& c, auto& k, auto& v) {
           c.topology.n = to_size(k, v);
           if (c.topology.n == 0) throw ConfigError(k, "must be at least 1");
         }},
        {"kind", [](auto& c, auto& k, auto& v) { c.topology.kind = to_enum(k, v, parse_topology_kind); }},
        {"density",
         [](auto& c, auto& k, auto& v) {
           c.topology.density = to_double(k, v);
           if (!(c.topology.density > 0.0 && c.topology.density <= 1.0)) {
             throw ConfigError(k, "must lie in (0, 1]");
           }
         }},
        {"regime", [](auto& c, auto& k, auto& v) { c.topology.regime = to_enum(k, v, parse_weight_regime); }},
        {"edge_list", [](auto& c, auto&, auto& v) { c.topology.edge_list = trim(v); }}}},
      {"instance",
       {{"family", [](auto& c, auto& k, auto& v) { c.instance.family = to_enum(k, v, parse_instance_family); }},
        {"p",
         [](auto& c, auto& k, auto& v) {
           c.instance.p = to_size(k, v);
           if (c.instance.p == 0) throw ConfigError(k, "must be at least 1");
         }},
        {"m_k",
         [](auto& c, auto& k, auto& v) {
           c.instance.m_k = to_size(k, v);
           if (c.instance.m_k == 0) throw ConfigError(k, "must be at least 1");
         }},
        {"sparsity", [](auto& c, auto& k, auto& v) { c.instance.sparsity = to_size(k, v); }},
        {"noise_std",
         [](auto& c, auto& k, auto& v) {
           c.instance.noise_std = to_double(k, v);
           if (c.instance.noise_std < 0.0) throw ConfigError(k, "must be nonnegative");
         }},
        {"lambda",
         [](auto& c, auto& k, auto& v) {
           c.instance.lambda = to_double(k, v);
           if (!(c.instance.lambda > 0.0)) throw ConfigError(k, "must be positive");
         }},
        {"ridge",
         [](auto& c, auto& k, auto& v) {
           c.instance.ridge = to_double(k, v);
           if (c.instance.ridge < 0.0) throw ConfigError(k, "must be nonnegative");
         }},
        {"coupling_dim", [](auto& c, auto& k, auto& v) { c.instance.coupling_dim = to_size(k, v); }},
        {"gterm", [](auto& c, auto& k, auto& v) { c.instance.gterm = to_enum(k, v, parse_nonsmooth_kind); }},
        {"dir", [](auto& c, auto&, auto& v) { c.instance.dir = trim(v); }}}},
      {"solver",
       {{"method", [](auto& c, auto& k, auto& v) { c.solver.method = to_enum(k, v, parse_method); }},
        {"compare",
         [](auto& c, auto& k, auto& v) {
           c.solver.compare.clear();
           std::istringstream is(v);
           std::string item;
           while (std::getline(is, item, ',')) {
             if (!trim(item).empty()) c.solver.compare.push_back(to_enum(k, item, parse_method));
           }
           if (c.solver.compare.empty()) throw ConfigError(k, "needs at least one method");
         }},
        {"weights", [](auto& c, auto& k, auto& v) { c.solver.weights = to_enum(k, v, parse_weights_policy); }},
        {"statistic",
         [](auto& c, auto& k, auto& v) { c.solver.statistic = to_enum(k, v, parse_weight_statistic); }},
        {"mu_w", [](auto& c, auto& k, auto& v) { c.solver.mu_w = to_step(k, v); }},
        {"mu_y", [](auto& c, auto& k, auto& v) { c.solver.mu_y = to_step(k, v); }},
        {"alpha", [](auto& c, auto& k, auto& v) { c.solver.alpha = to_step(k, v); }},
        {"zeta",
         [](auto& c, auto& k, auto& v) {
           c.solver.zeta = to_double(k, v);
           if (!(c.solver.zeta >= 0.0 && c.solver.zeta <= 1.0)) throw ConfigError(k, "must lie in [0, 1]");
         }},
        {"max_iter", [](auto& c, auto& k, auto& v) { c.solver.max_iter = to_size(k, v); }},
        {"tol",
         [](auto& c, auto& k, auto& v) {
           c.solver.tol = to_double(k, v);
           if (c.solver.tol < 0.0) throw ConfigError(k, "must be nonnegative");
         }},
        {"compare_tol",
         [](auto& c, auto& k, auto& v) {
           c.solver.compare_tol = to_double(k, v);
           if (!(c.solver.compare_tol > 0.0)) throw ConfigError(k, "must be positive");
         }},
        {"compare_max_iter", [](auto& c, auto& k, auto& v) { c.solver.compare_max_iter = to_size(k, v); }},
        {"schedule",
         [](auto& c, auto& k, auto& v) {
           const auto s = trim(v);
           if (s == "sequential") c.solver.schedule = Schedule::sequential;
           else if (s == "concurrent") c.solver.schedule = Schedule::concurrent;
           else throw ConfigError(k, "expected 'sequential' or 'concurrent'");
         }}}},
      {"output",
       {{"trace", [](auto& c, auto&, auto& v) { c.output.trace = trim(v); }},
        {"summary", [](auto& c, auto&, auto& v) { c.output.summary = trim(v); }},
        {"comparison", [](auto& c, auto&, auto& v) { c.output.comparison = trim(v); }},
        {"weights", [](auto& c, auto&, auto& v) { c.output.weights = trim(v); }},
        {"instance_dir", [](auto& c, auto&, auto& v) { c.output.instance_dir = trim(v); }},
        {"format",
         [](auto& c, auto& k, auto& v) {
           const auto s = trim(v);
           if (s != "csv" && s != "json") throw ConfigError(k, "expected 'csv' or 'json'");
           c.output.format = s;
         }}}},
  };
  return s;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()), e.message());
  }
  ExperimentConfig cfg;
  const auto& sch = schema();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(section, "entries must sit inside a [section]");
    }
    const auto sec = sch.find(section);
    if (sec == sch.end()) throw ConfigError(section, "unknown section");
    for (const auto& [name, value] : body) {
      const std::string key = section + "." + name;
      const auto it = sec->second.find(name);
      if (it == sec->second.end()) throw ConfigError(key, "unknown key");
      it->second(cfg, key, value.data());
    }
  }
  if (cfg.instance.sparsity > cfg.instance.p) throw ConfigError("instance.sparsity", "exceeds p");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "[experiment]\n"
     << "seed = " << c.seed << "\n\n"
     << "[topology]\n"
     << "n = " << c.topology.n << "\n"
     << "kind = " << to_string(c.topology.kind) << "\n"
     << "density = " << fmt_double(c.topology.density) << "\n"
     << "regime = " << to_string(c.topology.regime) << "\n"
     << "edge_list = " << c.topology.edge_list << "\n\n"
     << "[instance]\n"
     << "family = " << to_string(c.instance.family) << "\n"
     << "p = " << c.instance.p << "\n"
     << "m_k = " << c.instance.m_k << "\n"
     << "sparsity = " << c.instance.sparsity << "\n"
     << "noise_std = " << fmt_double(c.instance.noise_std) << "\n"
     << "lambda = " << fmt_double(c.instance.lambda) << "\n"
     << "ridge = " << fmt_double(c.instance.ridge) << "\n"
     << "coupling_dim = " << c.instance.coupling_dim << "\n"
     << "gterm = " << to_string(c.instance.gterm) << "\n"
     << "dir = " << c.instance.dir << "\n\n"
     << "[solver]\n"
     << "method = " << to_string(c.solver.method) << "\n"
     << "compare = " << join_methods(c.solver.compare) << "\n"
     << "weights = " << to_string(c.solver.weights) << "\n"
     << "statistic = " << to_string(c.solver.statistic) << "\n"
     << "mu_w = " << fmt_step(c.solver.mu_w) << "\n"
     << "mu_y = " << fmt_step(c.solver.mu_y) << "\n"
     << "alpha = " << fmt_step(c.solver.alpha) << "\n"
     << "zeta = " << fmt_double(c.solver.zeta) << "\n"
     << "max_iter = " << c.solver.max_iter << "\n"
     << "tol = " << fmt_double(c.solver.tol) << "\n"
     << "compare_tol = " << fmt_double(c.solver.compare_tol) << "\n"
     << "compare_max_iter = " << c.solver.compare_max_iter << "\n"
     << "schedule = " << (c.solver.schedule == Schedule::concurrent ? "concurrent" : "sequential") << "\n\n"
     << "[output]\n"
     << "trace = " << c.output.trace << "\n"
     << "summary = " << c.output.summary << "\n"
     << "comparison = " << c.output.comparison << "\n"
     << "weights = " << c.output.weights << "\n"
     << "instance_dir = " << c.output.instance_dir << "\n"
     << "format = " << c.output.format << "\n";
  return os.str();
}

std::string default_config_text() {
  std::string out =
      "# pdd experiment configuration. Every key is optional; shown values are the defaults.\n"
      "#\n"
      "# [experiment] seed        seeds both the topology draw and the instance\n"
      "# [topology]   kind        ring-digraph | random-digraph | undirected-random\n"
      "#              regime      auto (Metropolis on the graph as drawn) | doubly (Metropolis on\n"
      "#                          the undirected closure) | row (1/|N_k| on the graph as drawn)\n"
      "#              edge_list   optional file of 'l k' lines, 1-indexed; overrides kind/density\n"
      "# [instance]   family      private-blocks (A) | consensus-mean (B)\n"
      "#              sparsity    0 selects ceil(p/10); coupling_dim 0 selects max(1, p/2)\n"
      "#              gterm       l1 | zero | indicator-zero\n"
      "#              dir         optional instance directory to load instead of generating\n"
      "# [solver]     method      pdd | pdd-tracking | pdd-network | extra | diging\n"
      "#              compare     comma-separated methods for the compare subcommand\n"
      "#              weights     static | adaptive; statistic filter | theorem-scaled\n"
      "#              mu_w, mu_y  'auto' = 0.9 x the step-size bounds; alpha 'auto' = tuned\n"
      "#              tol         stop once the squared error reaches tol (0 runs max_iter)\n"
      "# [output]     paths are relative to --out-dir; weights/instance_dir empty = skipped\n"
      "\n";
  return out + to_text(ExperimentConfig{});
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_text(config))));
  return buf;
}

}  // namespace pdd
