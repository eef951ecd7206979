#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pdd/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

struct Common {
  std::string config;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, Common& c, bool with_out_dir) {
  cmd->add_option("--config", c.config, "experiment configuration file (defaults apply when omitted)");
  if (with_out_dir) cmd->add_option("--out-dir", c.out_dir, "directory for output files");
  cmd->add_option("--seed", c.seed, "override experiment.seed");
  cmd->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv", "json"}));
}

pdd::ExperimentConfig load(const Common& c) {
  pdd::ExperimentConfig cfg = c.config.empty() ? pdd::ExperimentConfig{} : pdd::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"primal-dual diffusion experiments"};
  app.require_subcommand(1);

  Common run_opts, compare_opts, certify_opts;
  auto* run = app.add_subcommand("run", "run one method and write its trace and summary");
  add_common(run, run_opts, true);
  auto* compare = app.add_subcommand("compare", "run the configured methods and tabulate iterations to tol");
  add_common(compare, compare_opts, true);
  auto* certify = app.add_subcommand("certify", "evaluate step-size bounds and the rate certificate");
  add_common(certify, certify_opts, false);
  app.add_subcommand("print-default-config", "print the annotated default configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (app.got_subcommand("print-default-config")) {
      std::cout << pdd::default_config_text();
      return kExitOk;
    }
    if (run->parsed()) {
      return pdd::cmd_run(load(run_opts), run_opts.out_dir, run_opts.format, std::cerr);
    }
    if (compare->parsed()) {
      return pdd::cmd_compare(load(compare_opts), compare_opts.out_dir, compare_opts.format, std::cerr);
    }
    if (certify->parsed()) {
      return pdd::cmd_certify(load(certify_opts), certify_opts.format, std::cout);
    }
  } catch (const pdd::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const pdd::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
