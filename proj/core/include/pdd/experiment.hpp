#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pdd/config.hpp"

namespace pdd {

/// Topology, weights and instance resolved from a configuration.
struct Experiment {
  DirectedTopology topology;
  CombinationMatrix weights;
  CsInstance instance;
};

Experiment build_experiment(const ExperimentConfig& config);

struct MethodOutcome {
  Method method = Method::pdd;
  RunTrace trace;
  Vec w;
  Vec y;  // stacked local duals
  std::size_t iterations = 0;
  bool converged = false;
  double final_sq_error = 0.0;
  StepSizes steps;  // alpha in both fields for the baselines
  std::vector<WeightSnapshot> weight_history;
};

/// Runs one method on the experiment. PDD variants use the solver engines;
/// extra and diging run on the dual consensus form of the instance.
MethodOutcome run_method(const Experiment& exp, const ExperimentConfig& config, Method method,
                         double tol, std::size_t max_iter);

/// Steps PDD will use for this configuration.
StepSizes resolve_steps(const Experiment& exp, const ExperimentConfig& config);

/// Certificate plus C_o for the zero start.
struct CertificateReport {
  RateCertificate certificate;
  double initial_error_constant = 0.0;
};
CertificateReport certificate_report(const Experiment& exp, const ExperimentConfig& config);

void write_certificate_text(std::ostream& out, const CertificateReport& report);
void write_certificate_json(std::ostream& out, const CertificateReport& report);

/// Trace in CSV (with '#' metadata lines) or JSON.
void write_trace(std::ostream& out, const RunTrace& trace, const std::string& format);

struct ComparisonRow {
  std::string method;
  std::size_t iterations_to_tol = 0;
  bool converged = false;
  double final_sq_error = 0.0;
};

/// Rows sorted by iterations-to-tol, unconverged methods last.
std::vector<ComparisonRow> compare_methods(const Experiment& exp, const ExperimentConfig& config);

// Subcommands. Each returns the process exit code; ConfigError and
// DivergenceError propagate to the caller.
int cmd_run(const ExperimentConfig& config, const std::filesystem::path& out_dir,
            const std::string& format, std::ostream& log);
int cmd_compare(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                const std::string& format, std::ostream& log);
int cmd_certify(const ExperimentConfig& config, const std::string& format, std::ostream& out);

}  // namespace pdd
