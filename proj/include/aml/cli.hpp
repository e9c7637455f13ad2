#pragma once

// Experiment runner: single runs, beta sweeps, post-hoc analysis of a run
// directory, perceptron maximizers and perceptron sampling.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aml/dynamics.hpp"
#include "aml/perceptron.hpp"

namespace aml::cli {

enum ExitCode : int { ok = 0, invalid = 1, budget = 2, check_failed = 3 };

struct ExperimentConfig {
  DynamicsConfig dynamics;
  std::size_t dim = 2;
  std::size_t n = 1000;
  std::string init = "uniform_seeded";
  std::optional<std::string> perceptron_file;
  std::optional<PerceptronParams> perceptron;  // inline parameters
  std::vector<double> beta_list;
  std::string output_dir;

  void validate() const;
  /// Inline parameters, else the file, else none.
  std::optional<PerceptronParams> resolve_perceptron() const;

  /// Flat object: the dynamics keys plus d, N, init, perceptron, beta_list,
  /// output_dir. `perceptron` is null, a file path or an inline object.
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  bool operator==(const ExperimentConfig&) const = default;
};

/// $AML_OUTPUT_DIR if set, else "runs".
std::filesystem::path default_output_root();

/// Writes trajectory.csv, energy.csv, final_state.csv, clusters.json and
/// summary.json into config.output_dir.
int cmd_simulate(const ExperimentConfig& config);

/// One run per beta in subdirectories, then sweep.csv and masses.csv.
int cmd_sweep(const ExperimentConfig& config, std::size_t jobs);

/// Checks: any of "hessian", "bounds", "spectrum", "extrema". Empty means all.
int cmd_analyze(const std::filesystem::path& run_dir, const std::vector<std::string>& checks,
                double merge_tol = 1e-9);

int run(int argc, char** argv);

}  // namespace aml::cli
