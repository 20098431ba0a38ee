#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bnlte/data.hpp"
#include "bnlte/sampler.hpp"

namespace bnlte {

// One reproducible experiment: a data source, a background-knowledge
// setting, sampler settings, and an output directory.
struct ExperimentConfig {
  // Exactly one of data_csv / synth_spec must be set.
  std::string data_csv;
  std::string data_sidecar;     // defaults to data_csv with .json extension
  std::string synth_spec;       // ground-truth spec JSON to simulate from
  int synth_n = 380;

  // none | rn | rn+sn | sidecar | custom:<path to role JSON>
  std::string bk_setting = "none";

  SamplerConfig sampler;
  double pip_threshold = 0.5;
  std::string out_dir;

  void validate() const;
};

ExperimentConfig experiment_config_from_json(const std::string& path);
void write_experiment_config(const ExperimentConfig& config,
                             const std::string& path);

// Applies a background-knowledge setting to the dataset's role labels.
// "none" clears all roles; "rn"/"rn+sn" require the standard 16-variable
// schema; "sidecar" keeps the roles as ingested; "custom:PATH" loads a JSON
// map of variable name to role.
std::vector<Role> resolve_roles(const Dataset& data,
                                const std::string& bk_setting);

// Runs the full fit and writes the run directory: resolved config snapshot,
// dataset copy, per-chain sample files, posterior summary, PIP matrix and
// diagnostics tables. Returns the run directory path.
std::string fit_run(const ExperimentConfig& config);

// Reads the artifacts fit_run wrote.
struct RunArtifacts {
  ExperimentConfig config;
  Dataset data;
  PosteriorSummary summary;
  std::vector<ChainResult> chains;  // loaded on demand
};

RunArtifacts load_run(const std::string& run_dir, bool with_chains = false);

// Evaluates one or more runs against a consensus graph ("ad" selects the
// built-in Alzheimer's reference, otherwise a tri-state CSV path). Writes
// metrics.csv/.json and, for two or more runs, comparison.csv.
void evaluate_runs(const std::vector<std::string>& run_dirs,
                   const std::string& consensus_spec, double threshold,
                   const std::string& out_dir);

// Figure-data exports for a fitted run: the per-subject progression panel
// and requested child/parent effect trajectories.
void figures_run(const std::string& run_dir, bool panel,
                 const std::vector<std::pair<std::string, std::string>>& pairs,
                 int grid_size, const std::string& out_dir);

// PIP matrix CSV round trip (rows are parents, columns children).
void write_pip_csv(const Eigen::MatrixXd& pip,
                   const std::vector<std::string>& names,
                   const std::string& path);
Eigen::MatrixXd read_pip_csv(const std::string& path,
                             std::vector<std::string>* names = nullptr);

}  // namespace bnlte
