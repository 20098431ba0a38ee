#include "bnlte/pipeline.hpp"

#include <filesystem>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "bnlte/graph_eval.hpp"
#include "bnlte/io.hpp"
#include "bnlte/progression.hpp"
#include "bnlte/synth.hpp"

namespace fs = std::filesystem;

namespace bnlte {

namespace {

nlohmann::json sampler_config_to_json(const SamplerConfig& c) {
  nlohmann::json j;
  j["num_chains"] = c.num_chains;
  j["num_iterations"] = c.num_iterations;
  j["burn_in"] = c.burn_in;
  j["thin"] = c.thin;
  j["num_interior_knots"] = c.num_interior_knots;
  j["spline_degree"] = c.spline_degree;
  j["seed"] = c.seed;
  j["mh_step_z"] = c.mh_step_z;
  j["mh_step_beta"] = c.mh_step_beta;
  j["edge_prior_prob"] = c.edge_prior_prob;
  j["adapt"] = c.adapt;
  j["sample_hyperparameters"] = c.sample_hyperparameters;
  j["initial_tau_coef"] = c.initial_tau_coef;
  j["initial_tau_rough"] = c.initial_tau_rough;
  j["checkpoint_every"] = c.checkpoint_every;
  j["threads"] = c.threads;
  nlohmann::json priors;
  priors["sigma2_shape"] = c.priors.sigma2_shape;
  priors["sigma2_scale"] = c.priors.sigma2_scale;
  priors["tau_coef_shape"] = c.priors.tau_coef_shape;
  priors["tau_coef_scale"] = c.priors.tau_coef_scale;
  priors["tau_rough_shape"] = c.priors.tau_rough_shape;
  priors["tau_rough_rate"] = c.priors.tau_rough_rate;
  j["priors"] = std::move(priors);
  return j;
}

SamplerConfig sampler_config_from_json(const nlohmann::json& j) {
  SamplerConfig c;
  c.num_chains = j.value("num_chains", c.num_chains);
  c.num_iterations = j.value("num_iterations", c.num_iterations);
  c.burn_in = j.value("burn_in", c.burn_in);
  c.thin = j.value("thin", c.thin);
  c.num_interior_knots = j.value("num_interior_knots", c.num_interior_knots);
  c.spline_degree = j.value("spline_degree", c.spline_degree);
  c.seed = j.value("seed", c.seed);
  c.mh_step_z = j.value("mh_step_z", c.mh_step_z);
  c.mh_step_beta = j.value("mh_step_beta", c.mh_step_beta);
  c.edge_prior_prob = j.value("edge_prior_prob", c.edge_prior_prob);
  c.adapt = j.value("adapt", c.adapt);
  c.sample_hyperparameters =
      j.value("sample_hyperparameters", c.sample_hyperparameters);
  c.initial_tau_coef = j.value("initial_tau_coef", c.initial_tau_coef);
  c.initial_tau_rough = j.value("initial_tau_rough", c.initial_tau_rough);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.threads = j.value("threads", c.threads);
  if (j.contains("priors")) {
    const auto& pr = j.at("priors");
    c.priors.sigma2_shape = pr.value("sigma2_shape", c.priors.sigma2_shape);
    c.priors.sigma2_scale = pr.value("sigma2_scale", c.priors.sigma2_scale);
    c.priors.tau_coef_shape = pr.value("tau_coef_shape", c.priors.tau_coef_shape);
    c.priors.tau_coef_scale = pr.value("tau_coef_scale", c.priors.tau_coef_scale);
    c.priors.tau_rough_shape =
        pr.value("tau_rough_shape", c.priors.tau_rough_shape);
    c.priors.tau_rough_rate = pr.value("tau_rough_rate", c.priors.tau_rough_rate);
  }
  return c;
}

std::string default_sidecar(const std::string& csv_path) {
  const auto dot = csv_path.find_last_of('.');
  return (dot == std::string::npos ? csv_path : csv_path.substr(0, dot)) +
         ".json";
}

}  // namespace

void ExperimentConfig::validate() const {
  const bool has_csv = !data_csv.empty();
  const bool has_synth = !synth_spec.empty();
  if (has_csv == has_synth) {
    throw std::invalid_argument(
        "exactly one data source (data_csv or synth_spec) must be set");
  }
  if (has_csv && !fs::exists(data_csv)) {
    throw std::invalid_argument("data file not found: " + data_csv);
  }
  if (has_synth && !fs::exists(synth_spec)) {
    throw std::invalid_argument("spec file not found: " + synth_spec);
  }
  if (out_dir.empty()) throw std::invalid_argument("out_dir must be set");
  sampler.validate();
}

ExperimentConfig experiment_config_from_json(const std::string& path) {
  const auto j = nlohmann::json::parse(io::read_text(path));
  ExperimentConfig c;
  c.data_csv = j.value("data_csv", "");
  c.data_sidecar = j.value("data_sidecar", "");
  c.synth_spec = j.value("synth_spec", "");
  c.synth_n = j.value("synth_n", c.synth_n);
  c.bk_setting = j.value("bk_setting", c.bk_setting);
  c.pip_threshold = j.value("pip_threshold", c.pip_threshold);
  c.out_dir = j.value("out_dir", "");
  if (j.contains("sampler")) c.sampler = sampler_config_from_json(j.at("sampler"));
  return c;
}

void write_experiment_config(const ExperimentConfig& config,
                             const std::string& path) {
  nlohmann::json j;
  j["data_csv"] = config.data_csv;
  j["data_sidecar"] = config.data_sidecar;
  j["synth_spec"] = config.synth_spec;
  j["synth_n"] = config.synth_n;
  j["bk_setting"] = config.bk_setting;
  j["pip_threshold"] = config.pip_threshold;
  j["out_dir"] = config.out_dir;
  j["sampler"] = sampler_config_to_json(config.sampler);
  io::write_text_atomic(path, j.dump(2) + "\n");
}

std::vector<Role> resolve_roles(const Dataset& data,
                                const std::string& bk_setting) {
  const auto p = data.roles.size();
  if (bk_setting == "none") {
    return std::vector<Role>(p, Role::Free);
  }
  if (bk_setting == "sidecar") {
    return data.roles;
  }
  if (bk_setting == "rn" || bk_setting == "rn+sn") {
    const auto& names = ad_variable_names();
    if (data.variable_names != names) {
      throw std::runtime_error(
          "background preset '" + bk_setting +
          "' requires the standard 16-variable schema");
    }
    return bk_setting == "rn" ? ad_roles_rn() : ad_roles_rn_sn();
  }
  if (bk_setting.rfind("custom:", 0) == 0) {
    const std::string path = bk_setting.substr(7);
    const auto j = nlohmann::json::parse(io::read_text(path));
    std::vector<Role> roles(p, Role::Free);
    for (std::size_t i = 0; i < p; ++i) {
      const auto& name = data.variable_names[i];
      if (j.contains(name)) {
        roles[i] = role_from_string(j.at(name).get<std::string>());
      }
    }
    return roles;
  }
  throw std::invalid_argument("unknown background setting: " + bk_setting);
}

namespace {

nlohmann::json summary_to_json(const PosteriorSummary& summary,
                               const Dataset& data) {
  nlohmann::json j;
  j["variable_names"] = data.variable_names;
  nlohmann::json roles = nlohmann::json::array();
  for (auto r : data.roles) roles.push_back(role_to_string(r));
  j["roles"] = std::move(roles);
  j["pip"] = io::matrix_to_json(summary.pip);
  j["z_mean"] = io::vector_to_json(summary.z_mean);
  j["z_sd"] = io::vector_to_json(summary.z_sd);
  j["z_grid"] = io::vector_to_json(summary.z_grid);
  j["baseline_curves"] = io::matrix_to_json(summary.baseline_curves);
  j["chain_flipped"] = summary.chain_flipped;
  j["reconstruction_mse_mean"] = summary.reconstruction_mse_mean;
  nlohmann::json diag = nlohmann::json::array();
  for (const auto& row : summary.diagnostics) {
    nlohmann::json item;
    item["block"] = row.block;
    item["rhat"] = row.rhat ? nlohmann::json(*row.rhat) : nlohmann::json();
    item["ess"] = row.ess ? nlohmann::json(*row.ess) : nlohmann::json();
    diag.push_back(std::move(item));
  }
  j["diagnostics"] = std::move(diag);
  return j;
}

PosteriorSummary summary_from_json(const nlohmann::json& j) {
  PosteriorSummary summary;
  summary.pip = io::matrix_from_json(j.at("pip"));
  summary.z_mean = io::vector_from_json(j.at("z_mean"));
  summary.z_sd = io::vector_from_json(j.at("z_sd"));
  summary.z_grid = io::vector_from_json(j.at("z_grid"));
  summary.baseline_curves = io::matrix_from_json(j.at("baseline_curves"));
  summary.chain_flipped = j.at("chain_flipped").get<std::vector<bool>>();
  summary.reconstruction_mse_mean =
      j.at("reconstruction_mse_mean").get<double>();
  for (const auto& item : j.at("diagnostics")) {
    DiagnosticsRow row;
    row.block = item.at("block").get<std::string>();
    if (!item.at("rhat").is_null()) row.rhat = item.at("rhat").get<double>();
    if (!item.at("ess").is_null()) row.ess = item.at("ess").get<double>();
    summary.diagnostics.push_back(std::move(row));
  }
  return summary;
}

}  // namespace

void write_pip_csv(const Eigen::MatrixXd& pip,
                   const std::vector<std::string>& names,
                   const std::string& path) {
  std::ostringstream out;
  std::vector<std::string> header = {"from\\to"};
  header.insert(header.end(), names.begin(), names.end());
  out << io::format_csv_row(header);
  out.precision(17);
  const int p = static_cast<int>(pip.rows());
  for (int parent = 0; parent < p; ++parent) {
    std::vector<std::string> cells = {names[static_cast<std::size_t>(parent)]};
    for (int child = 0; child < p; ++child) {
      std::ostringstream cell;
      cell.precision(17);
      cell << pip(child, parent);
      cells.push_back(cell.str());
    }
    out << io::format_csv_row(cells);
  }
  io::write_text_atomic(path, out.str());
}

Eigen::MatrixXd read_pip_csv(const std::string& path,
                             std::vector<std::string>* names) {
  const auto table = io::read_csv(path);
  const int p = static_cast<int>(table.header.size()) - 1;
  if (static_cast<int>(table.rows.size()) != p) {
    throw std::runtime_error(path + ": PIP matrix must be square");
  }
  if (names) names->assign(table.header.begin() + 1, table.header.end());
  Eigen::MatrixXd pip(p, p);
  for (int parent = 0; parent < p; ++parent) {
    for (int child = 0; child < p; ++child) {
      pip(child, parent) = io::parse_cell(
          table.rows[static_cast<std::size_t>(parent)]
                    [static_cast<std::size_t>(child + 1)],
          static_cast<std::size_t>(parent), static_cast<std::size_t>(child));
    }
  }
  return pip;
}

std::string fit_run(const ExperimentConfig& config) {
  config.validate();
  fs::create_directories(config.out_dir);

  Dataset data;
  if (!config.synth_spec.empty()) {
    const GroundTruthSpec spec = load_spec_json(config.synth_spec);
    auto [simulated, true_z] = simulate_dataset(
        spec, config.synth_n, Rng::derive_seed(config.sampler.seed, 0x5D));
    data = std::move(simulated);
    std::ostringstream tz;
    tz << "true_z\n";
    tz.precision(17);
    for (Eigen::Index i = 0; i < true_z.size(); ++i) tz << true_z[i] << '\n';
    io::write_text_atomic(config.out_dir + "/true_z.csv", tz.str());
  } else {
    const std::string sidecar = config.data_sidecar.empty()
                                    ? default_sidecar(config.data_csv)
                                    : config.data_sidecar;
    data = load_dataset_csv(config.data_csv, sidecar);
  }

  data.roles = resolve_roles(data, config.bk_setting);
  const BackgroundKnowledge bk = BackgroundKnowledge::from_roles(data.roles);

  // Self-contained copy so the snapshot reproduces the run from the run
  // directory alone.
  write_dataset_csv(data, config.out_dir + "/dataset.csv",
                    config.out_dir + "/dataset.json");

  const MultiChainResult result =
      run_chains(config.sampler, data, bk, config.out_dir);

  for (std::size_t c = 0; c < result.chains.size(); ++c) {
    write_samples_binary(result.chains[c], config.out_dir + "/chain_" +
                                               std::to_string(c) +
                                               ".samples.bin");
  }

  nlohmann::json summary = summary_to_json(result.summary, data);
  io::write_text_atomic(config.out_dir + "/summary.json",
                        summary.dump(2) + "\n");
  write_pip_csv(result.summary.pip, data.variable_names,
                config.out_dir + "/pip.csv");
  write_diagnostics_csv(result.summary.diagnostics,
                        config.out_dir + "/diagnostics.csv");
  write_diagnostics_json(result.summary.diagnostics,
                         config.out_dir + "/diagnostics.json");

  {
    std::ostringstream zs;
    zs << "z_mean,z_sd\n";
    zs.precision(17);
    for (Eigen::Index i = 0; i < result.summary.z_mean.size(); ++i) {
      zs << result.summary.z_mean[i] << ',' << result.summary.z_sd[i] << '\n';
    }
    io::write_text_atomic(config.out_dir + "/z.csv", zs.str());
  }

  ExperimentConfig snapshot = config;
  snapshot.data_csv = config.out_dir + "/dataset.csv";
  snapshot.data_sidecar = config.out_dir + "/dataset.json";
  snapshot.synth_spec.clear();
  snapshot.bk_setting = "sidecar";  // roles are resolved into the copy
  write_experiment_config(snapshot, config.out_dir + "/config.json");

  return config.out_dir;
}

RunArtifacts load_run(const std::string& run_dir, bool with_chains) {
  RunArtifacts art;
  art.config = experiment_config_from_json(run_dir + "/config.json");
  art.data = load_dataset_csv(run_dir + "/dataset.csv", run_dir + "/dataset.json");
  art.summary = summary_from_json(
      nlohmann::json::parse(io::read_text(run_dir + "/summary.json")));
  if (with_chains) {
    for (int c = 0;; ++c) {
      const std::string path =
          run_dir + "/chain_" + std::to_string(c) + ".samples.bin";
      if (!fs::exists(path)) break;
      art.chains.push_back(read_samples_binary(path));
    }
    if (art.chains.empty()) {
      throw std::runtime_error("no chain sample files in " + run_dir);
    }
  }
  return art;
}

void evaluate_runs(const std::vector<std::string>& run_dirs,
                   const std::string& consensus_spec, double threshold,
                   const std::string& out_dir) {
  if (run_dirs.empty()) throw std::invalid_argument("no run directories");
  fs::create_directories(out_dir);

  const ConsensusGraph consensus = consensus_spec == "ad"
                                       ? ad_consensus()
                                       : load_consensus_csv(consensus_spec);

  std::vector<std::pair<std::string, GraphMetrics>> rows;
  std::vector<EdgeMatrix> graphs;
  std::vector<std::string> labels;
  nlohmann::json report = nlohmann::json::array();
  for (const auto& dir : run_dirs) {
    const RunArtifacts art = load_run(dir);
    if (art.data.variable_names != consensus.names) {
      throw std::runtime_error("variable schema of run " + dir +
                               " does not match the consensus graph");
    }
    const EdgeMatrix est = threshold_graph(art.summary.pip, threshold);
    const BackgroundKnowledge bk =
        BackgroundKnowledge::from_roles(art.data.roles);
    const GraphMetrics metrics = evaluate_graph(est, consensus, bk);
    const std::string label = fs::path(dir).filename().string();
    rows.emplace_back(label, metrics);
    graphs.push_back(est);
    labels.push_back(label);

    nlohmann::json item;
    item["run"] = label;
    item["reconstruction_mse_mean"] = art.summary.reconstruction_mse_mean;
    report.push_back(std::move(item));
  }

  write_metrics_csv(rows, out_dir + "/metrics.csv");
  write_metrics_json(rows, out_dir + "/metrics.json");
  io::write_text_atomic(out_dir + "/mse.json", report.dump(2) + "\n");

  if (graphs.size() >= 2) {
    const ComparisonMatrices cm = comparison_matrix(graphs, labels);
    write_comparison_csv(cm, consensus.names, out_dir + "/comparison.csv");
  }
}

void figures_run(const std::string& run_dir, bool panel,
                 const std::vector<std::pair<std::string, std::string>>& pairs,
                 int grid_size, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const RunArtifacts art = load_run(run_dir, !pairs.empty());
  if (panel) {
    export_progression_panel(art.summary, art.data,
                             out_dir + "/progression_panel.csv");
  }
  if (pairs.empty()) return;
  const SamplerConfig& sc = art.config.sampler;
  const SplineBasis basis(sc.num_interior_knots, sc.spline_degree);
  for (const auto& [child_name, parent_name] : pairs) {
    const int child = art.data.index_of(child_name);
    const int parent = art.data.index_of(parent_name);
    if (child < 0 || parent < 0) {
      throw std::runtime_error("unknown variable in pair " + child_name +
                               ":" + parent_name);
    }
    const EffectTrajectory traj = effect_trajectories(
        art.chains, basis, art.data, child, parent, grid_size);
    write_trajectory_csv(traj, out_dir + "/trajectory_" + child_name + "_" +
                                   parent_name + ".csv");
  }
}

}  // namespace bnlte
