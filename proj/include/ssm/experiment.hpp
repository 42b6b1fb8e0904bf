#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ssm/model.hpp"

namespace ssm {

// Everything a run needs, parsed from a JSON config file. Field names match
// the JSON keys one to one.
struct ExperimentConfig {
  std::string model = "lg";
  std::map<std::string, std::string> priors;  // name -> prior spec text
  std::string algorithm = "smc2";  // smc2|ibis|pmmh|pf|kalman|simulate

  // Sampler sizes and triggers.
  int n_theta = 1000;
  int n_x = 100;
  double ess_threshold = 0.5;
  double acceptance_threshold = 0.2;
  double nx_growth_factor = 2.0;
  int nx_cap = 65536;
  bool auto_nx = true;
  std::string proposal = "independent";  // independent|random-walk
  double rw_scale = 0.0;
  int moves_per_rejuvenation = 1;
  bool store_trajectories = false;
  std::vector<int> checkpoints;
  std::uint64_t seed = 0;
  int threads = 1;

  // Data and outputs.
  std::string data_path;
  std::string output_dir;
  bool data_raw_prices = false;

  // Simulation (algorithm == "simulate").
  int T = 0;
  std::vector<double> theta;  // free parameter vector for simulate/pf/kalman
  std::vector<int> missing_indices;  // 1-based times left unobserved
  std::string output_data;

  // PMMH extras.
  int pmmh_n_iter = 10000;
  double pmmh_init_scale = 0.5;
  bool pmmh_adapt = true;
  double pmmh_burnin_frac = 0.2;
  int pmmh_thin = 1;

  // Athletics smoothing thresholds (record probabilities per time).
  std::vector<double> record_thresholds;

  // Initial-location hyperparameters for the athletics model.
  std::optional<double> athletics_init_loc_mean;
  std::optional<double> athletics_init_loc_sd;
  std::optional<double> athletics_init_trend_sd;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_json(const std::string& json_text);
std::string config_to_json(const ExperimentConfig& config);

// Builds a model instance by name with any prior overrides applied.
std::unique_ptr<Model> make_model(const ExperimentConfig& config);

// CSV data file: header "t,y1[,y2,...]", one row per time, empty fields for a
// missing observation. Raw-price inputs are turned into scaled log-returns.
Dataset load_dataset(const std::string& path, int obs_dim, bool raw_prices);
void write_dataset(const std::string& path, const Dataset& data);

// simulate: writes the data CSV plus "<path>.truth.json" with the generating
// parameters and latent states. Returns the data path.
std::string run_simulate(const ExperimentConfig& config);

// run: executes the configured algorithm, writes diagnostics.jsonl,
// checkpoints/particles_t<k>.csv and summary.json under output_dir.
// Returns the output directory.
std::string run_experiment(const ExperimentConfig& config);

}  // namespace ssm
