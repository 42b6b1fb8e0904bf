#include <CLI11.hpp>
#include <cstdint>
#include <iostream>

#include "ssm/errors.hpp"
#include "ssm/experiment.hpp"

namespace {

int dispatch(ssm::ExperimentConfig config, bool simulate) {
  try {
    if (simulate) {
      config.algorithm = "simulate";
      const std::string path = ssm::run_simulate(config);
      std::cout << "wrote " << path << "\n";
    } else {
      const std::string dir = ssm::run_experiment(config);
      std::cout << "wrote outputs to " << dir << "\n";
    }
    return 0;
  } catch (const ssm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ssm::FilterDegenerateError& e) {
    std::cerr << "degenerate filter: " << e.what() << " (t=" << e.t << ")\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential Monte Carlo inference for state-space models"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed_override = 0;
  bool seed_set = false;
  int threads_override = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON experiment config")->required();
    cmd->add_option("--seed", seed_override, "override the config seed")
        ->each([&](const std::string&) { seed_set = true; });
    cmd->add_option("--threads", threads_override, "override the worker thread count");
  };

  CLI::App* sim = app.add_subcommand("simulate", "simulate a synthetic dataset");
  add_common(sim);
  CLI::App* run = app.add_subcommand("run", "run the configured sampler");
  add_common(run);

  CLI11_PARSE(app, argc, argv);

  ssm::ExperimentConfig config;
  try {
    config = ssm::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  if (seed_set) config.seed = seed_override;
  if (threads_override > 0) config.threads = threads_override;

  return dispatch(std::move(config), sim->parsed());
}
