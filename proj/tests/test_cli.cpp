#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <vector>

#include "ssm/errors.hpp"
#include "ssm/experiment.hpp"
#include "ssm/util.hpp"

using namespace ssm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("ssm_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

std::string strip_wall(const std::string& jsonl_text) {
  std::stringstream in(jsonl_text), out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    j.erase("wall_ms");
    out << j.dump() << "\n";
  }
  return out.str();
}

ExperimentConfig lg_sim_config(const TempDir& dir, int T, std::uint64_t seed) {
  ExperimentConfig c;
  c.model = "lg";
  c.algorithm = "simulate";
  c.priors = {{"rho", "fixed(0.6)"}, {"sigma", "fixed(1)"}, {"tau", "fixed(1)"}};
  c.T = T;
  c.seed = seed;
  c.output_data = dir.file("lg_data.csv");
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SSM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int ret = std::system(cmd.c_str());
  return WIFEXITED(ret) ? WEXITSTATUS(ret) : -1;
}

}  // namespace

TEST_CASE("simulate with T=0 writes a header-only file") {
  TempDir dir;
  ExperimentConfig c = lg_sim_config(dir, 0, 1);
  run_simulate(c);
  CHECK(slurp(c.output_data) == "t,y1\n");
}

TEST_CASE("simulate is byte-deterministic in the seed") {
  TempDir dir;
  ExperimentConfig c = lg_sim_config(dir, 50, 7);
  run_simulate(c);
  const std::string first = slurp(c.output_data);
  run_simulate(c);
  CHECK(slurp(c.output_data) == first);
  c.seed = 8;
  run_simulate(c);
  CHECK(slurp(c.output_data) != first);
}

TEST_CASE("simulated volatility series shows heavy tails") {
  TempDir dir;
  ExperimentConfig c;
  c.model = "sv1";
  c.algorithm = "simulate";
  c.T = 1000;
  c.seed = 11;
  c.theta = {0.0, 0.0, 0.5, 0.0625, 0.01};
  c.output_data = dir.file("sv.csv");
  run_simulate(c);

  const Dataset data = load_dataset(c.output_data, 1, false);
  REQUIRE(data.size() == 1000);
  std::vector<double> y;
  for (const auto& obs : data) y.push_back(obs.y[0]);
  const double m = mean_of(y);
  double m2 = 0.0, m4 = 0.0;
  for (double v : y) {
    m2 += (v - m) * (v - m);
    m4 += (v - m) * (v - m) * (v - m) * (v - m);
  }
  m2 /= y.size();
  m4 /= y.size();
  CHECK(m4 / (m2 * m2) > 3.0);  // mixed-Gaussian marginal: excess kurtosis

  // Truth sidecar carries the generating parameters.
  const json truth = json::parse(slurp(c.output_data + ".truth.json"));
  CHECK(truth.at("theta").at("xi").get<double>() == 0.5);
  CHECK(truth.at("states").size() == 1000);
}

TEST_CASE("kalman mode emits exact per-step likelihoods and no MC fields") {
  TempDir dir;
  ExperimentConfig sim = lg_sim_config(dir, 30, 3);
  run_simulate(sim);

  ExperimentConfig c;
  c.model = "lg";
  c.algorithm = "kalman";
  c.priors = sim.priors;
  c.theta = {};
  c.data_path = sim.output_data;
  c.output_dir = dir.file("kalman_out");
  run_experiment(c);

  const auto recs = read_jsonl(c.output_dir + "/diagnostics.jsonl");
  REQUIRE(recs.size() == 30);
  double cum = 0.0;
  for (const auto& r : recs) {
    CHECK(!r.contains("ess"));
    CHECK(!r.contains("n_x"));
    cum += r.at("loglik_increment").get<double>();
    CHECK(r.at("cum_loglik").get<double>() == doctest::Approx(cum).epsilon(1e-12));
  }
  const json summary = json::parse(slurp(c.output_dir + "/summary.json"));
  CHECK(summary.at("loglik").get<double>() ==
        doctest::Approx(recs.back().at("cum_loglik").get<double>()));
}

TEST_CASE("smc2 run artifacts are internally consistent") {
  TempDir dir;
  ExperimentConfig sim = lg_sim_config(dir, 25, 4);
  run_simulate(sim);

  ExperimentConfig c;
  c.model = "lg";
  c.algorithm = "smc2";
  c.priors = {{"rho", "uniform(-1,1)"}, {"sigma", "fixed(1)"}, {"tau", "fixed(1)"}};
  c.n_theta = 60;
  c.n_x = 8;
  c.seed = 5;
  c.checkpoints = {10, 25};
  c.data_path = sim.output_data;
  c.output_dir = dir.file("smc2_out");
  run_experiment(c);

  const auto recs = read_jsonl(c.output_dir + "/diagnostics.jsonl");
  CHECK(recs.size() == 25);
  const json summary = json::parse(slurp(c.output_dir + "/summary.json"));
  CHECK(recs.back().at("cum_log_evidence").get<double>() ==
        doctest::Approx(summary.at("log_evidence").get<double>()).epsilon(1e-12));
  CHECK(summary.at("theta_mean").contains("rho"));
  CHECK(!summary.at("theta_mean").contains("sigma"));  // fixed, not sampled

  for (int t : {10, 25}) {
    const std::string csv =
        slurp(c.output_dir + "/checkpoints/particles_t" + std::to_string(t) + ".csv");
    std::stringstream ss(csv);
    std::string header;
    std::getline(ss, header);
    CHECK(header == "log_weight,rho,x1");
    int lines = 0;
    std::string line;
    while (std::getline(ss, line))
      if (!line.empty()) ++lines;
    CHECK(lines == 60);
  }
}

TEST_CASE("identical seeds give identical outputs at 1 and 4 threads") {
  TempDir dir;
  ExperimentConfig sim = lg_sim_config(dir, 20, 6);
  run_simulate(sim);

  ExperimentConfig c;
  c.model = "lg";
  c.algorithm = "smc2";
  c.priors = {{"rho", "uniform(-1,1)"}, {"sigma", "fixed(1)"}, {"tau", "fixed(1)"}};
  c.n_theta = 40;
  c.n_x = 8;
  c.seed = 9;
  c.data_path = sim.output_data;

  c.threads = 1;
  c.output_dir = dir.file("run_a");
  run_experiment(c);
  c.threads = 4;
  c.output_dir = dir.file("run_b");
  run_experiment(c);

  CHECK(strip_wall(slurp(dir.file("run_a") + "/diagnostics.jsonl")) ==
        strip_wall(slurp(dir.file("run_b") + "/diagnostics.jsonl")));
}

TEST_CASE("the echoed config reproduces the run") {
  TempDir dir;
  ExperimentConfig sim = lg_sim_config(dir, 15, 12);
  run_simulate(sim);

  ExperimentConfig c;
  c.model = "lg";
  c.algorithm = "smc2";
  c.priors = {{"rho", "uniform(-1,1)"}, {"sigma", "fixed(1)"}, {"tau", "fixed(1)"}};
  c.n_theta = 30;
  c.n_x = 4;
  c.seed = 31;
  c.data_path = sim.output_data;
  c.output_dir = dir.file("orig");
  run_experiment(c);

  const json summary = json::parse(slurp(c.output_dir + "/summary.json"));
  ExperimentConfig echoed = parse_config_json(summary.at("config").dump());
  echoed.output_dir = dir.file("echoed");
  run_experiment(echoed);

  CHECK(strip_wall(slurp(dir.file("orig") + "/diagnostics.jsonl")) ==
        strip_wall(slurp(dir.file("echoed") + "/diagnostics.jsonl")));
}

TEST_CASE("dataset parsing handles missing rows and rejects partial ones") {
  TempDir dir;
  {
    std::ofstream out(dir.file("ath.csv"));
    out << "t,y1,y2\n1,490.5,491.2\n2,,\n3,488.0,489.9\n";
  }
  const Dataset data = load_dataset(dir.file("ath.csv"), 2, false);
  REQUIRE(data.size() == 3);
  CHECK(!data[0].missing);
  CHECK(data[1].missing);
  CHECK(data[2].y[0] == 488.0);

  {
    std::ofstream out(dir.file("bad.csv"));
    out << "t,y1,y2\n1,490.5,\n";
  }
  CHECK_THROWS_AS(load_dataset(dir.file("bad.csv"), 2, false), ConfigError);
}

TEST_CASE("raw price ingestion applies the scaled log-return transform") {
  TempDir dir;
  {
    std::ofstream out(dir.file("prices.csv"));
    out << "t,y1\n1,100.0\n2,101.0\n3,99.5\n";
  }
  const Dataset data = load_dataset(dir.file("prices.csv"), 1, true);
  REQUIRE(data.size() == 2);
  CHECK(data[0].y[0] ==
        doctest::Approx(std::pow(10.0, 2.5) * std::log(101.0 / 100.0)).epsilon(1e-12));
  CHECK(data[1].y[0] ==
        doctest::Approx(std::pow(10.0, 2.5) * std::log(99.5 / 101.0)).epsilon(1e-12));
}

TEST_CASE("config validation rejects out-of-range thresholds") {
  ExperimentConfig c;
  c.algorithm = "smc2";
  c.data_path = "nonexistent.csv";
  c.output_dir = "out";
  c.ess_threshold = 1.5;
  CHECK_THROWS_AS(run_experiment(c), ConfigError);
  c.ess_threshold = 0.5;
  c.acceptance_threshold = 0.0;
  CHECK_THROWS_AS(run_experiment(c), ConfigError);
}

TEST_CASE("athletics smoothing pipeline emits consistent record probabilities") {
  TempDir dir;
  ExperimentConfig sim;
  sim.model = "athletics";
  sim.algorithm = "simulate";
  sim.T = 20;
  sim.seed = 21;
  sim.theta = {0.8, -0.15, 4.0};
  sim.missing_indices = {9};
  sim.output_data = dir.file("ath_data.csv");
  run_simulate(sim);

  ExperimentConfig c;
  c.model = "athletics";
  c.algorithm = "smc2";
  c.n_theta = 50;
  c.n_x = 32;
  c.seed = 22;
  c.store_trajectories = true;
  c.record_thresholds = {486.11, 502.62};
  c.data_path = sim.output_data;
  c.output_dir = dir.file("ath_out");
  run_experiment(c);

  const std::string csv = slurp(c.output_dir + "/record_probabilities.csv");
  std::stringstream ss(csv);
  std::string line;
  std::getline(ss, line);
  CHECK(line == "t,p_486.11000000000001,p_502.62,p_cond");
  int rows = 0;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    ++rows;
    std::stringstream fields(line);
    std::string item;
    std::vector<double> vals;
    while (std::getline(fields, item, ',')) vals.push_back(std::stod(item));
    REQUIRE(vals.size() == 4);
    if (vals[2] > 0.0 && !std::isnan(vals[3])) {
      CHECK(std::fabs(vals[3] * vals[2] - vals[1]) <= 1e-12);
    }
  }
  CHECK(rows == 20);

  // Missing year: outer weights unchanged -> identical ESS, unit increment.
  const auto recs = read_jsonl(c.output_dir + "/diagnostics.jsonl");
  CHECK(recs[8].at("log_Lhat_t").get<double>() == 0.0);
  CHECK(recs[8].at("ess").get<double>() ==
        doctest::Approx(recs[7].at("ess").get<double>()));
}

TEST_CASE("cli binary: exit codes and outputs") {
  TempDir dir;
  // Bad config path.
  CHECK(run_cli("run --config " + dir.file("missing.json")) == 2);

  // simulate then run through the binary.
  {
    json sim;
    sim["model"] = "lg";
    sim["algorithm"] = "simulate";
    sim["T"] = 15;
    sim["seed"] = 2;
    sim["priors"] = {{"rho", "fixed(0.5)"}, {"sigma", "fixed(1)"}, {"tau", "fixed(1)"}};
    sim["output_data"] = dir.file("data.csv");
    std::ofstream out(dir.file("sim.json"));
    out << sim.dump();
  }
  CHECK(run_cli("simulate --config " + dir.file("sim.json")) == 0);
  CHECK(fs::exists(dir.file("data.csv")));

  {
    json run;
    run["model"] = "lg";
    run["algorithm"] = "smc2";
    run["n_theta"] = 20;
    run["n_x"] = 4;
    run["seed"] = 3;
    run["priors"] = {{"rho", "uniform(-1,1)"}, {"sigma", "fixed(1)"}, {"tau", "fixed(1)"}};
    run["data"] = dir.file("data.csv");
    run["output"] = dir.file("cli_out");
    std::ofstream out(dir.file("run.json"));
    out << run.dump();
  }
  CHECK(run_cli("run --config " + dir.file("run.json")) == 0);
  CHECK(fs::exists(dir.file("cli_out") + "/summary.json"));
  CHECK(fs::exists(dir.file("cli_out") + "/diagnostics.jsonl"));

  // Seed override changes outputs.
  CHECK(run_cli("run --config " + dir.file("run.json") + " --seed 99") == 0);
  // Invalid algorithm in config.
  {
    std::ofstream out(dir.file("bad.json"));
    out << R"({"algorithm":"annealing","data":"x.csv","output":"y"})";
  }
  CHECK(run_cli("run --config " + dir.file("bad.json")) == 2);
}
