#include "ssm/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "ssm/errors.hpp"
#include "ssm/kalman.hpp"
#include "ssm/models/athletics.hpp"
#include "ssm/models/linear_gaussian.hpp"
#include "ssm/models/sv.hpp"
#include "ssm/pmmh.hpp"
#include "ssm/smc2.hpp"
#include "ssm/util.hpp"

namespace ssm {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Runner-level stream tags (sampler roots use their own child).
constexpr std::uint64_t kTagSampler = 1;
constexpr std::uint64_t kTagCheckpoint = 2;
constexpr std::uint64_t kTagSimulate = 3;

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                   start)
      .count();
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ParamSet* params_of(Model& model) {
  if (auto* lg = dynamic_cast<LinearGaussianModel*>(&model)) return &lg->params();
  if (auto* sv = dynamic_cast<SvModel*>(&model)) return &sv->params();
  if (auto* ath = dynamic_cast<AthleticsModel*>(&model)) return &ath->params();
  return nullptr;
}

ProposalKind parse_proposal(const std::string& name) {
  if (name == "independent") return ProposalKind::kIndependentGaussian;
  if (name == "random-walk") return ProposalKind::kRandomWalk;
  throw ConfigError("unknown proposal kind: " + name);
}

void validate(const ExperimentConfig& c) {
  if (!(c.ess_threshold > 0.0 && c.ess_threshold < 1.0))
    throw ConfigError("ess_threshold must be in (0,1)");
  if (!(c.acceptance_threshold > 0.0 && c.acceptance_threshold < 1.0))
    throw ConfigError("acceptance_threshold must be in (0,1)");
  if (c.nx_growth_factor <= 1.0) throw ConfigError("nx_growth_factor must be > 1");
  if (c.threads < 1) throw ConfigError("threads must be >= 1");
  parse_proposal(c.proposal);
}

Smc2Config to_smc2_config(const ExperimentConfig& c) {
  Smc2Config out;
  out.n_theta = c.n_theta;
  out.n_x = c.n_x;
  out.ess_threshold = c.ess_threshold;
  out.acceptance_threshold = c.acceptance_threshold;
  out.nx_growth_factor = c.nx_growth_factor;
  out.nx_cap = c.nx_cap;
  out.auto_nx = c.auto_nx;
  out.proposal = parse_proposal(c.proposal);
  out.rw_scale = c.rw_scale;
  out.moves_per_rejuvenation = c.moves_per_rejuvenation;
  out.store_trajectories = c.store_trajectories;
  out.n_threads = c.threads;
  return out;
}

Vector theta_from_config(const ExperimentConfig& c, const Model& model) {
  if (static_cast<int>(c.theta.size()) != model.theta_dim())
    throw ConfigError("theta must have " + std::to_string(model.theta_dim()) +
                      " entries for model " + c.model);
  Vector th(model.theta_dim());
  for (int i = 0; i < th.size(); ++i) th[i] = c.theta[i];
  return th;
}

// Weighted posterior moments of the free parameters.
void cloud_moments(const std::vector<Vector>& thetas, std::span<const double> log_w,
                   Vector& mean, Vector& var) {
  const std::vector<double> w = normalized_weights_from_log(log_w);
  const int d = thetas.empty() ? 0 : static_cast<int>(thetas[0].size());
  mean = Vector::Zero(d);
  for (std::size_t m = 0; m < thetas.size(); ++m) mean += w[m] * thetas[m];
  var = Vector::Zero(d);
  for (std::size_t m = 0; m < thetas.size(); ++m) {
    const Vector c = thetas[m] - mean;
    var += w[m] * c.cwiseProduct(c);
  }
}

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path) : out_(path) {
    if (!out_) throw ConfigError("cannot open for writing: " + path);
  }
  void write(const json& record) {
    out_ << record.dump() << "\n";
    out_.flush();
  }

 private:
  std::ofstream out_;
};

void write_particle_checkpoint(const std::string& path,
                               const std::vector<std::string>& names,
                               const std::vector<Vector>& thetas,
                               std::span<const double> log_w,
                               const std::vector<std::vector<double>>* states,
                               int state_dim) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << "log_weight";
  for (const auto& n : names) out << "," << n;
  for (int i = 0; i < state_dim; ++i) out << ",x" << (i + 1);
  out << "\n";
  for (std::size_t m = 0; m < thetas.size(); ++m) {
    out << fmt_double(log_w[m]);
    for (int i = 0; i < thetas[m].size(); ++i) out << "," << fmt_double(thetas[m][i]);
    if (states) {
      const auto& x = (*states)[m];
      // For stored trajectories the current state is the trailing block.
      const std::size_t off = x.size() - static_cast<std::size_t>(state_dim);
      for (int i = 0; i < state_dim; ++i) out << "," << fmt_double(x[off + i]);
    }
    out << "\n";
  }
}

json summary_base(const ExperimentConfig& config, double runtime_ms) {
  json s;
  s["algorithm"] = config.algorithm;
  s["seed"] = config.seed;
  s["runtime_ms"] = runtime_ms;
  s["config"] = json::parse(config_to_json(config));
  return s;
}

void write_summary(const std::string& dir, const json& summary) {
  std::ofstream out(dir + "/summary.json");
  out << summary.dump(2) << "\n";
}

void add_moment_fields(json& summary, const Model& model, const Vector& mean,
                       const Vector& var) {
  json jm, jv;
  for (int i = 0; i < mean.size(); ++i) {
    jm[model.theta_names()[i]] = mean[i];
    jv[model.theta_names()[i]] = var[i];
  }
  summary["theta_mean"] = jm;
  summary["theta_var"] = jv;
}

void run_smc2(const ExperimentConfig& config, const Model& model, const Dataset& data,
              const std::string& dir) {
  const auto start = std::chrono::steady_clock::now();
  JsonlWriter diag(dir + "/diagnostics.jsonl");
  RngStream root = RngStream(config.seed);

  Smc2State state = smc2_init(model, to_smc2_config(config), data, root.split(kTagSampler));
  RngStream checkpoint_rng = root.split(kTagCheckpoint);

  std::size_t diag_cursor = 0;
  auto emit = [&] {
    // All diagnostics entries produced since the last emission.
    for (; diag_cursor < state.diagnostics.size(); ++diag_cursor) {
      const Smc2Diag& d = state.diagnostics[diag_cursor];
      json rec;
      rec["t"] = d.t;
      rec["ess"] = d.ess;
      rec["resampled"] = d.resampled;
      if (d.resampled) rec["acceptance_rate"] = d.acceptance_rate;
      rec["n_x"] = d.n_x;
      rec["log_Lhat_t"] = d.log_Lhat;
      rec["cum_log_evidence"] = d.cum_log_evidence;
      rec["wall_ms"] = elapsed_ms(start);
      diag.write(rec);
    }
  };
  emit();

  auto maybe_checkpoint = [&](int t) {
    if (std::find(config.checkpoints.begin(), config.checkpoints.end(), t) ==
        config.checkpoints.end())
      return;
    fs::create_directories(dir + "/checkpoints");
    const WeightedJointSample sample =
        select_trajectories(state, checkpoint_rng.split(static_cast<std::uint64_t>(t)));
    write_particle_checkpoint(dir + "/checkpoints/particles_t" + std::to_string(t) +
                                  ".csv",
                              model.theta_names(), sample.thetas, sample.log_weights,
                              &sample.states, sample.state_dim);
  };
  maybe_checkpoint(1);

  for (std::size_t i = 1; i < data.size(); ++i) {
    smc2_step(state, model, data);
    emit();
    maybe_checkpoint(state.t);
  }

  // Optional smoothing output: record probabilities per time.
  if (!config.record_thresholds.empty()) {
    if (!config.store_trajectories)
      throw ConfigError("record_thresholds requires store_trajectories");
    const auto* ath = dynamic_cast<const AthleticsModel*>(&model);
    if (!ath) throw ConfigError("record_thresholds requires the athletics model");
    const WeightedJointSample sample =
        select_trajectories(state, checkpoint_rng.split(0xFFFF));
    const std::vector<double> w = normalized_weights_from_log(sample.log_weights);
    std::ofstream out(dir + "/record_probabilities.csv");
    out << "t";
    for (double y : config.record_thresholds) out << ",p_" << fmt_double(y);
    if (config.record_thresholds.size() >= 2) out << ",p_cond";
    out << "\n";
    std::vector<double> locations(sample.thetas.size());
    for (int t = 1; t <= state.t; ++t) {
      for (std::size_t m = 0; m < sample.thetas.size(); ++m)
        locations[m] = sample.states[m][(t - 1) * sample.state_dim];
      out << t;
      std::vector<double> ps;
      for (double y : config.record_thresholds) {
        ps.push_back(ath->record_probability(sample.thetas, w, locations, y));
        out << "," << fmt_double(ps.back());
      }
      if (ps.size() >= 2)
        out << "," << fmt_double(ps[1] > 0.0 ? ps[0] / ps[1] : std::nan(""));
      out << "\n";
    }
  }

  Vector mean, var;
  cloud_moments(state.cloud.thetas, state.cloud.log_weights, mean, var);
  json summary = summary_base(config, elapsed_ms(start));
  summary["t_final"] = state.t;
  summary["log_evidence"] = state.log_evidence;
  summary["n_x_final"] = state.n_x;
  add_moment_fields(summary, model, mean, var);
  write_summary(dir, summary);
}

void run_ibis(const ExperimentConfig& config, const Model& model, const Dataset& data,
              const std::string& dir) {
  const auto start = std::chrono::steady_clock::now();
  JsonlWriter diag(dir + "/diagnostics.jsonl");
  RngStream root = RngStream(config.seed);

  IbisConfig ibis_config;
  ibis_config.n_theta = config.n_theta;
  ibis_config.ess_threshold = config.ess_threshold;
  ibis_config.proposal = parse_proposal(config.proposal);
  ibis_config.rw_scale = config.rw_scale;
  ibis_config.n_moves = config.moves_per_rejuvenation;
  ibis_config.n_threads = config.threads;

  IbisState state = ibis_init(model, ibis_config, root.split(kTagSampler));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const IbisStepResult r = ibis_step(state, model, data);
    json rec;
    rec["t"] = state.t;
    rec["ess"] = r.ess;
    rec["resampled"] = r.resampled;
    if (r.resampled) rec["acceptance_rate"] = r.acceptance_rate;
    rec["log_Lhat_t"] = r.log_Lt;
    rec["cum_log_evidence"] = state.log_evidence;
    rec["wall_ms"] = elapsed_ms(start);
    diag.write(rec);
    if (std::find(config.checkpoints.begin(), config.checkpoints.end(), state.t) !=
        config.checkpoints.end()) {
      fs::create_directories(dir + "/checkpoints");
      write_particle_checkpoint(
          dir + "/checkpoints/particles_t" + std::to_string(state.t) + ".csv",
          model.theta_names(), state.cloud.thetas, state.cloud.log_weights, nullptr, 0);
    }
  }

  Vector mean, var;
  cloud_moments(state.cloud.thetas, state.cloud.log_weights, mean, var);
  json summary = summary_base(config, elapsed_ms(start));
  summary["t_final"] = state.t;
  summary["log_evidence"] = state.log_evidence;
  add_moment_fields(summary, model, mean, var);
  write_summary(dir, summary);
}

void run_pmmh(const ExperimentConfig& config, const Model& model, const Dataset& data,
              const std::string& dir) {
  const auto start = std::chrono::steady_clock::now();
  PmmhConfig pc;
  pc.n_iter = config.pmmh_n_iter;
  pc.n_x = config.n_x;
  pc.proposal = parse_proposal(config.proposal);
  pc.init_scale = config.pmmh_init_scale;
  pc.adapt = config.pmmh_adapt;
  pc.adapt_burnin_frac = config.pmmh_burnin_frac;
  pc.thin = config.pmmh_thin;

  RngStream root = RngStream(config.seed);
  const PmmhChain chain = pmmh_run(model, data, pc, root.split(kTagSampler));

  std::ofstream out(dir + "/chain.csv");
  out << "iter";
  for (const auto& n : model.theta_names()) out << "," << n;
  out << ",log_zhat\n";
  for (std::size_t i = 0; i < chain.samples.size(); ++i) {
    out << i * pc.thin;
    for (int k = 0; k < chain.samples[i].size(); ++k)
      out << "," << fmt_double(chain.samples[i][k]);
    out << "," << fmt_double(chain.log_zhats[i]) << "\n";
  }

  // Moments over the post-burn-in chain.
  const std::size_t lo = static_cast<std::size_t>(pc.adapt_burnin_frac *
                                                  static_cast<double>(chain.samples.size()));
  const int d = model.theta_dim();
  Vector mean = Vector::Zero(d), var = Vector::Zero(d);
  const double count = static_cast<double>(chain.samples.size() - lo);
  for (std::size_t i = lo; i < chain.samples.size(); ++i) mean += chain.samples[i];
  mean /= count;
  for (std::size_t i = lo; i < chain.samples.size(); ++i) {
    const Vector c = chain.samples[i] - mean;
    var += c.cwiseProduct(c);
  }
  var /= count;

  json summary = summary_base(config, elapsed_ms(start));
  summary["n_iterations"] = chain.n_iter;
  summary["acceptance_rate"] = chain.acceptance_rate();
  add_moment_fields(summary, model, mean, var);
  write_summary(dir, summary);
}

void run_pf(const ExperimentConfig& config, const Model& model, const Dataset& data,
            const std::string& dir) {
  const auto start = std::chrono::steady_clock::now();
  JsonlWriter diag(dir + "/diagnostics.jsonl");
  const Vector theta = theta_from_config(config, model);
  RngStream root = RngStream(config.seed);
  RngStream sampler = root.split(kTagSampler);

  PFState state = pf_init(model, theta, config.n_x, data.at(0), sampler.split(1),
                          config.store_trajectories);
  if (state.degenerate())
    throw FilterDegenerateError("particle filter degenerate at t=1",
                                {theta.data(), theta.data() + theta.size()}, 1);
  auto emit = [&] {
    json rec;
    rec["t"] = state.t;
    rec["ess"] = ess(state.norm_weights);  // weights normalized: in [1, n_x]
    rec["log_increment"] = state.last_log_increment;
    rec["cum_log_zhat"] = state.log_zhat;
    rec["wall_ms"] = elapsed_ms(start);
    diag.write(rec);
  };
  emit();
  for (std::size_t i = 1; i < data.size(); ++i) {
    pf_step(state, model, data[i], sampler.split(static_cast<std::uint64_t>(i + 1)));
    emit();
  }

  json summary = summary_base(config, elapsed_ms(start));
  summary["t_final"] = state.t;
  summary["log_zhat"] = state.log_zhat;
  summary["degenerate"] = state.degenerate();
  write_summary(dir, summary);
}

void run_kalman(const ExperimentConfig& config, const Model& model, const Dataset& data,
                const std::string& dir) {
  const auto start = std::chrono::steady_clock::now();
  JsonlWriter diag(dir + "/diagnostics.jsonl");
  const Vector theta = theta_from_config(config, model);
  const auto form = model.lgss_form(theta);
  if (!form) throw ConfigError("kalman mode requires a linear-Gaussian model");

  KalmanState state;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double before = state.loglik;
    kalman_step(state, data[i], *form);
    json rec;
    rec["t"] = state.t;
    rec["loglik_increment"] = state.loglik - before;
    rec["cum_loglik"] = state.loglik;
    diag.write(rec);
  }

  json summary = summary_base(config, elapsed_ms(start));
  summary["t_final"] = state.t;
  summary["loglik"] = state.loglik;
  write_summary(dir, summary);
}

}  // namespace

ExperimentConfig parse_config_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse failure: ") + e.what());
  }
  ExperimentConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("model", c.model);
  get("algorithm", c.algorithm);
  get("n_theta", c.n_theta);
  get("n_x", c.n_x);
  get("ess_threshold", c.ess_threshold);
  get("acceptance_threshold", c.acceptance_threshold);
  get("nx_growth_factor", c.nx_growth_factor);
  get("nx_cap", c.nx_cap);
  get("auto_nx", c.auto_nx);
  get("proposal", c.proposal);
  get("rw_scale", c.rw_scale);
  get("moves_per_rejuvenation", c.moves_per_rejuvenation);
  get("store_trajectories", c.store_trajectories);
  get("checkpoints", c.checkpoints);
  get("seed", c.seed);
  get("threads", c.threads);
  get("data", c.data_path);
  get("output", c.output_dir);
  get("data_raw_prices", c.data_raw_prices);
  get("T", c.T);
  get("theta", c.theta);
  get("missing_indices", c.missing_indices);
  get("output_data", c.output_data);
  get("pmmh_n_iter", c.pmmh_n_iter);
  get("pmmh_init_scale", c.pmmh_init_scale);
  get("pmmh_adapt", c.pmmh_adapt);
  get("pmmh_burnin_frac", c.pmmh_burnin_frac);
  get("pmmh_thin", c.pmmh_thin);
  get("record_thresholds", c.record_thresholds);
  if (j.contains("priors"))
    for (const auto& [k, v] : j.at("priors").items()) c.priors[k] = v.get<std::string>();
  if (j.contains("athletics_init_loc_mean"))
    c.athletics_init_loc_mean = j.at("athletics_init_loc_mean").get<double>();
  if (j.contains("athletics_init_loc_sd"))
    c.athletics_init_loc_sd = j.at("athletics_init_loc_sd").get<double>();
  if (j.contains("athletics_init_trend_sd"))
    c.athletics_init_trend_sd = j.at("athletics_init_trend_sd").get<double>();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_json(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["model"] = c.model;
  j["algorithm"] = c.algorithm;
  j["n_theta"] = c.n_theta;
  j["n_x"] = c.n_x;
  j["ess_threshold"] = c.ess_threshold;
  j["acceptance_threshold"] = c.acceptance_threshold;
  j["nx_growth_factor"] = c.nx_growth_factor;
  j["nx_cap"] = c.nx_cap;
  j["auto_nx"] = c.auto_nx;
  j["proposal"] = c.proposal;
  j["rw_scale"] = c.rw_scale;
  j["moves_per_rejuvenation"] = c.moves_per_rejuvenation;
  j["store_trajectories"] = c.store_trajectories;
  j["checkpoints"] = c.checkpoints;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["data"] = c.data_path;
  j["output"] = c.output_dir;
  j["data_raw_prices"] = c.data_raw_prices;
  j["T"] = c.T;
  j["theta"] = c.theta;
  j["missing_indices"] = c.missing_indices;
  j["output_data"] = c.output_data;
  j["pmmh_n_iter"] = c.pmmh_n_iter;
  j["pmmh_init_scale"] = c.pmmh_init_scale;
  j["pmmh_adapt"] = c.pmmh_adapt;
  j["pmmh_burnin_frac"] = c.pmmh_burnin_frac;
  j["pmmh_thin"] = c.pmmh_thin;
  j["record_thresholds"] = c.record_thresholds;
  if (!c.priors.empty()) {
    json p;
    for (const auto& [k, v] : c.priors) p[k] = v;
    j["priors"] = p;
  }
  if (c.athletics_init_loc_mean) j["athletics_init_loc_mean"] = *c.athletics_init_loc_mean;
  if (c.athletics_init_loc_sd) j["athletics_init_loc_sd"] = *c.athletics_init_loc_sd;
  if (c.athletics_init_trend_sd) j["athletics_init_trend_sd"] = *c.athletics_init_trend_sd;
  return j.dump();
}

std::unique_ptr<Model> make_model(const ExperimentConfig& config) {
  std::unique_ptr<Model> model;
  if (config.model == "lg") {
    model = std::make_unique<LinearGaussianModel>();
  } else if (config.model == "sv1") {
    model = std::make_unique<SvModel>(SvModel::Variant::kOneFactor);
  } else if (config.model == "sv2") {
    model = std::make_unique<SvModel>(SvModel::Variant::kTwoFactor);
  } else if (config.model == "sv2-leverage") {
    model = std::make_unique<SvModel>(SvModel::Variant::kTwoFactorLeverage);
  } else if (config.model == "athletics") {
    auto ath = std::make_unique<AthleticsModel>();
    if (config.athletics_init_loc_mean) ath->init_loc_mean = *config.athletics_init_loc_mean;
    if (config.athletics_init_loc_sd) ath->init_loc_sd = *config.athletics_init_loc_sd;
    if (config.athletics_init_trend_sd)
      ath->init_trend_sd = *config.athletics_init_trend_sd;
    model = std::move(ath);
  } else {
    throw ConfigError("unknown model: " + config.model);
  }
  if (!config.priors.empty()) {
    ParamSet* params = params_of(*model);
    for (const auto& [name, spec] : config.priors) {
      try {
        params->set_prior(name, Prior1D::parse(spec));
      } catch (const InvalidParameterError& e) {
        throw ConfigError(std::string("bad prior for ") + name + ": " + e.what());
      }
    }
  }
  return model;
}

Dataset load_dataset(const std::string& path, int obs_dim, bool raw_prices) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open data file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty data file: " + path);

  std::vector<std::vector<std::optional<double>>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::optional<double>> fields;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) {
        fields.push_back(std::nullopt);
      } else {
        fields.push_back(std::stod(item));
      }
    }
    // A line "3,," loses the trailing empty field in getline; pad.
    while (static_cast<int>(fields.size()) < obs_dim + 1) fields.push_back(std::nullopt);
    rows.push_back(std::move(fields));
  }

  Dataset data;
  if (raw_prices) {
    if (obs_dim != 1) throw ConfigError("raw price input requires obs_dim 1");
    // y_t = 10^(5/2) log(s_t / s_{t-1}); the first row seeds the ratio.
    double prev = 0.0;
    bool have_prev = false;
    for (const auto& row : rows) {
      if (!row[1]) throw ConfigError("missing price in raw input: " + path);
      const double s = *row[1];
      if (have_prev) {
        Observation obs;
        obs.y = Vector::Constant(1, std::pow(10.0, 2.5) * std::log(s / prev));
        data.push_back(std::move(obs));
      }
      prev = s;
      have_prev = true;
    }
    return data;
  }

  for (const auto& row : rows) {
    Observation obs;
    int present = 0;
    for (int i = 0; i < obs_dim; ++i)
      if (row[i + 1]) ++present;
    if (present == 0) {
      obs.missing = true;
      obs.y = Vector::Constant(obs_dim, std::nan(""));
    } else if (present == obs_dim) {
      obs.y.resize(obs_dim);
      for (int i = 0; i < obs_dim; ++i) obs.y[i] = *row[i + 1];
    } else {
      throw ConfigError("partially missing observation row in " + path);
    }
    data.push_back(std::move(obs));
  }
  return data;
}

void write_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  const int obs_dim = data.empty() ? 1 : static_cast<int>(data[0].y.size());
  out << "t";
  for (int i = 0; i < obs_dim; ++i) out << ",y" << (i + 1);
  out << "\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << (i + 1);
    for (int k = 0; k < obs_dim; ++k) {
      out << ",";
      if (!data[i].missing) out << fmt_double(data[i].y[k]);
    }
    out << "\n";
  }
}

std::string run_simulate(const ExperimentConfig& config) {
  if (config.T < 0) throw ConfigError("simulate: T must be >= 0");
  if (config.output_data.empty()) throw ConfigError("simulate: output_data required");
  const std::unique_ptr<Model> model = make_model(config);
  RngStream root = RngStream(config.seed);

  Vector theta;
  if (config.theta.empty() && model->theta_dim() > 0) {
    RngStream r = root.split(kTagSimulate).split(0);
    theta = model->prior_sample(r);
  } else {
    theta = theta_from_config(config, *model);
  }

  SimulatedPath path = simulate_model(*model, theta, config.T, root.split(kTagSimulate));
  for (int t : config.missing_indices) {
    if (t < 1 || t > config.T) throw ConfigError("missing index out of range");
    path.data[t - 1].missing = true;
  }
  if (const auto parent = fs::path(config.output_data).parent_path(); !parent.empty())
    fs::create_directories(parent);
  write_dataset(config.output_data, path.data);

  json truth;
  json jt;
  for (int i = 0; i < theta.size(); ++i) jt[model->theta_names()[i]] = theta[i];
  truth["theta"] = jt;
  truth["states"] = path.states;
  truth["T"] = config.T;
  truth["seed"] = config.seed;
  std::ofstream side(config.output_data + ".truth.json");
  side << truth.dump(2) << "\n";
  return config.output_data;
}

std::string run_experiment(const ExperimentConfig& config) {
  validate(config);
  if (config.algorithm == "simulate") {
    run_simulate(config);
    return config.output_data;
  }
  if (config.output_dir.empty()) throw ConfigError("run: output directory required");
  if (config.data_path.empty()) throw ConfigError("run: data path required");
  const std::unique_ptr<Model> model = make_model(config);
  const Dataset data = load_dataset(config.data_path, model->obs_dim(), config.data_raw_prices);
  if (data.empty()) throw ConfigError("run: dataset is empty");
  fs::create_directories(config.output_dir);

  if (config.algorithm == "smc2") {
    run_smc2(config, *model, data, config.output_dir);
  } else if (config.algorithm == "ibis") {
    run_ibis(config, *model, data, config.output_dir);
  } else if (config.algorithm == "pmmh") {
    run_pmmh(config, *model, data, config.output_dir);
  } else if (config.algorithm == "pf") {
    run_pf(config, *model, data, config.output_dir);
  } else if (config.algorithm == "kalman") {
    run_kalman(config, *model, data, config.output_dir);
  } else {
    throw ConfigError("unknown algorithm: " + config.algorithm);
  }
  return config.output_dir;
}

}  // namespace ssm
