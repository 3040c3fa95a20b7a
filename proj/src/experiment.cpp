#include "thermopinn/experiment.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <numbers>

#include "thermopinn/io.hpp"
#include "thermopinn/rng.hpp"

namespace thermopinn {

void ProfileSynthConfig::validate(const std::string& prefix) const {
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0)) throw ValidationError(prefix + "." + name, "must be > 0");
  };
  positive(hours, "hours");
  positive(dt_s, "dt_s");
  positive(load_period_h, "load_period_h");
  positive(to_tau_s, "to_tau_s");
  if (load_mean < 0) throw ValidationError(prefix + ".load_mean", "must be >= 0");
  if (step_low < 0 || step_high < 0)
    throw ValidationError(prefix + ".step", "levels must be >= 0");
  if (noise_std_k < 0 || noise_std_load < 0)
    throw ValidationError(prefix + ".noise", "noise std must be >= 0");
}

OperatingProfiles synthesize_profiles(const ProfileSynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const double pi = std::numbers::pi;
  const double horizon = cfg.hours * 3600.0;
  const int n = int(std::ceil(horizon / cfg.dt_s + 1e-9)) + 1;

  OperatingProfiles p;
  p.times.resize(std::size_t(n));
  p.load.resize(std::size_t(n));
  p.theta_a.resize(std::size_t(n));
  p.theta_to.resize(std::size_t(n));

  for (int i = 0; i < n; ++i) {
    double t = double(i) * cfg.dt_s;
    p.times[std::size_t(i)] = t;
    double k;
    switch (cfg.shape) {
      case LoadShape::constant: k = cfg.load_mean; break;
      case LoadShape::sinusoidal:
        k = cfg.load_mean +
            cfg.load_amplitude * std::sin(2.0 * pi * t / (cfg.load_period_h * 3600.0) +
                                          cfg.load_phase_rad);
        break;
      case LoadShape::step:
        k = t < cfg.step_time_h * 3600.0 ? cfg.step_low : cfg.step_high;
        break;
      default: k = cfg.load_mean; break;
    }
    p.load[std::size_t(i)] = std::max(0.0, k);
    p.theta_a[std::size_t(i)] =
        cfg.ambient_mean_k +
        cfg.ambient_amplitude_k * std::sin(2.0 * pi * t / 86400.0 + cfg.ambient_phase_rad);
  }

  // First-order lag of the K^2-driven rise, exact per interval; starts in
  // equilibrium with the initial load.
  double rise = cfg.to_rated_rise_k * p.load[0] * p.load[0];
  p.theta_to[0] = p.theta_a[0] + rise;
  for (int i = 1; i < n; ++i) {
    double k_prev = p.load[std::size_t(i - 1)];
    double steady = cfg.to_rated_rise_k * k_prev * k_prev;
    double decay = std::exp(-cfg.dt_s / cfg.to_tau_s);
    rise = steady + (rise - steady) * decay;
    p.theta_to[std::size_t(i)] = p.theta_a[std::size_t(i)] + rise;
  }

  if (cfg.noise_std_load > 0.0 || cfg.noise_std_k > 0.0) {
    rng::Stream stream(rng::derive(seed, 0x5e15e));
    for (int i = 0; i < n; ++i) {
      double nk = stream.normal();
      double na = stream.normal();
      double nto = stream.normal();
      if (cfg.noise_std_load > 0.0)
        p.load[std::size_t(i)] = std::max(0.0, p.load[std::size_t(i)] + cfg.noise_std_load * nk);
      if (cfg.noise_std_k > 0.0) {
        p.theta_a[std::size_t(i)] += cfg.noise_std_k * na;
        p.theta_to[std::size_t(i)] += cfg.noise_std_k * nto;
      }
    }
  }
  return p;
}

void ExperimentConfig::validate() const {
  thermal.validate();
  train.validate();
  bayes.scales.validate();
  ageing.validate();
  profiles.validate();
  validate_layer_sizes(net_layers);
  if (grid.nx < 3) throw ValidationError("grid.nx", "must be >= 3");
  if (grid.nt < 3) throw ValidationError("grid.nt", "must be >= 3");
  if (bayes.n_mc < 1) throw ValidationError("bayes.n_mc", "must be >= 1");
  if (bayes.iterations < 0) throw ValidationError("bayes.iterations", "must be >= 0");
  if (bayes.n_predict_samples < 2)
    throw ValidationError("bayes.n_predict_samples", "must be >= 2");
  if (bayes.multipliers.lambda_0 < 0 || bayes.multipliers.lambda_bc < 0 ||
      bayes.multipliers.lambda_r < 0)
    throw ValidationError("bayes.lambda", "multipliers must be >= 0");
  if (paths.out_dir.empty()) throw ValidationError("paths.out_dir", "must not be empty");
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

struct Parser {
  ExperimentConfig cfg;
  std::map<std::string, std::function<void(const std::string&, int)>> setters;
  std::map<std::string, bool> seen;

  // nameplate alternates, folded into densities after parsing
  double p0_watts = -1.0, mu_watts = -1.0, volume_m3 = -1.0;

  double num(const std::string& v, int line) {
    char* end = nullptr;
    double d = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0') throw ConfigError("bad number '" + v + "'", line);
    return d;
  }
  int integer(const std::string& v, int line) {
    double d = num(v, line);
    if (d != std::floor(d)) throw ConfigError("expected integer, got '" + v + "'", line);
    return int(d);
  }

  void add_double(const std::string& key, double* slot) {
    setters[key] = [this, slot](const std::string& v, int line) { *slot = num(v, line); };
  }
  void add_int(const std::string& key, int* slot) {
    setters[key] = [this, slot](const std::string& v, int line) { *slot = integer(v, line); };
  }
  void add_string(const std::string& key, std::string* slot) {
    setters[key] = [slot](const std::string& v, int) { *slot = v; };
  }

  Parser() {
    setters["seed"] = [this](const std::string& v, int line) {
      char* end = nullptr;
      cfg.seed = std::strtoull(v.c_str(), &end, 10);
      if (end == v.c_str() || *end != '\0') throw ConfigError("bad seed '" + v + "'", line);
    };
    add_string("paths.profiles_csv", &cfg.paths.profiles_csv);
    add_string("paths.out_dir", &cfg.paths.out_dir);
    add_int("grid.nx", &cfg.grid.nx);
    add_int("grid.nt", &cfg.grid.nt);

    add_double("thermal.k", &cfg.thermal.k);
    add_double("thermal.rho", &cfg.thermal.rho);
    add_double("thermal.cp", &cfg.thermal.cp);
    add_double("thermal.h_eff", &cfg.thermal.h_eff);
    add_double("thermal.p0", &cfg.thermal.p0);
    add_double("thermal.mu_rated", &cfg.thermal.mu_rated);
    add_double("thermal.p0_watts", &p0_watts);
    add_double("thermal.mu_rated_watts", &mu_watts);
    add_double("thermal.volume_m3", &volume_m3);
    add_double("thermal.H", &cfg.thermal.H);
    add_double("thermal.theta_ref", &cfg.thermal.theta_ref);
    add_double("thermal.theta_scale", &cfg.thermal.theta_scale);
    add_double("thermal.t_end", &cfg.thermal.t_end);

    setters["net.layers"] = [this](const std::string& v, int line) {
      std::vector<int> sizes;
      std::string token;
      for (char c : v + ",") {
        if (c == ',') {
          std::string t = trim(token);
          if (!t.empty()) sizes.push_back(integer(t, line));
          token.clear();
        } else {
          token += c;
        }
      }
      if (sizes.empty()) throw ConfigError("net.layers needs a comma-separated list", line);
      cfg.net_layers = sizes;
    };

    add_double("train.lambda_0", &cfg.train.lambda_0);
    add_double("train.lambda_bc", &cfg.train.lambda_bc);
    add_double("train.lambda_r", &cfg.train.lambda_r);
    add_double("train.lambda_data", &cfg.train.lambda_data);
    add_int("train.n_initial", &cfg.train.n_initial);
    add_int("train.n_boundary", &cfg.train.n_boundary);
    add_int("train.n_residual", &cfg.train.n_residual);
    add_double("train.lr", &cfg.train.adam.lr);
    add_double("train.beta1", &cfg.train.adam.beta1);
    add_double("train.beta2", &cfg.train.adam.beta2);
    add_double("train.eps", &cfg.train.adam.eps);
    add_int("train.iterations", &cfg.train.iterations);
    add_int("train.resample_every", &cfg.train.resample_every);
    setters["train.loss_norm"] = [this](const std::string& v, int line) {
      if (v == "mean")
        cfg.train.loss_norm = LossNorm::mean;
      else if (v == "paper_sum")
        cfg.train.loss_norm = LossNorm::paper_sum;
      else
        throw ConfigError("train.loss_norm must be 'mean' or 'paper_sum'", line);
    };
    setters["train.sampling"] = [this](const std::string& v, int line) {
      if (v == "uniform")
        cfg.train.sampling = Sampling::uniform;
      else if (v == "latin_hypercube")
        cfg.train.sampling = Sampling::latin_hypercube;
      else
        throw ConfigError("train.sampling must be 'uniform' or 'latin_hypercube'", line);
    };

    add_double("bayes.sigma_0", &cfg.bayes.scales.sigma_0);
    add_double("bayes.sigma_bc", &cfg.bayes.scales.sigma_bc);
    add_double("bayes.sigma_f", &cfg.bayes.scales.sigma_f);
    add_double("bayes.lambda_0", &cfg.bayes.multipliers.lambda_0);
    add_double("bayes.lambda_bc", &cfg.bayes.multipliers.lambda_bc);
    add_double("bayes.lambda_r", &cfg.bayes.multipliers.lambda_r);
    add_int("bayes.n_mc", &cfg.bayes.n_mc);
    add_int("bayes.iterations", &cfg.bayes.iterations);
    add_int("bayes.n_predict_samples", &cfg.bayes.n_predict_samples);
    add_double("bayes.rho_init", &cfg.bayes.rho_init);

    add_double("ageing.theta_base_c", &cfg.ageing.theta_base_c);
    add_double("ageing.doubling_c", &cfg.ageing.doubling_c);

    add_double("profiles.hours", &cfg.profiles.hours);
    add_double("profiles.dt_s", &cfg.profiles.dt_s);
    setters["profiles.shape"] = [this](const std::string& v, int line) {
      if (v == "constant")
        cfg.profiles.shape = LoadShape::constant;
      else if (v == "sinusoidal")
        cfg.profiles.shape = LoadShape::sinusoidal;
      else if (v == "step")
        cfg.profiles.shape = LoadShape::step;
      else
        throw ConfigError("profiles.shape must be constant|sinusoidal|step", line);
    };
    add_double("profiles.load_mean", &cfg.profiles.load_mean);
    add_double("profiles.load_amplitude", &cfg.profiles.load_amplitude);
    add_double("profiles.load_period_h", &cfg.profiles.load_period_h);
    add_double("profiles.load_phase_rad", &cfg.profiles.load_phase_rad);
    add_double("profiles.step_time_h", &cfg.profiles.step_time_h);
    add_double("profiles.step_low", &cfg.profiles.step_low);
    add_double("profiles.step_high", &cfg.profiles.step_high);
    add_double("profiles.ambient_mean_K", &cfg.profiles.ambient_mean_k);
    add_double("profiles.ambient_amplitude_K", &cfg.profiles.ambient_amplitude_k);
    add_double("profiles.ambient_phase_rad", &cfg.profiles.ambient_phase_rad);
    add_double("profiles.to_rated_rise_K", &cfg.profiles.to_rated_rise_k);
    add_double("profiles.to_tau_s", &cfg.profiles.to_tau_s);
    add_double("profiles.noise_std_K", &cfg.profiles.noise_std_k);
    add_double("profiles.noise_std_load", &cfg.profiles.noise_std_load);
  }
};

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  Parser parser;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t next = text.find('\n', pos);
    std::string raw =
        next == std::string::npos ? text.substr(pos) : text.substr(pos, next - pos);
    pos = next == std::string::npos ? text.size() + 1 : next + 1;
    ++line_no;

    std::string line = raw;
    std::size_t comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;

    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value', got '" + trim(raw) + "'", line_no);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));

    auto it = parser.setters.find(key);
    if (it == parser.setters.end()) throw ConfigError("unknown key '" + key + "'", line_no);
    it->second(value, line_no);
    parser.seen[key] = true;
  }

  // fold nameplate watts into densities
  auto saw = [&](const char* k) { return parser.seen.count(k) > 0; };
  if (saw("thermal.p0_watts") || saw("thermal.mu_rated_watts")) {
    if (!saw("thermal.volume_m3") || !(parser.volume_m3 > 0.0))
      throw ConfigError("thermal.volume_m3 must be set (> 0) with nameplate watt losses");
    if (saw("thermal.p0_watts")) {
      if (saw("thermal.p0"))
        throw ConfigError("set either thermal.p0 or thermal.p0_watts, not both");
      parser.cfg.thermal.p0 = parser.p0_watts / parser.volume_m3;
    }
    if (saw("thermal.mu_rated_watts")) {
      if (saw("thermal.mu_rated"))
        throw ConfigError("set either thermal.mu_rated or thermal.mu_rated_watts, not both");
      parser.cfg.thermal.mu_rated = parser.mu_watts / parser.volume_m3;
    }
  } else if (saw("thermal.volume_m3")) {
    throw ConfigError("thermal.volume_m3 is only meaningful with nameplate watt losses");
  }

  parser.cfg.validate();
  return parser.cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = io::read_text_file(path);
  } catch (const io::MissingInputError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return parse_config(text);
}

std::string dump_config(const ExperimentConfig& cfg) {
  std::string out;
  auto kv = [&out](const std::string& key, const std::string& value) {
    out += key + " = " + value + "\n";
  };
  auto kd = [&](const std::string& key, double v) { kv(key, io::format_double(v)); };
  auto ki = [&](const std::string& key, int v) { kv(key, std::to_string(v)); };

  kv("seed", std::to_string(cfg.seed));
  kv("paths.profiles_csv", cfg.paths.profiles_csv);
  kv("paths.out_dir", cfg.paths.out_dir);
  ki("grid.nx", cfg.grid.nx);
  ki("grid.nt", cfg.grid.nt);

  kd("thermal.k", cfg.thermal.k);
  kd("thermal.rho", cfg.thermal.rho);
  kd("thermal.cp", cfg.thermal.cp);
  kd("thermal.h_eff", cfg.thermal.h_eff);
  kd("thermal.p0", cfg.thermal.p0);
  kd("thermal.mu_rated", cfg.thermal.mu_rated);
  kd("thermal.H", cfg.thermal.H);
  kd("thermal.theta_ref", cfg.thermal.theta_ref);
  kd("thermal.theta_scale", cfg.thermal.theta_scale);
  kd("thermal.t_end", cfg.thermal.t_end);

  std::string layers;
  for (std::size_t i = 0; i < cfg.net_layers.size(); ++i)
    layers += (i ? "," : "") + std::to_string(cfg.net_layers[i]);
  kv("net.layers", layers);

  kd("train.lambda_0", cfg.train.lambda_0);
  kd("train.lambda_bc", cfg.train.lambda_bc);
  kd("train.lambda_r", cfg.train.lambda_r);
  kd("train.lambda_data", cfg.train.lambda_data);
  ki("train.n_initial", cfg.train.n_initial);
  ki("train.n_boundary", cfg.train.n_boundary);
  ki("train.n_residual", cfg.train.n_residual);
  kd("train.lr", cfg.train.adam.lr);
  kd("train.beta1", cfg.train.adam.beta1);
  kd("train.beta2", cfg.train.adam.beta2);
  kd("train.eps", cfg.train.adam.eps);
  ki("train.iterations", cfg.train.iterations);
  ki("train.resample_every", cfg.train.resample_every);
  kv("train.loss_norm", cfg.train.loss_norm == LossNorm::mean ? "mean" : "paper_sum");
  kv("train.sampling",
     cfg.train.sampling == Sampling::uniform ? "uniform" : "latin_hypercube");

  kd("bayes.sigma_0", cfg.bayes.scales.sigma_0);
  kd("bayes.sigma_bc", cfg.bayes.scales.sigma_bc);
  kd("bayes.sigma_f", cfg.bayes.scales.sigma_f);
  kd("bayes.lambda_0", cfg.bayes.multipliers.lambda_0);
  kd("bayes.lambda_bc", cfg.bayes.multipliers.lambda_bc);
  kd("bayes.lambda_r", cfg.bayes.multipliers.lambda_r);
  ki("bayes.n_mc", cfg.bayes.n_mc);
  ki("bayes.iterations", cfg.bayes.iterations);
  ki("bayes.n_predict_samples", cfg.bayes.n_predict_samples);
  kd("bayes.rho_init", cfg.bayes.rho_init);

  kd("ageing.theta_base_c", cfg.ageing.theta_base_c);
  kd("ageing.doubling_c", cfg.ageing.doubling_c);

  kd("profiles.hours", cfg.profiles.hours);
  kd("profiles.dt_s", cfg.profiles.dt_s);
  const char* shape = cfg.profiles.shape == LoadShape::constant     ? "constant"
                      : cfg.profiles.shape == LoadShape::sinusoidal ? "sinusoidal"
                                                                    : "step";
  kv("profiles.shape", shape);
  kd("profiles.load_mean", cfg.profiles.load_mean);
  kd("profiles.load_amplitude", cfg.profiles.load_amplitude);
  kd("profiles.load_period_h", cfg.profiles.load_period_h);
  kd("profiles.load_phase_rad", cfg.profiles.load_phase_rad);
  kd("profiles.step_time_h", cfg.profiles.step_time_h);
  kd("profiles.step_low", cfg.profiles.step_low);
  kd("profiles.step_high", cfg.profiles.step_high);
  kd("profiles.ambient_mean_K", cfg.profiles.ambient_mean_k);
  kd("profiles.ambient_amplitude_K", cfg.profiles.ambient_amplitude_k);
  kd("profiles.ambient_phase_rad", cfg.profiles.ambient_phase_rad);
  kd("profiles.to_rated_rise_K", cfg.profiles.to_rated_rise_k);
  kd("profiles.to_tau_s", cfg.profiles.to_tau_s);
  kd("profiles.noise_std_K", cfg.profiles.noise_std_k);
  kd("profiles.noise_std_load", cfg.profiles.noise_std_load);
  return out;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) { return io::fnv1a64(dump_config(cfg)); }

}  // namespace thermopinn
