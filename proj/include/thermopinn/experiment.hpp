#pragma once

#include <cstdint>
#include <string>

#include "thermopinn/ageing.hpp"
#include "thermopinn/bayes.hpp"
#include "thermopinn/pinn.hpp"
#include "thermopinn/thermal.hpp"

namespace thermopinn {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

enum class LoadShape { constant, sinusoidal, step };

// Desk-scale stand-in for measured operating profiles: K(t) per shape, a
// diurnal ambient sinusoid, and a top-oil series from a first-order lag of
// K^2-driven heating above ambient:
//   rise' = (rise_rated * K^2 - rise) / tau,
// integrated exactly per sample interval with K held at the interval start.
struct ProfileSynthConfig {
  double hours = 24.0;
  double dt_s = 300.0;
  LoadShape shape = LoadShape::sinusoidal;
  double load_mean = 0.7;
  double load_amplitude = 0.3;
  double load_period_h = 24.0;
  double load_phase_rad = -1.5707963267948966;
  double step_time_h = 8.0;
  double step_low = 0.4;
  double step_high = 1.0;
  double ambient_mean_k = 293.15;
  double ambient_amplitude_k = 4.0;
  double ambient_phase_rad = -1.5707963267948966;
  double to_rated_rise_k = 30.0;
  double to_tau_s = 9000.0;
  double noise_std_k = 0.0;     // Gaussian measurement noise on temperatures
  double noise_std_load = 0.0;  // Gaussian noise on K (clamped at 0)

  void validate(const std::string& prefix = "profiles") const;
};

OperatingProfiles synthesize_profiles(const ProfileSynthConfig& cfg, std::uint64_t seed);

struct ExperimentConfig {
  std::uint64_t seed = 1;
  struct Paths {
    std::string profiles_csv;  // empty: cmd_generate synthesizes
    std::string out_dir = "out";
  } paths;
  struct Grid {
    int nx = 61;
    int nt = 101;
  } grid;
  ThermalConfig thermal;
  std::vector<int> net_layers = {2, 32, 32, 32, 1};
  TrainConfig train;
  struct Bayes {
    LikelihoodScales scales;
    BayesMultipliers multipliers;
    int n_mc = 2;
    int iterations = 0;  // 0: reuse train.iterations
    int n_predict_samples = 128;
    double rho_init = -5.0;
  } bayes;
  AgeingConfig ageing;
  ProfileSynthConfig profiles;

  void validate() const;
};

// key = value lines with dotted keys, '#' comments. Unknown keys are
// rejected with their line number; unset keys keep documented defaults.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);  // file must exist

// Canonical dump: every key, fixed order, round-trip-exact numbers.
// parse(dump(c)) == c for any valid c.
std::string dump_config(const ExperimentConfig& cfg);

std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace thermopinn
