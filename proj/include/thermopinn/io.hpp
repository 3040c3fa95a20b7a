#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "thermopinn/bayes.hpp"
#include "thermopinn/mlp.hpp"
#include "thermopinn/solver.hpp"
#include "thermopinn/thermal.hpp"

namespace thermopinn::io {

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when an expected upstream artifact is absent (CLI exit code 4).
class MissingInputError : public std::runtime_error {
 public:
  explicit MissingInputError(const std::string& what) : std::runtime_error(what) {}
};

// Shortest round-trip-exact decimal form (17 significant digits).
std::string format_double(double v);

std::uint64_t fnv1a64(const std::string& bytes);
std::uint64_t fnv1a64_file(const std::string& path);

std::string read_text_file(const std::string& path);  // MissingInputError if absent
void write_text_file(const std::string& path, const std::string& content);

// -- profiles CSV: t_s,K_pu,theta_A_K,theta_TO_K --------------------------------

void write_profiles_csv(const std::string& path, const OperatingProfiles& profiles);
OperatingProfiles read_profiles_csv(const std::string& path);

// -- field grid CSV (long format) + sidecar meta ---------------------------------
// columns: x_m,t_s,theta_K[,std_K][,ageing_pu]; row order: t outer, x inner.
// The sidecar <path>.meta records nx, nt, cfg hash and the column list.

void write_grid_csv(const std::string& path, const FieldGrid& grid,
                    std::uint64_t cfg_hash);
FieldGrid read_grid_csv(const std::string& path);

// Signed error grid (+ optional zscore channel passed via std_dev slot).
void write_error_csv(const std::string& path, const FieldGrid& error,
                     const FieldGrid* zscore, std::uint64_t cfg_hash);

// -- checkpoints -------------------------------------------------------------------

void write_mlp_checkpoint(const std::string& path, const MlpParams& params);
MlpParams read_mlp_checkpoint(const std::string& path);

void write_posterior_checkpoint(const std::string& path, const VariationalPosterior& post);
VariationalPosterior read_posterior_checkpoint(const std::string& path);

// -- telemetry ---------------------------------------------------------------------

void write_pinn_history_csv(const std::string& path, const TrainHistory& history);
void write_elbo_history_csv(const std::string& path, const ElboHistory& history);

// -- loss of life ------------------------------------------------------------------

void write_loss_of_life_csv(const std::string& path, const std::vector<double>& xs,
                            const std::vector<double>& equiv_hours);

// -- run manifest ------------------------------------------------------------------

struct Manifest {
  std::string command;
  std::string version;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  long long wall_ms = 0;
  std::vector<std::pair<std::string, std::uint64_t>> outputs;  // name, content hash
};

void write_manifest(const std::string& path, const Manifest& manifest);

}  // namespace thermopinn::io
