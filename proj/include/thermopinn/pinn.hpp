#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "thermopinn/kernels.hpp"
#include "thermopinn/mlp.hpp"
#include "thermopinn/solver.hpp"
#include "thermopinn/thermal.hpp"

namespace thermopinn {

enum class LossNorm { mean, paper_sum };
enum class Sampling { uniform, latin_hypercube };

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  double lambda_0 = 1.0;
  double lambda_bc = 1.0;
  double lambda_r = 1.0;
  double lambda_data = 0.0;
  int n_initial = 64;
  int n_boundary = 128;
  int n_residual = 2048;
  AdamConfig adam;
  int iterations = 2000;
  std::uint64_t seed = 1;
  int resample_every = 500;  // 0 = keep the first sample set for the whole run
  LossNorm loss_norm = LossNorm::mean;
  Sampling sampling = Sampling::latin_hypercube;
  kernels::ExecMode exec = kernels::ExecMode::parallel;

  void validate(const std::string& prefix = "train") const;
};

// Optional measurement for the data loss term; scaled coordinates and target.
struct DataSample {
  double x = 0.0;
  double t = 0.0;
  double u = 0.0;
};

struct PointSets {
  std::vector<CollocationPoint> initial;
  std::vector<CollocationPoint> boundary;
  std::vector<CollocationPoint> residual;
  std::vector<DataSample> data;
};

struct SampleCounts {
  int n_initial = 1;
  int n_boundary = 1;
  int n_residual = 1;
};

// Initial points sit at t~ = 0, boundary points split evenly between x~ = 0
// and x~ = 1, residual points are strictly interior. Reproducible from seed.
PointSets sample_collocation(const SampleCounts& counts, Sampling strategy, std::uint64_t seed);

// Scaled targets for initial points (linear theta_A(0) -> theta_TO(0)).
std::vector<double> initial_targets(std::span<const CollocationPoint> points,
                                    const OperatingProfiles& profiles, const ThermalConfig& cfg);

// Turns point sets into kernel batches: scaled targets for initial/boundary
// points, per-point source constants for residual points.
void fill_point_batches(const PointSets& points, const OperatingProfiles& profiles,
                        const ThermalConfig& cfg, kernels::PointBatch& initial,
                        kernels::PointBatch& boundary, kernels::PointBatch& residual);

// -- reference loss graphs (serial, definitional; the training kernels are
//    checked against these) --------------------------------------------------

ad::Var loss_initial(ad::Tape& tape, std::span<const ad::Var> theta,
                     const std::vector<int>& layer_sizes,
                     std::span<const CollocationPoint> points, std::span<const double> targets);

ad::Var loss_boundary(ad::Tape& tape, std::span<const ad::Var> theta,
                      const std::vector<int>& layer_sizes,
                      std::span<const CollocationPoint> points, const OperatingProfiles& profiles,
                      const ThermalConfig& cfg);

ad::Var loss_residual(ad::Tape& tape, std::span<const ad::Var> theta,
                      const std::vector<int>& layer_sizes,
                      std::span<const CollocationPoint> points, const OperatingProfiles& profiles,
                      const ThermalConfig& cfg, LossNorm norm);

ad::Var loss_data(ad::Tape& tape, std::span<const ad::Var> theta,
                  const std::vector<int>& layer_sizes, std::span<const DataSample> samples);

struct LossGraph {
  ad::Tape tape;
  std::vector<ad::Var> theta;
  ad::Var total, l0, lbc, lr, ldata;
  bool has_data = false;
};

LossGraph build_loss_graph(const MlpParams& net, const PointSets& points, const TrainConfig& tc,
                           const OperatingProfiles& profiles, const ThermalConfig& cfg);

// -- training -----------------------------------------------------------------

struct TrainHistory {
  std::vector<double> total, l0, lbc, lr, ldata;  // ldata empty when term inactive
  std::size_t size() const { return total.size(); }
};

struct AdamState {
  std::vector<double> m, v;
  int t = 0;
  explicit AdamState(std::size_t dim) : m(dim, 0.0), v(dim, 0.0) {}
  void step(const AdamConfig& cfg, std::span<const double> grad, std::span<double> params);
};

// Adam on the composite loss; collocation resampled every resample_every
// iterations from the seed stream. Deterministic given seed (any thread count).
std::pair<MlpParams, TrainHistory> train_pinn(const MlpParams& init, const TrainConfig& tc,
                                              const OperatingProfiles& profiles,
                                              const ThermalConfig& cfg,
                                              std::span<const DataSample> data = {});

}  // namespace thermopinn
