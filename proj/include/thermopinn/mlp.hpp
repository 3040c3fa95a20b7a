#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "thermopinn/autodiff.hpp"

namespace thermopinn {

class ModelError : public std::runtime_error {
 public:
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

// Fully connected tanh network mapping scaled (x, t) to one scalar output.
// Flat layout (used by checkpoints, flatten/unflatten and the trainers):
// per layer, weights row-major [out][in], then that layer's biases.
struct MlpParams {
  std::vector<int> layer_sizes;               // {2, hidden..., 1}
  std::vector<std::vector<double>> weights;   // per layer, out*in
  std::vector<std::vector<double>> biases;    // per layer, out

  int flat_size() const;
  std::vector<double> flatten() const;
};

void validate_layer_sizes(const std::vector<int>& layer_sizes);

// Glorot-uniform weights, zero biases, reproducible from seed.
MlpParams init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed);

MlpParams unflatten(const std::vector<int>& layer_sizes, std::span<const double> flat);

// Graph forward pass with parameters as tape nodes (training path).
// theta must hold flat_size() vars in flat layout.
ad::Var mlp_forward(ad::Tape& tape, std::span<const ad::Var> theta,
                    const std::vector<int>& layer_sizes, ad::Var x, ad::Var t);

// Graph forward pass with parameters baked in as constants.
ad::Var mlp_forward(ad::Tape& tape, const MlpParams& params, ad::Var x, ad::Var t);

// Plain numeric forward pass (no tape). Accumulation order matches the graph
// version, so values agree bitwise with a tape replay.
double mlp_eval(const MlpParams& params, double x, double t);
double mlp_eval_flat(std::span<const double> theta, const std::vector<int>& layer_sizes,
                     double x, double t, std::vector<double>& scratch);

}  // namespace thermopinn
