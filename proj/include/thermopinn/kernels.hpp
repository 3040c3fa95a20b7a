#pragma once

#include <cstdint>
#include <vector>

#include "thermopinn/autodiff.hpp"
#include "thermopinn/thermal.hpp"

namespace thermopinn::kernels {

// A frozen scalar program evaluated once per collocation point. The graph
// structure depends only on the architecture and physics constants, never on
// the point, so it is compiled once and replayed against per-thread buffers.
struct PointProgram {
  ad::Tape tape;
  std::int32_t x_in = -1;
  std::int32_t t_in = -1;
  std::int32_t src_in = -1;               // residual programs only
  std::vector<std::int32_t> theta_in;     // flat parameter leaves; -1 if pruned away
  std::int32_t out = -1;

  std::size_t n_nodes() const { return tape.size(); }
};

// out = scaled network output u(x, t).
PointProgram compile_prediction(const std::vector<int>& layer_sizes);

// out = physical-unit PDE residual r(x, t); src leaf carries the
// theta-independent source part for the point. Dead nodes are pruned.
PointProgram compile_residual(const std::vector<int>& layer_sizes, const ThermalConfig& cfg);

struct Workspace {
  std::vector<double> values;
  std::vector<double> adj;
};

// One term's points, structure-of-arrays. src is empty for prediction
// programs; target is 0 for residual points.
struct PointBatch {
  std::vector<double> x, t, src, target;
  std::size_t size() const { return x.size(); }
  void clear();
  void push(double px, double pt, double psrc, double ptarget);
};

enum class ExecMode { serial, parallel };

// Scratch reused across kernel calls; owns per-thread workspaces and
// per-block partial buffers for the deterministic reduction.
struct KernelScratch {
  std::vector<Workspace> ws;
  std::vector<double> block_grad;
  std::vector<double> block_misfit;
  void prepare(const PointProgram& prog, const double* theta, std::size_t n_blocks,
               std::size_t dim, bool with_grad);
};

// Fixed block size: points are processed in index blocks, each block
// accumulates locally, and blocks are reduced in order afterwards, so the
// result is bit-identical for any thread count.
inline constexpr std::size_t kBlockSize = 64;

// Computes sum of (out_p - target_p)^2 over the batch and, when
// grad != nullptr, accumulates coeff * sum_p (out_p - target_p) * d out_p / d theta
// into grad. theta stays bound in the scratch workspaces between calls.
double accumulate_term(const PointProgram& prog, const PointBatch& batch, double coeff,
                       const double* theta, double* grad, KernelScratch& scratch, ExecMode mode);

// Value-only convenience.
double sum_sq_term(const PointProgram& prog, const PointBatch& batch, const double* theta,
                   KernelScratch& scratch, ExecMode mode);

int max_threads();

}  // namespace thermopinn::kernels
