// Compares the three evaluation paths for the composite-loss gradient:
// the definitional whole-graph build, serial kernel replay, and the
// OpenMP-parallel kernel replay. Also times the posterior-predictive map.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <vector>

#include "thermopinn/bayes.hpp"
#include "thermopinn/experiment.hpp"
#include "thermopinn/kernels.hpp"
#include "thermopinn/pinn.hpp"

using namespace thermopinn;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  int n_residual = 512;
  int reps = 20;
  std::vector<int> layers = {2, 16, 16, 1};
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--points") == 0 && i + 1 < argc) n_residual = std::atoi(argv[++i]);
    if (std::strcmp(argv[i], "--reps") == 0 && i + 1 < argc) reps = std::atoi(argv[++i]);
  }

  ThermalConfig cfg;
  cfg.k = 15.0;
  cfg.h_eff = 150.0;
  cfg.p0 = 800.0;
  cfg.mu_rated = 3700.0;
  ProfileSynthConfig synth;
  OperatingProfiles profiles = synthesize_profiles(synth, 7);

  TrainConfig tc;
  tc.n_initial = 32;
  tc.n_boundary = 64;
  tc.n_residual = n_residual;

  MlpParams net = init_mlp(layers, 7);
  const std::size_t dim = std::size_t(net.flat_size());
  std::vector<double> theta = net.flatten();
  std::vector<double> grad(dim, 0.0);

  PointSets sets = sample_collocation({tc.n_initial, tc.n_boundary, tc.n_residual},
                                      Sampling::latin_hypercube, 11);

  kernels::PointProgram pred = kernels::compile_prediction(layers);
  kernels::PointProgram res = kernels::compile_residual(layers, cfg);
  kernels::PointBatch ic, bc, rb;
  fill_point_batches(sets, profiles, cfg, ic, bc, rb);
  kernels::KernelScratch pred_scratch, res_scratch;

  std::printf("network %d-%d-%d-%d, D=%zu; residual program %zu nodes, prediction %zu nodes\n",
              layers[0], layers[1], layers[2], layers[3], dim, res.n_nodes(), pred.n_nodes());
  std::printf("points: %d initial, %d boundary, %d residual; %d reps\n\n", tc.n_initial,
              tc.n_boundary, tc.n_residual, reps);

  auto run_kernels = [&](kernels::ExecMode mode) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double l0 = kernels::accumulate_term(pred, ic, 2.0 / double(ic.size()), theta.data(),
                                         grad.data(), pred_scratch, mode);
    double lbc = kernels::accumulate_term(pred, bc, 2.0 / double(bc.size()), theta.data(),
                                          grad.data(), pred_scratch, mode);
    double lr = kernels::accumulate_term(res, rb, 2.0 / double(rb.size()), theta.data(),
                                         grad.data(), res_scratch, mode);
    return l0 / double(ic.size()) + lbc / double(bc.size()) + lr / double(rb.size());
  };

  // warm up + correctness anchor
  double loss_serial = run_kernels(kernels::ExecMode::serial);
  std::vector<double> grad_serial = grad;
  double loss_parallel = run_kernels(kernels::ExecMode::parallel);
  double max_dev = std::abs(loss_serial - loss_parallel);
  for (std::size_t d = 0; d < dim; ++d)
    max_dev = std::max(max_dev, std::abs(grad_serial[d] - grad[d]));
  std::printf("serial vs parallel max deviation: %.3g (must be 0)\n\n", max_dev);

  auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) run_kernels(kernels::ExecMode::serial);
  double serial_ms = ms_since(t0) / reps;

  t0 = Clock::now();
  for (int r = 0; r < reps; ++r) run_kernels(kernels::ExecMode::parallel);
  double parallel_ms = ms_since(t0) / reps;

  t0 = Clock::now();
  int graph_reps = std::max(1, reps / 10);
  double graph_loss = 0.0;
  for (int r = 0; r < graph_reps; ++r) {
    LossGraph g = build_loss_graph(net, sets, tc, profiles, cfg);
    std::vector<ad::Var> wrt = g.theta;
    auto grads = ad::gradient(g.total, wrt);
    graph_loss = g.total.value();
  }
  double graph_ms = ms_since(t0) / graph_reps;

  std::printf("loss+gradient per iteration (loss serial %.6g, graph %.6g):\n", loss_serial,
              graph_loss);
  std::printf("  reference graph build : %10.3f ms\n", graph_ms);
  std::printf("  kernel replay, serial : %10.3f ms   (%.1fx vs graph)\n", serial_ms,
              graph_ms / serial_ms);
  std::printf("  kernel replay, OpenMP : %10.3f ms   (%.2fx vs serial, %d threads)\n",
              parallel_ms, serial_ms / parallel_ms, kernels::max_threads());

  // posterior predictive map
  VariationalPosterior post = init_posterior(layers, 7);
  auto xs = linspace(0.0, cfg.H, 41);
  auto ts = linspace(0.0, cfg.t_end, 41);
  t0 = Clock::now();
  FieldGrid serial_grid = posterior_predictive(post, xs, ts, 64, 3, cfg,
                                               kernels::ExecMode::serial);
  double pp_serial = ms_since(t0);
  t0 = Clock::now();
  FieldGrid parallel_grid = posterior_predictive(post, xs, ts, 64, 3, cfg,
                                                 kernels::ExecMode::parallel);
  double pp_parallel = ms_since(t0);
  double pp_dev = 0.0;
  for (std::size_t i = 0; i < serial_grid.cells(); ++i)
    pp_dev = std::max(pp_dev, std::abs(serial_grid.theta[i] - parallel_grid.theta[i]));
  std::printf("\nposterior predictive 41x41x64 samples: serial %.1f ms, OpenMP %.1f ms "
              "(max dev %.3g, must be 0)\n",
              pp_serial, pp_parallel, pp_dev);
  return 0;
}
