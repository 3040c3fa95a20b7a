#include "thermopinn/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "thermopinn/mlp.hpp"

namespace thermopinn::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

std::vector<ad::Var> make_theta_leaves(ad::Tape& tape, const std::vector<int>& layer_sizes) {
  int d = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
    d += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
  std::vector<ad::Var> theta;
  theta.reserve(std::size_t(d));
  for (int i = 0; i < d; ++i) theta.push_back(tape.input(0.01));
  return theta;
}

}  // namespace

PointProgram compile_prediction(const std::vector<int>& layer_sizes) {
  PointProgram prog;
  ad::Var x = prog.tape.input(0.5);
  ad::Var t = prog.tape.input(0.5);
  auto theta = make_theta_leaves(prog.tape, layer_sizes);
  ad::Var u = mlp_forward(prog.tape, theta, layer_sizes, x, t);
  prog.x_in = x.index;
  prog.t_in = t.index;
  prog.out = u.index;
  prog.theta_in.reserve(theta.size());
  for (auto& v : theta) prog.theta_in.push_back(v.index);
  return prog;
}

PointProgram compile_residual(const std::vector<int>& layer_sizes, const ThermalConfig& cfg) {
  PointProgram prog;
  ad::Tape& tape = prog.tape;
  ad::Var x = tape.input(0.5);
  ad::Var t = tape.input(0.5);
  ad::Var src = tape.input(0.0);
  auto theta = make_theta_leaves(tape, layer_sizes);
  ad::Var u = mlp_forward(tape, theta, layer_sizes, x, t);
  ad::Var theta_phys = cfg.theta_ref + cfg.theta_scale * u;
  ad::Var r = pde_residual_expr(tape, theta_phys, x, t, src, cfg);

  prog.x_in = x.index;
  prog.t_in = t.index;
  prog.src_in = src.index;
  prog.out = r.index;
  prog.theta_in.reserve(theta.size());
  for (auto& v : theta) prog.theta_in.push_back(v.index);

  // Drop everything the residual does not reach (e.g. adjoint nodes built for
  // parameter leaves during graph differentiation).
  std::vector<std::int32_t*> handles = {&prog.x_in, &prog.t_in, &prog.src_in, &prog.out};
  for (auto& h : prog.theta_in) handles.push_back(&h);
  const std::int32_t roots[1] = {prog.out};
  tape.prune(roots, handles);
  return prog;
}

void PointBatch::clear() {
  x.clear();
  t.clear();
  src.clear();
  target.clear();
}

void PointBatch::push(double px, double pt, double psrc, double ptarget) {
  x.push_back(px);
  t.push_back(pt);
  src.push_back(psrc);
  target.push_back(ptarget);
}

void KernelScratch::prepare(const PointProgram& prog, const double* theta, std::size_t n_blocks,
                            std::size_t dim, bool with_grad) {
  ws.resize(std::size_t(max_threads()));
  for (auto& w : ws) {
    w.values.resize(prog.n_nodes());
    w.adj.resize(prog.n_nodes());
    for (std::size_t d = 0; d < prog.theta_in.size(); ++d) {
      std::int32_t slot = prog.theta_in[d];
      if (slot >= 0) w.values[std::size_t(slot)] = theta[d];
    }
  }
  block_misfit.assign(n_blocks, 0.0);
  if (with_grad) block_grad.assign(n_blocks * dim, 0.0);
}

namespace {

void run_block(const PointProgram& prog, const PointBatch& batch, double coeff, double* grad_block,
               double* misfit_out, std::size_t begin, std::size_t end, Workspace& w) {
  const bool residual = prog.src_in >= 0;
  double sum_sq = 0.0;
  for (std::size_t p = begin; p < end; ++p) {
    w.values[std::size_t(prog.x_in)] = batch.x[p];
    w.values[std::size_t(prog.t_in)] = batch.t[p];
    if (residual) w.values[std::size_t(prog.src_in)] = batch.src[p];
    prog.tape.forward_into(w.values);
    double misfit = w.values[std::size_t(prog.out)] - batch.target[p];
    sum_sq += misfit * misfit;
    if (grad_block != nullptr) {
      prog.tape.adjoints_into(prog.out, coeff * misfit, w.values, w.adj);
      for (std::size_t d = 0; d < prog.theta_in.size(); ++d) {
        std::int32_t slot = prog.theta_in[d];
        if (slot >= 0) grad_block[d] += w.adj[std::size_t(slot)];
      }
    }
  }
  *misfit_out = sum_sq;
}

}  // namespace

double accumulate_term(const PointProgram& prog, const PointBatch& batch, double coeff,
                       const double* theta, double* grad, KernelScratch& scratch, ExecMode mode) {
  const std::size_t n = batch.size();
  if (n == 0) return 0.0;
  const std::size_t dim = prog.theta_in.size();
  const std::size_t n_blocks = (n + kBlockSize - 1) / kBlockSize;
  const bool with_grad = grad != nullptr;
  scratch.prepare(prog, theta, n_blocks, dim, with_grad);

#ifdef _OPENMP
  if (mode == ExecMode::parallel) {
#pragma omp parallel for schedule(static)
    for (std::size_t b = 0; b < n_blocks; ++b) {
      Workspace& w = scratch.ws[std::size_t(omp_get_thread_num())];
      run_block(prog, batch, coeff, with_grad ? scratch.block_grad.data() + b * dim : nullptr,
                &scratch.block_misfit[b], b * kBlockSize, std::min(n, (b + 1) * kBlockSize), w);
    }
  } else
#endif
  {
    (void)mode;
    for (std::size_t b = 0; b < n_blocks; ++b) {
      run_block(prog, batch, coeff, with_grad ? scratch.block_grad.data() + b * dim : nullptr,
                &scratch.block_misfit[b], b * kBlockSize, std::min(n, (b + 1) * kBlockSize),
                scratch.ws[0]);
    }
  }

  // Ordered reduction: block index order, independent of thread scheduling.
  double total = 0.0;
  for (std::size_t b = 0; b < n_blocks; ++b) total += scratch.block_misfit[b];
  if (with_grad) {
    for (std::size_t b = 0; b < n_blocks; ++b) {
      const double* g = scratch.block_grad.data() + b * dim;
      for (std::size_t d = 0; d < dim; ++d) grad[d] += g[d];
    }
  }
  return total;
}

double sum_sq_term(const PointProgram& prog, const PointBatch& batch, const double* theta,
                   KernelScratch& scratch, ExecMode mode) {
  return accumulate_term(prog, batch, 0.0, theta, nullptr, scratch, mode);
}

}  // namespace thermopinn::kernels
