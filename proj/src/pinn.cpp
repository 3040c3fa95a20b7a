#include "thermopinn/pinn.hpp"

#include <cmath>

#include "thermopinn/rng.hpp"

namespace thermopinn {

void TrainConfig::validate(const std::string& prefix) const {
  auto field = [&](const char* name) { return prefix + "." + name; };
  if (lambda_0 < 0 || lambda_bc < 0 || lambda_r < 0 || lambda_data < 0)
    throw ValidationError(field("lambda"), "multipliers must be >= 0");
  if (lambda_0 == 0 && lambda_bc == 0 && lambda_r == 0 && lambda_data == 0)
    throw ValidationError(field("lambda"), "at least one multiplier must be > 0");
  if (n_initial < 1) throw ValidationError(field("n_initial"), "must be >= 1");
  if (n_boundary < 1) throw ValidationError(field("n_boundary"), "must be >= 1");
  if (n_residual < 1) throw ValidationError(field("n_residual"), "must be >= 1");
  if (iterations < 1) throw ValidationError(field("iterations"), "must be >= 1");
  if (resample_every < 0) throw ValidationError(field("resample_every"), "must be >= 0");
  if (!(adam.lr >= 0)) throw ValidationError(field("lr"), "must be >= 0");
  if (!(adam.beta1 >= 0 && adam.beta1 < 1)) throw ValidationError(field("beta1"), "must be in [0,1)");
  if (!(adam.beta2 >= 0 && adam.beta2 < 1)) throw ValidationError(field("beta2"), "must be in [0,1)");
  if (!(adam.eps > 0)) throw ValidationError(field("eps"), "must be > 0");
}

namespace {

// One coordinate per stratum, shuffled; strictly inside (0, 1).
std::vector<double> lhs_1d(int n, rng::Stream& stream) {
  std::vector<int> perm(std::size_t(n), 0);
  for (int i = 0; i < n; ++i) perm[std::size_t(i)] = i;
  for (int i = n - 1; i > 0; --i) {
    int j = int(stream.next_u64() % std::uint64_t(i + 1));
    std::swap(perm[std::size_t(i)], perm[std::size_t(j)]);
  }
  std::vector<double> v(std::size_t(n), 0.0);
  for (int i = 0; i < n; ++i)
    v[std::size_t(i)] = (double(perm[std::size_t(i)]) + stream.uniform_open01()) / double(n);
  return v;
}

std::vector<double> draw_coords(int n, Sampling strategy, rng::Stream& stream) {
  if (strategy == Sampling::latin_hypercube) return lhs_1d(n, stream);
  std::vector<double> v(std::size_t(n), 0.0);
  for (auto& c : v) c = stream.uniform_open01();
  return v;
}

}  // namespace

PointSets sample_collocation(const SampleCounts& counts, Sampling strategy, std::uint64_t seed) {
  if (counts.n_initial < 1 || counts.n_boundary < 1 || counts.n_residual < 1)
    throw ValidationError("collocation", "point counts must be >= 1");
  PointSets sets;

  rng::Stream ic_stream(rng::derive(seed, 1));
  for (double x : draw_coords(counts.n_initial, strategy, ic_stream))
    sets.initial.push_back({x, 0.0, PointKind::initial});

  rng::Stream bc_stream(rng::derive(seed, 2));
  int n_bottom = (counts.n_boundary + 1) / 2;
  int n_top = counts.n_boundary - n_bottom;
  for (double t : draw_coords(n_bottom, strategy, bc_stream))
    sets.boundary.push_back({0.0, t, PointKind::boundary_bottom});
  for (double t : draw_coords(std::max(n_top, 1), strategy, bc_stream)) {
    if (int(sets.boundary.size()) >= counts.n_boundary) break;
    sets.boundary.push_back({1.0, t, PointKind::boundary_top});
  }

  rng::Stream r_stream(rng::derive(seed, 3));
  auto rx = draw_coords(counts.n_residual, strategy, r_stream);
  auto rt = draw_coords(counts.n_residual, strategy, r_stream);
  for (int i = 0; i < counts.n_residual; ++i)
    sets.residual.push_back({rx[std::size_t(i)], rt[std::size_t(i)], PointKind::residual});

  return sets;
}

std::vector<double> initial_targets(std::span<const CollocationPoint> points,
                                    const OperatingProfiles& profiles, const ThermalConfig& cfg) {
  std::vector<double> targets;
  targets.reserve(points.size());
  for (const auto& p : points)
    targets.push_back(scale(cfg, 0.0, 0.0, initial_condition(p.x, profiles)).theta);
  return targets;
}

void fill_point_batches(const PointSets& points, const OperatingProfiles& profiles,
                        const ThermalConfig& cfg, kernels::PointBatch& initial,
                        kernels::PointBatch& boundary, kernels::PointBatch& residual) {
  initial.clear();
  auto targets = initial_targets(points.initial, profiles, cfg);
  for (std::size_t i = 0; i < points.initial.size(); ++i)
    initial.push(points.initial[i].x, 0.0, 0.0, targets[i]);

  boundary.clear();
  for (const auto& p : points.boundary) {
    auto [bottom, top] = boundary_values(p.t * cfg.t_end, profiles);
    double target = scale(cfg, 0.0, 0.0, p.kind == PointKind::boundary_top ? top : bottom).theta;
    boundary.push(p.x, p.t, 0.0, target);
  }

  residual.clear();
  for (const auto& p : points.residual)
    residual.push(p.x, p.t, source_const_part(p.t * cfg.t_end, profiles, cfg), 0.0);
}

// -- reference loss graphs ------------------------------------------------------

namespace {

ad::Var mean_square(ad::Tape& tape, const std::vector<ad::Var>& errors, bool normalize) {
  ad::Var acc = ad::square(errors[0]);
  for (std::size_t i = 1; i < errors.size(); ++i) acc = acc + ad::square(errors[i]);
  return normalize ? acc * (1.0 / double(errors.size())) : acc;
}

}  // namespace

ad::Var loss_initial(ad::Tape& tape, std::span<const ad::Var> theta,
                     const std::vector<int>& layer_sizes,
                     std::span<const CollocationPoint> points, std::span<const double> targets) {
  if (points.empty()) throw ValidationError("loss_initial", "empty point set");
  if (points.size() != targets.size())
    throw ValidationError("loss_initial", "targets must match points");
  std::vector<ad::Var> errors;
  errors.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    ad::Var u = mlp_forward(tape, theta, layer_sizes, tape.input(points[i].x), tape.input(points[i].t));
    errors.push_back(u - targets[i]);
  }
  return mean_square(tape, errors, true);
}

ad::Var loss_boundary(ad::Tape& tape, std::span<const ad::Var> theta,
                      const std::vector<int>& layer_sizes,
                      std::span<const CollocationPoint> points, const OperatingProfiles& profiles,
                      const ThermalConfig& cfg) {
  if (points.empty()) throw ValidationError("loss_boundary", "empty point set");
  std::vector<ad::Var> errors;
  errors.reserve(points.size());
  for (const auto& p : points) {
    auto [bottom, top] = boundary_values(p.t * cfg.t_end, profiles);
    double target = scale(cfg, 0.0, 0.0, p.kind == PointKind::boundary_top ? top : bottom).theta;
    ad::Var u = mlp_forward(tape, theta, layer_sizes, tape.input(p.x), tape.input(p.t));
    errors.push_back(u - target);
  }
  return mean_square(tape, errors, true);
}

ad::Var loss_residual(ad::Tape& tape, std::span<const ad::Var> theta,
                      const std::vector<int>& layer_sizes,
                      std::span<const CollocationPoint> points, const OperatingProfiles& profiles,
                      const ThermalConfig& cfg, LossNorm norm) {
  if (points.empty()) throw ValidationError("loss_residual", "empty point set");
  std::vector<ad::Var> errors;
  errors.reserve(points.size());
  for (const auto& p : points) errors.push_back(pde_residual(tape, theta, layer_sizes, p, profiles, cfg));
  return mean_square(tape, errors, norm == LossNorm::mean);
}

ad::Var loss_data(ad::Tape& tape, std::span<const ad::Var> theta,
                  const std::vector<int>& layer_sizes, std::span<const DataSample> samples) {
  if (samples.empty()) throw ValidationError("loss_data", "empty sample set");
  std::vector<ad::Var> errors;
  errors.reserve(samples.size());
  for (const auto& s : samples) {
    ad::Var u = mlp_forward(tape, theta, layer_sizes, tape.input(s.x), tape.input(s.t));
    errors.push_back(u - s.u);
  }
  return mean_square(tape, errors, true);
}

LossGraph build_loss_graph(const MlpParams& net, const PointSets& points, const TrainConfig& tc,
                           const OperatingProfiles& profiles, const ThermalConfig& cfg) {
  LossGraph g;
  std::vector<double> flat = net.flatten();
  g.theta.reserve(flat.size());
  for (double v : flat) g.theta.push_back(g.tape.input(v));

  auto targets = initial_targets(points.initial, profiles, cfg);
  g.l0 = loss_initial(g.tape, g.theta, net.layer_sizes, points.initial, targets);
  g.lbc = loss_boundary(g.tape, g.theta, net.layer_sizes, points.boundary, profiles, cfg);
  g.lr = loss_residual(g.tape, g.theta, net.layer_sizes, points.residual, profiles, cfg,
                       tc.loss_norm);
  g.total = tc.lambda_0 * g.l0 + tc.lambda_bc * g.lbc + tc.lambda_r * g.lr;
  g.has_data = !points.data.empty();
  if (g.has_data) {
    g.ldata = loss_data(g.tape, g.theta, net.layer_sizes, points.data);
    g.total = g.total + tc.lambda_data * g.ldata;
  } else {
    g.ldata = g.tape.constant(0.0);
  }
  return g;
}

// -- training -------------------------------------------------------------------

void AdamState::step(const AdamConfig& cfg, std::span<const double> grad,
                     std::span<double> params) {
  ++t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t d = 0; d < params.size(); ++d) {
    m[d] = cfg.beta1 * m[d] + (1.0 - cfg.beta1) * grad[d];
    v[d] = cfg.beta2 * v[d] + (1.0 - cfg.beta2) * grad[d] * grad[d];
    params[d] -= cfg.lr * (m[d] / bc1) / (std::sqrt(v[d] / bc2) + cfg.eps);
  }
}

std::pair<MlpParams, TrainHistory> train_pinn(const MlpParams& init, const TrainConfig& tc,
                                              const OperatingProfiles& profiles,
                                              const ThermalConfig& cfg,
                                              std::span<const DataSample> data) {
  tc.validate();
  cfg.validate();
  validate_layer_sizes(init.layer_sizes);

  const std::size_t dim = std::size_t(init.flat_size());
  std::vector<double> theta = init.flatten();

  kernels::PointProgram pred_prog = kernels::compile_prediction(init.layer_sizes);
  kernels::PointProgram res_prog = kernels::compile_residual(init.layer_sizes, cfg);
  kernels::KernelScratch pred_scratch, res_scratch;

  kernels::PointBatch ic_batch, bc_batch, res_batch, data_batch;
  for (const auto& s : data) data_batch.push(s.x, s.t, 0.0, s.u);
  const bool has_data = !data.empty() && tc.lambda_data > 0.0;

  auto resample = [&](int round) {
    PointSets sets = sample_collocation({tc.n_initial, tc.n_boundary, tc.n_residual}, tc.sampling,
                                        rng::derive(tc.seed, 0x636f6c ^ std::uint64_t(round)));
    fill_point_batches(sets, profiles, cfg, ic_batch, bc_batch, res_batch);
  };

  TrainHistory history;
  history.total.reserve(std::size_t(tc.iterations));
  history.l0.reserve(std::size_t(tc.iterations));
  history.lbc.reserve(std::size_t(tc.iterations));
  history.lr.reserve(std::size_t(tc.iterations));
  if (has_data) history.ldata.reserve(std::size_t(tc.iterations));

  std::vector<double> grad(dim);
  AdamState adam(dim);
  int round = 0;

  for (int iter = 0; iter < tc.iterations; ++iter) {
    if (iter == 0 || (tc.resample_every > 0 && iter % tc.resample_every == 0)) resample(round++);

    std::fill(grad.begin(), grad.end(), 0.0);
    const bool mean_norm = tc.loss_norm == LossNorm::mean;

    auto term = [&](const kernels::PointProgram& prog, const kernels::PointBatch& batch,
                    double lambda, double norm, kernels::KernelScratch& scratch) {
      if (lambda == 0.0)
        return kernels::sum_sq_term(prog, batch, theta.data(), scratch, tc.exec) * norm;
      double coeff = lambda * 2.0 * norm;
      return kernels::accumulate_term(prog, batch, coeff, theta.data(), grad.data(), scratch,
                                      tc.exec) *
             norm;
    };

    double l0 = term(pred_prog, ic_batch, tc.lambda_0, 1.0 / double(ic_batch.size()), pred_scratch);
    double lbc =
        term(pred_prog, bc_batch, tc.lambda_bc, 1.0 / double(bc_batch.size()), pred_scratch);
    double lr = term(res_prog, res_batch, tc.lambda_r,
                     mean_norm ? 1.0 / double(res_batch.size()) : 1.0, res_scratch);
    double ldata = 0.0;
    if (has_data)
      ldata = term(pred_prog, data_batch, tc.lambda_data, 1.0 / double(data_batch.size()),
                   pred_scratch);

    double total = tc.lambda_0 * l0 + tc.lambda_bc * lbc + tc.lambda_r * lr;
    if (has_data) total += tc.lambda_data * ldata;
    if (!std::isfinite(total))
      throw NumericError("non-finite loss at iteration " + std::to_string(iter));

    history.total.push_back(total);
    history.l0.push_back(l0);
    history.lbc.push_back(lbc);
    history.lr.push_back(lr);
    if (has_data) history.ldata.push_back(ldata);

    adam.step(tc.adam, grad, theta);
  }

  return {unflatten(init.layer_sizes, theta), std::move(history)};
}

}  // namespace thermopinn
