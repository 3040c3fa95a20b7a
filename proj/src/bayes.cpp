#include "thermopinn/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "thermopinn/rng.hpp"

namespace thermopinn {

namespace {
constexpr double kHalfLn2Pi = 0.91893853320467274178;  // ln(2 pi) / 2
}

double softplus(double rho) {
  // stable on both tails
  return rho > 0.0 ? rho + std::log1p(std::exp(-rho)) : std::log1p(std::exp(rho));
}

double softplus_inv(double sigma) {
  // inverse of softplus; sigma > 0
  return sigma > 20.0 ? sigma : std::log(std::expm1(sigma));
}

double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

std::vector<double> VariationalPosterior::sigma() const {
  std::vector<double> s(rho.size());
  for (std::size_t d = 0; d < rho.size(); ++d) s[d] = softplus(rho[d]);
  return s;
}

VariationalPosterior init_posterior(const std::vector<int>& layer_sizes, std::uint64_t seed,
                                    double rho_init) {
  VariationalPosterior post;
  post.layer_sizes = layer_sizes;
  post.mu = init_mlp(layer_sizes, seed).flatten();
  post.rho.assign(post.mu.size(), rho_init);
  return post;
}

void LikelihoodScales::validate(const std::string& prefix) const {
  if (!(sigma_0 > 0)) throw ValidationError(prefix + ".sigma_0", "must be > 0");
  if (!(sigma_bc > 0)) throw ValidationError(prefix + ".sigma_bc", "must be > 0");
  if (!(sigma_f > 0)) throw ValidationError(prefix + ".sigma_f", "must be > 0");
}

std::vector<double> sample_params(const VariationalPosterior& post,
                                  std::span<const double> noise) {
  if (noise.size() != post.dim())
    throw ValidationError("sample_params", "noise length must equal posterior dimension");
  std::vector<double> theta(post.dim());
  for (std::size_t d = 0; d < post.dim(); ++d)
    theta[d] = post.mu[d] + softplus(post.rho[d]) * noise[d];
  return theta;
}

double log_prior(std::span<const double> theta) {
  double acc = 0.0;
  for (double v : theta) acc += -kHalfLn2Pi - 0.5 * v * v;
  return acc;
}

double log_variational(std::span<const double> theta, const VariationalPosterior& post) {
  if (theta.size() != post.dim())
    throw ValidationError("log_variational", "dimension mismatch");
  double acc = 0.0;
  for (std::size_t d = 0; d < theta.size(); ++d) {
    double sigma = softplus(post.rho[d]);
    double z = (theta[d] - post.mu[d]) / sigma;
    acc += -kHalfLn2Pi - std::log(sigma) - 0.5 * z * z;
  }
  return acc;
}

double kl_to_standard_normal(const VariationalPosterior& post) {
  double acc = 0.0;
  for (std::size_t d = 0; d < post.dim(); ++d) {
    double sigma = softplus(post.rho[d]);
    acc += -std::log(sigma) + 0.5 * (sigma * sigma + post.mu[d] * post.mu[d] - 1.0);
  }
  return acc;
}

PhysicsLogLik log_likelihood_physics(std::span<const double> theta,
                                     const std::vector<int>& layer_sizes, const PointSets& points,
                                     const LikelihoodScales& scales,
                                     const OperatingProfiles& profiles, const ThermalConfig& cfg) {
  scales.validate();
  if (points.initial.empty() || points.boundary.empty() || points.residual.empty())
    throw ValidationError("log_likelihood_physics", "point sets must be nonempty");

  kernels::PointProgram pred = kernels::compile_prediction(layer_sizes);
  kernels::PointProgram res = kernels::compile_residual(layer_sizes, cfg);
  kernels::PointBatch ic, bc, rb;
  fill_point_batches(points, profiles, cfg, ic, bc, rb);
  kernels::KernelScratch scratch;

  auto term = [&](const kernels::PointProgram& prog, const kernels::PointBatch& batch,
                  double sigma) {
    double sum_sq = kernels::sum_sq_term(prog, batch, theta.data(), scratch,
                                         kernels::ExecMode::serial);
    return -double(batch.size()) * (kHalfLn2Pi + std::log(sigma)) -
           sum_sq / (2.0 * sigma * sigma);
  };

  PhysicsLogLik ll;
  ll.ll_0 = term(pred, ic, scales.sigma_0);
  ll.ll_bc = term(pred, bc, scales.sigma_bc);
  ll.ll_r = term(res, rb, scales.sigma_f);
  return ll;
}

// -- reference ELBO graph ---------------------------------------------------------

namespace {

ad::Var softplus_expr(ad::Tape& tape, ad::Var rho) {
  // branch chosen from the build-time value; both branches share gradients
  if (rho.value() > 20.0) return rho + ad::log(1.0 + ad::exp(-rho));
  return ad::log(1.0 + ad::exp(rho));
}

}  // namespace

ElboGraph build_elbo_graph(const VariationalPosterior& post, const PointSets& points,
                           const LikelihoodScales& scales, const BayesMultipliers& mult,
                           std::span<const double> noise, int n_mc,
                           const OperatingProfiles& profiles, const ThermalConfig& cfg) {
  scales.validate();
  if (n_mc < 1) throw ValidationError("bayes.n_mc", "must be >= 1");
  const std::size_t dim = post.dim();
  if (noise.size() != std::size_t(n_mc) * dim)
    throw ValidationError("build_elbo_graph", "noise must hold n_mc * dim draws");

  ElboGraph g;
  ad::Tape& tape = g.tape;
  g.mu.reserve(dim);
  g.rho.reserve(dim);
  for (double v : post.mu) g.mu.push_back(tape.input(v));
  for (double v : post.rho) g.rho.push_back(tape.input(v));
  std::vector<ad::Var> sigma;
  sigma.reserve(dim);
  for (std::size_t d = 0; d < dim; ++d) sigma.push_back(softplus_expr(tape, g.rho[d]));

  auto targets = initial_targets(points.initial, profiles, cfg);

  ad::Var loss_acc = tape.constant(0.0);
  for (int s = 0; s < n_mc; ++s) {
    const double* eps = noise.data() + std::size_t(s) * dim;
    std::vector<ad::Var> theta;
    theta.reserve(dim);
    for (std::size_t d = 0; d < dim; ++d) theta.push_back(g.mu[d] + sigma[d] * eps[d]);

    // log q(theta|phi) - log p(theta); the -0.5 ln 2pi constants cancel
    ad::Var klqp = tape.constant(0.0);
    for (std::size_t d = 0; d < dim; ++d) {
      ad::Var z = (theta[d] - g.mu[d]) / sigma[d];
      klqp = klqp - ad::log(sigma[d]) - 0.5 * ad::square(z) + 0.5 * ad::square(theta[d]);
    }

    auto gaussian_ll = [&](const std::vector<ad::Var>& errors, double sigma_term) {
      ad::Var ss = ad::square(errors[0]);
      for (std::size_t i = 1; i < errors.size(); ++i) ss = ss + ad::square(errors[i]);
      double c = -double(errors.size()) * (kHalfLn2Pi + std::log(sigma_term));
      return c + ss * (-1.0 / (2.0 * sigma_term * sigma_term));
    };

    std::vector<ad::Var> e0;
    for (std::size_t i = 0; i < points.initial.size(); ++i) {
      const auto& p = points.initial[i];
      ad::Var u = mlp_forward(tape, theta, post.layer_sizes, tape.input(p.x), tape.input(p.t));
      e0.push_back(u - targets[i]);
    }
    std::vector<ad::Var> ebc;
    for (const auto& p : points.boundary) {
      auto [bottom, top] = boundary_values(p.t * cfg.t_end, profiles);
      double target = scale(cfg, 0, 0, p.kind == PointKind::boundary_top ? top : bottom).theta;
      ad::Var u = mlp_forward(tape, theta, post.layer_sizes, tape.input(p.x), tape.input(p.t));
      ebc.push_back(u - target);
    }
    std::vector<ad::Var> er;
    for (const auto& p : points.residual)
      er.push_back(pde_residual(tape, theta, post.layer_sizes, p, profiles, cfg));

    ad::Var sample_loss = klqp - mult.lambda_0 * gaussian_ll(e0, scales.sigma_0) -
                          mult.lambda_bc * gaussian_ll(ebc, scales.sigma_bc) -
                          mult.lambda_r * gaussian_ll(er, scales.sigma_f);
    loss_acc = loss_acc + sample_loss;
  }
  g.loss = loss_acc * (1.0 / double(n_mc));
  return g;
}

// -- fast ELBO objective ----------------------------------------------------------

ElboObjective::ElboObjective(const std::vector<int>& layer_sizes, const LikelihoodScales& scales,
                             const BayesMultipliers& mult, const OperatingProfiles& profiles,
                             const ThermalConfig& cfg)
    : layer_sizes_(layer_sizes),
      scales_(scales),
      mult_(mult),
      profiles_(&profiles),
      cfg_(cfg),
      pred_prog_(kernels::compile_prediction(layer_sizes)),
      res_prog_(kernels::compile_residual(layer_sizes, cfg)) {
  scales_.validate();
  validate_layer_sizes(layer_sizes_);
}

void ElboObjective::set_points(const PointSets& points) {
  fill_point_batches(points, *profiles_, cfg_, ic_batch_, bc_batch_, res_batch_);
}

ElboParts ElboObjective::evaluate(std::span<const double> mu, std::span<const double> rho,
                                  std::span<const double> noise, int n_mc,
                                  std::span<double> grad_mu, std::span<double> grad_rho,
                                  kernels::ExecMode mode) {
  const std::size_t dim = mu.size();
  if (rho.size() != dim) throw ValidationError("elbo", "mu/rho dimension mismatch");
  if (n_mc < 1) throw ValidationError("bayes.n_mc", "must be >= 1");
  if (noise.size() != std::size_t(n_mc) * dim)
    throw ValidationError("elbo", "noise must hold n_mc * dim draws");
  const bool with_grad = !grad_mu.empty();
  if (with_grad && (grad_mu.size() != dim || grad_rho.size() != dim))
    throw ValidationError("elbo", "gradient buffers must match dimension");

  theta_.resize(dim);
  gtheta_.resize(dim);
  sigma_.resize(dim);
  for (std::size_t d = 0; d < dim; ++d) sigma_[d] = softplus(rho[d]);
  if (with_grad) {
    std::fill(grad_mu.begin(), grad_mu.end(), 0.0);
    std::fill(grad_rho.begin(), grad_rho.end(), 0.0);
  }

  const double inv_n = 1.0 / double(n_mc);
  ElboParts parts;

  for (int s = 0; s < n_mc; ++s) {
    const double* eps = noise.data() + std::size_t(s) * dim;
    for (std::size_t d = 0; d < dim; ++d) theta_[d] = mu[d] + sigma_[d] * eps[d];
    std::fill(gtheta_.begin(), gtheta_.end(), 0.0);

    auto term = [&](const kernels::PointProgram& prog, const kernels::PointBatch& batch,
                    double lambda, double sigma, kernels::KernelScratch& scratch) {
      double sum_sq;
      if (with_grad && lambda > 0.0) {
        sum_sq = kernels::accumulate_term(prog, batch, lambda / (sigma * sigma), theta_.data(),
                                          gtheta_.data(), scratch, mode);
      } else {
        sum_sq = kernels::sum_sq_term(prog, batch, theta_.data(), scratch, mode);
      }
      return -double(batch.size()) * (kHalfLn2Pi + std::log(sigma)) -
             sum_sq / (2.0 * sigma * sigma);
    };

    double ll0 = term(pred_prog_, ic_batch_, mult_.lambda_0, scales_.sigma_0, pred_scratch_);
    double llbc = term(pred_prog_, bc_batch_, mult_.lambda_bc, scales_.sigma_bc, pred_scratch_);
    double llr = term(res_prog_, res_batch_, mult_.lambda_r, scales_.sigma_f, res_scratch_);

    double klqp = 0.0;
    for (std::size_t d = 0; d < dim; ++d)
      klqp += -std::log(sigma_[d]) - 0.5 * eps[d] * eps[d] + 0.5 * theta_[d] * theta_[d];

    double sample_loss =
        klqp - mult_.lambda_0 * ll0 - mult_.lambda_bc * llbc - mult_.lambda_r * llr;

    parts.elbo += inv_n * sample_loss;
    parts.klqp += inv_n * klqp;
    parts.nll_0 += inv_n * -ll0;
    parts.nll_bc += inv_n * -llbc;
    parts.nll_r += inv_n * -llr;

    if (with_grad) {
      // gtheta_ holds d(physics part)/d(theta); the KL part is closed form.
      for (std::size_t d = 0; d < dim; ++d) {
        double g_theta = gtheta_[d] + theta_[d];
        grad_mu[d] += inv_n * g_theta;
        grad_rho[d] += inv_n * sigmoid(rho[d]) * (g_theta * eps[d] - 1.0 / sigma_[d]);
      }
    }
  }
  return parts;
}

double elbo_loss_value(const VariationalPosterior& post, const PointSets& points,
                       const LikelihoodScales& scales, const BayesMultipliers& mult, int n_mc,
                       rng::Stream& rng, const OperatingProfiles& profiles,
                       const ThermalConfig& cfg) {
  ElboObjective objective(post.layer_sizes, scales, mult, profiles, cfg);
  objective.set_points(points);
  std::vector<double> noise(std::size_t(n_mc) * post.dim());
  for (auto& v : noise) v = rng.normal();
  return objective
      .evaluate(post.mu, post.rho, noise, n_mc, {}, {}, kernels::ExecMode::serial)
      .elbo;
}

// -- training ----------------------------------------------------------------------

std::pair<VariationalPosterior, ElboHistory> train_bpinn(
    const VariationalPosterior& init, const TrainConfig& tc, int n_mc,
    const LikelihoodScales& scales, const BayesMultipliers& mult,
    const OperatingProfiles& profiles, const ThermalConfig& cfg) {
  cfg.validate();
  scales.validate();
  if (n_mc < 1) throw ValidationError("bayes.n_mc", "must be >= 1");
  if (tc.iterations < 1) throw ValidationError("train.iterations", "must be >= 1");
  if (tc.n_initial < 1 || tc.n_boundary < 1 || tc.n_residual < 1)
    throw ValidationError("train", "point counts must be >= 1");
  if (mult.lambda_0 < 0 || mult.lambda_bc < 0 || mult.lambda_r < 0)
    throw ValidationError("bayes.lambda", "multipliers must be >= 0");

  const std::size_t dim = init.dim();
  std::vector<double> w(2 * dim);
  std::copy(init.mu.begin(), init.mu.end(), w.begin());
  std::copy(init.rho.begin(), init.rho.end(), w.begin() + std::ptrdiff_t(dim));

  ElboObjective objective(init.layer_sizes, scales, mult, profiles, cfg);
  AdamState adam(2 * dim);
  std::vector<double> grad(2 * dim);
  std::vector<double> noise(std::size_t(n_mc) * dim);
  ElboHistory history;
  history.reserve(std::size_t(tc.iterations));

  const std::uint64_t noise_seed = rng::derive(tc.seed, 0xe15b0);
  int round = 0;

  for (int iter = 0; iter < tc.iterations; ++iter) {
    if (iter == 0 || (tc.resample_every > 0 && iter % tc.resample_every == 0)) {
      PointSets sets = sample_collocation({tc.n_initial, tc.n_boundary, tc.n_residual},
                                          tc.sampling, rng::derive(tc.seed, 0x636f6c ^ std::uint64_t(round)));
      objective.set_points(sets);
      ++round;
    }

    rng::Stream noise_stream(rng::derive(noise_seed, std::uint64_t(iter)));
    for (auto& v : noise) v = noise_stream.normal();

    std::span<double> gmu(grad.data(), dim);
    std::span<double> grho(grad.data() + dim, dim);
    ElboParts parts = objective.evaluate({w.data(), dim}, {w.data() + dim, dim}, noise, n_mc,
                                         gmu, grho, tc.exec);
    if (!std::isfinite(parts.elbo))
      throw NumericError("non-finite ELBO at iteration " + std::to_string(iter));

    history.push_back({iter, parts.elbo, parts.klqp, parts.nll_0, parts.nll_bc, parts.nll_r});
    adam.step(tc.adam, grad, w);
  }

  VariationalPosterior out;
  out.layer_sizes = init.layer_sizes;
  out.mu.assign(w.begin(), w.begin() + std::ptrdiff_t(dim));
  out.rho.assign(w.begin() + std::ptrdiff_t(dim), w.end());
  return {std::move(out), std::move(history)};
}

// -- posterior predictive -------------------------------------------------------------

FieldGrid posterior_predictive(const VariationalPosterior& post, std::vector<double> xs,
                               std::vector<double> ts, int n_samples, std::uint64_t seed,
                               const ThermalConfig& cfg, kernels::ExecMode mode) {
  if (n_samples < 2) throw ValidationError("n_samples", "must be >= 2");
  const std::size_t dim = post.dim();
  const std::vector<double> sigma = post.sigma();

  FieldGrid grid;
  grid.xs = std::move(xs);
  grid.ts = std::move(ts);
  grid.theta.assign(grid.cells(), 0.0);
  grid.std_dev.assign(grid.cells(), 0.0);

  const std::int64_t n_cells = std::int64_t(grid.cells());
  const int nx = grid.nx();
  const std::uint64_t base = rng::derive(seed, 0x9081);

  auto run_cell = [&](std::int64_t cell, std::vector<double>& theta,
                      std::vector<double>& scratch) {
    const int ix = int(cell % nx);
    const int it = int(cell / nx);
    const double x_scaled = grid.xs[std::size_t(ix)] / cfg.H;
    const double t_scaled = grid.ts[std::size_t(it)] / cfg.t_end;
    rng::Stream stream(rng::derive(base, std::uint64_t(cell)));
    double mean = 0.0, m2 = 0.0;
    for (int k = 1; k <= n_samples; ++k) {
      for (std::size_t d = 0; d < dim; ++d) theta[d] = post.mu[d] + sigma[d] * stream.normal();
      double u = mlp_eval_flat(theta, post.layer_sizes, x_scaled, t_scaled, scratch);
      double value = cfg.theta_ref + cfg.theta_scale * u;
      double delta = value - mean;
      mean += delta / double(k);
      m2 += delta * (value - mean);
    }
    grid.theta[std::size_t(cell)] = mean;
    grid.std_dev[std::size_t(cell)] = std::sqrt(m2 / double(n_samples - 1));
  };

#ifdef _OPENMP
  if (mode == kernels::ExecMode::parallel) {
#pragma omp parallel
    {
      std::vector<double> theta(dim), scratch;
#pragma omp for schedule(static)
      for (std::int64_t cell = 0; cell < n_cells; ++cell) run_cell(cell, theta, scratch);
    }
    return grid;
  }
#endif
  (void)mode;
  std::vector<double> theta(dim), scratch;
  for (std::int64_t cell = 0; cell < n_cells; ++cell) run_cell(cell, theta, scratch);
  return grid;
}

UncertaintyMaps uncertainty_error_map(const FieldGrid& pred, const FieldGrid& reference) {
  if (!pred.has_std()) throw ValidationError("uncertainty_error_map", "prediction lacks std");
  ErrorMap base = error_map(pred, reference);

  UncertaintyMaps maps;
  maps.mean_error = std::move(base.signed_error);
  maps.zscore.xs = reference.xs;
  maps.zscore.ts = reference.ts;
  maps.zscore.theta.resize(reference.cells());
  std::size_t within = 0;
  for (std::size_t i = 0; i < reference.cells(); ++i) {
    double err = maps.mean_error.theta[i];
    double sd = pred.std_dev[i];
    double z;
    if (err == 0.0) {
      z = 0.0;
    } else if (sd > 0.0) {
      z = err / sd;
    } else {
      z = std::copysign(std::numeric_limits<double>::infinity(), err);
      ++maps.flagged_cells;
    }
    maps.zscore.theta[i] = z;
    if (std::abs(err) <= 3.0 * sd) ++within;
  }
  maps.frac_within_3std = double(within) / double(reference.cells());
  return maps;
}

}  // namespace thermopinn
