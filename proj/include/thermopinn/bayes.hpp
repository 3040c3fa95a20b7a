#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "thermopinn/pinn.hpp"
#include "thermopinn/rng.hpp"

namespace thermopinn {

double softplus(double rho);
double softplus_inv(double sigma);
double sigmoid(double x);

// Mean-field Gaussian over the flat parameter vector; sigma = softplus(rho)
// keeps every coordinate strictly positive.
struct VariationalPosterior {
  std::vector<int> layer_sizes;
  std::vector<double> mu;
  std::vector<double> rho;

  std::size_t dim() const { return mu.size(); }
  std::vector<double> sigma() const;
};

// Glorot means, constant rho (sigma = softplus(rho_init), small by default).
VariationalPosterior init_posterior(const std::vector<int>& layer_sizes, std::uint64_t seed,
                                    double rho_init = -5.0);

struct LikelihoodScales {
  double sigma_0 = 0.01;   // initial-condition misfit scale (scaled units)
  double sigma_bc = 0.01;  // boundary misfit scale (scaled units)
  double sigma_f = 1.0;    // residual scale (physical residual units)
  void validate(const std::string& prefix = "bayes") const;
};

struct BayesMultipliers {
  double lambda_0 = 1.0;
  double lambda_bc = 1.0;
  double lambda_r = 1.0;
};

// theta = mu + sigma (.) noise
std::vector<double> sample_params(const VariationalPosterior& post,
                                  std::span<const double> noise);

// Standard-normal prior and diagonal-Gaussian variational log densities.
double log_prior(std::span<const double> theta);
double log_variational(std::span<const double> theta, const VariationalPosterior& post);

// Closed-form KL(q || N(0, I)) for the diagonal Gaussian posterior.
double kl_to_standard_normal(const VariationalPosterior& post);

struct PhysicsLogLik {
  double ll_0 = 0.0;
  double ll_bc = 0.0;
  double ll_r = 0.0;
};

// Gaussian log likelihoods of initial / boundary misfits and raw residuals,
// summed over the point sets.
PhysicsLogLik log_likelihood_physics(std::span<const double> theta,
                                     const std::vector<int>& layer_sizes, const PointSets& points,
                                     const LikelihoodScales& scales,
                                     const OperatingProfiles& profiles, const ThermalConfig& cfg);

// -- reference ELBO graph (serial, definitional) -------------------------------

struct ElboGraph {
  ad::Tape tape;
  std::vector<ad::Var> mu;
  std::vector<ad::Var> rho;
  ad::Var loss;  // Monte Carlo ELBO loss, differentiable wrt (mu, rho)
};

// noise holds n_mc * dim standard-normal draws (sample-major).
ElboGraph build_elbo_graph(const VariationalPosterior& post, const PointSets& points,
                           const LikelihoodScales& scales, const BayesMultipliers& mult,
                           std::span<const double> noise, int n_mc,
                           const OperatingProfiles& profiles, const ThermalConfig& cfg);

// -- fast ELBO evaluation (kernel path) ----------------------------------------

struct ElboParts {
  double elbo = 0.0;
  double klqp = 0.0;  // mean of log q - log p
  double nll_0 = 0.0, nll_bc = 0.0, nll_r = 0.0;  // unweighted negative log likelihoods
};

// Persistent programs + scratch for repeated ELBO evaluations on fixed
// collocation sets. Gradients use the same replay kernels as the
// deterministic trainer, chained to (mu, rho) through the reparameterization.
class ElboObjective {
 public:
  ElboObjective(const std::vector<int>& layer_sizes, const LikelihoodScales& scales,
                const BayesMultipliers& mult, const OperatingProfiles& profiles,
                const ThermalConfig& cfg);

  void set_points(const PointSets& points);

  // noise: n_mc * dim draws. grad_mu/grad_rho may be empty (value only);
  // otherwise they are overwritten with the MC-averaged gradients.
  ElboParts evaluate(std::span<const double> mu, std::span<const double> rho,
                     std::span<const double> noise, int n_mc, std::span<double> grad_mu,
                     std::span<double> grad_rho, kernels::ExecMode mode);

 private:
  std::vector<int> layer_sizes_;
  LikelihoodScales scales_;
  BayesMultipliers mult_;
  const OperatingProfiles* profiles_;
  ThermalConfig cfg_;
  kernels::PointProgram pred_prog_, res_prog_;
  kernels::PointBatch ic_batch_, bc_batch_, res_batch_;
  kernels::KernelScratch pred_scratch_, res_scratch_;
  std::vector<double> theta_, gtheta_, sigma_;
};

double elbo_loss_value(const VariationalPosterior& post, const PointSets& points,
                       const LikelihoodScales& scales, const BayesMultipliers& mult, int n_mc,
                       rng::Stream& rng, const OperatingProfiles& profiles,
                       const ThermalConfig& cfg);

// -- training -------------------------------------------------------------------

struct ElboRecord {
  int iteration = 0;
  double elbo = 0.0;
  double klqp = 0.0;
  double nll_0 = 0.0, nll_bc = 0.0, nll_r = 0.0;
};

using ElboHistory = std::vector<ElboRecord>;

// Variational training: reparameterized samples, Monte Carlo ELBO, Adam on
// (mu, rho). Deterministic given seed. Uses tc counts / optimizer /
// iterations / resampling; the PINN loss multipliers in tc are ignored.
std::pair<VariationalPosterior, ElboHistory> train_bpinn(
    const VariationalPosterior& init, const TrainConfig& tc, int n_mc,
    const LikelihoodScales& scales, const BayesMultipliers& mult,
    const OperatingProfiles& profiles, const ThermalConfig& cfg);

// -- posterior predictive --------------------------------------------------------

// Per grid node: n_samples parameter draws from a node-keyed counter stream,
// forward evaluation, Welford mean and unbiased std, unscaled to Kelvin.
// Bitwise identical for any thread count.
FieldGrid posterior_predictive(const VariationalPosterior& post, std::vector<double> xs,
                               std::vector<double> ts, int n_samples, std::uint64_t seed,
                               const ThermalConfig& cfg,
                               kernels::ExecMode mode = kernels::ExecMode::parallel);

struct UncertaintyMaps {
  FieldGrid mean_error;  // theta channel: predictive mean - reference
  FieldGrid zscore;      // theta channel: mean_error / std
  int flagged_cells = 0;                // std == 0 with nonzero error
  double frac_within_3std = 0.0;        // share of cells with |error| <= 3 std
};

UncertaintyMaps uncertainty_error_map(const FieldGrid& pred, const FieldGrid& reference);

}  // namespace thermopinn
