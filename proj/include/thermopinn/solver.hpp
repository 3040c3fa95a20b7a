#pragma once

#include <optional>
#include <span>
#include <vector>

#include "thermopinn/thermal.hpp"

namespace thermopinn {

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Rectangular (x, t) lattice. theta is stored time-major: theta[it*nx + ix],
// so one time level is contiguous. std_dev / ageing are optional extra
// channels of the same shape (empty when absent).
struct FieldGrid {
  std::vector<double> xs;  // nx uniform coordinates in [0, H]
  std::vector<double> ts;  // nt uniform coordinates in [0, t_end]
  std::vector<double> theta;
  std::vector<double> std_dev;
  std::vector<double> ageing;

  int nx() const { return int(xs.size()); }
  int nt() const { return int(ts.size()); }
  double& at(int ix, int it) { return theta[std::size_t(it) * xs.size() + std::size_t(ix)]; }
  double at(int ix, int it) const { return theta[std::size_t(it) * xs.size() + std::size_t(ix)]; }
  std::size_t cells() const { return xs.size() * ts.size(); }

  bool has_std() const { return !std_dev.empty(); }
  bool has_ageing() const { return !ageing.empty(); }

  void validate() const;  // sizes, uniform strictly increasing axes
};

std::vector<double> linspace(double lo, double hi, int n);

// Crank-Nicolson solve of the 1D heat-diffusion problem with Dirichlet rows
// theta(0,t) = theta_A(t), theta(H,t) = theta_TO(t). The convective part of
// the source is affine in theta and is time-centered implicitly along with
// the diffusion term; load and no-load losses are evaluated at the half
// step. Initial row defaults to the linear theta_A(0) -> theta_TO(0) profile
// unless initial_row is given.
FieldGrid solve_crank_nicolson(const ThermalConfig& cfg, const OperatingProfiles& profiles,
                               int nx, int nt,
                               std::span<const double> initial_row = {});

// Decay-mode closed form: 300 + sin(pi x / H) exp(-alpha pi^2 t / H^2) [K].
double manufactured_solution(double x, double t, const ThermalConfig& cfg);

struct ErrorSummary {
  double l2_rel = 0.0;
  double max_abs = 0.0;
};

struct ErrorMap {
  FieldGrid signed_error;  // theta channel holds predicted - reference
  ErrorSummary summary;
};

ErrorMap error_map(const FieldGrid& predicted, const FieldGrid& reference);

}  // namespace thermopinn
