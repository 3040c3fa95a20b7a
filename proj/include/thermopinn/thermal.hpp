#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "thermopinn/autodiff.hpp"
#include "thermopinn/mlp.hpp"

namespace thermopinn {

class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class RangeError : public std::runtime_error {
 public:
  explicit RangeError(const std::string& what) : std::runtime_error(what) {}
};

// Physical constants and nondimensionalization scales. Thermal diffusivity
// is always derived from k, rho, cp, never stored.
struct ThermalConfig {
  double k = 0.12;         // thermal conductivity [W/m K]
  double rho = 870.0;      // oil density [kg/m^3]
  double cp = 1880.0;      // specific heat [J/kg K]
  double h_eff = 0.0;      // effective volumetric convective coefficient [W/m^3 K]
  double p0 = 0.0;         // no-load loss density [W/m^3]
  double mu_rated = 0.0;   // rated load-loss density [W/m^3]
  double H = 1.5;          // tank height [m]
  double theta_ref = 300.0;   // temperature offset [K]
  double theta_scale = 50.0;  // temperature scale [K]
  double t_end = 86400.0;     // horizon [s]

  double alpha() const { return k / (rho * cp); }
  void validate(const std::string& prefix = "thermal") const;
};

// Time series driving source and boundary terms; linear interpolation.
struct OperatingProfiles {
  std::vector<double> times;     // strictly increasing [s]
  std::vector<double> load;      // K(t) [p.u.]
  std::vector<double> theta_a;   // ambient [K]
  std::vector<double> theta_to;  // top-oil [K]

  struct Sample {
    double load, theta_a, theta_to;
  };

  Sample at(double t) const;  // throws RangeError outside [front, back]
  double t_min() const { return times.front(); }
  double t_max() const { return times.back(); }
  std::size_t size() const { return times.size(); }

  // Structural checks throw; physical-plausibility issues are appended to
  // warnings (if given) instead.
  void validate(std::vector<std::string>* warnings = nullptr) const;
};

enum class PointKind { initial, boundary_bottom, boundary_top, residual, data };

// Scaled coordinates in [0,1] x [0,1].
struct CollocationPoint {
  double x = 0.0;
  double t = 0.0;
  PointKind kind = PointKind::residual;
};

struct Scaled {
  double x, t, theta;
};

Scaled scale(const ThermalConfig& cfg, double x_phys, double t_phys, double theta_phys);
Scaled unscale(const ThermalConfig& cfg, double x_scaled, double t_scaled, double theta_scaled);

// q = P0 + K(t)^2 mu - h_eff (theta_O - theta_A(t))  [W/m^3]
double heat_source(double x, double t, double theta_o, const OperatingProfiles& profiles,
                   const ThermalConfig& cfg);

// The theta-independent part of q at physical time t: P0 + K^2 mu + h_eff theta_A.
double source_const_part(double t_phys, const OperatingProfiles& profiles,
                         const ThermalConfig& cfg);

// (theta_A(t), theta_TO(t)) for x = 0 and x = H.
std::pair<double, double> boundary_values(double t, const OperatingProfiles& profiles);

// Initial profile: linear interpolation theta_A(0) -> theta_TO(0) over x in [0,1] scaled.
double initial_condition(double x_scaled, const OperatingProfiles& profiles);

// r = d2(theta)/dx2 + q/k - (1/alpha) d(theta)/dt in physical units, built on
// the graph from a physical-unit temperature expression of the scaled leaves.
ad::Var pde_residual_expr(ad::Tape& tape, ad::Var theta_phys, ad::Var x_scaled, ad::Var t_scaled,
                          ad::Var source_const, const ThermalConfig& cfg);

// Residual of the network surrogate at one collocation point (kind must be
// residual). Parameters enter as constants; the returned node is
// differentiable with respect to the point coordinates.
ad::Var pde_residual(ad::Tape& tape, const MlpParams& net, const CollocationPoint& p,
                     const OperatingProfiles& profiles, const ThermalConfig& cfg);

// Same residual with parameters as tape nodes (training path).
ad::Var pde_residual(ad::Tape& tape, std::span<const ad::Var> theta,
                     const std::vector<int>& layer_sizes, const CollocationPoint& p,
                     const OperatingProfiles& profiles, const ThermalConfig& cfg);

}  // namespace thermopinn
