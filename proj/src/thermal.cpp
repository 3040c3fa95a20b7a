#include "thermopinn/thermal.hpp"

#include <algorithm>
#include <cmath>

namespace thermopinn {

void ThermalConfig::validate(const std::string& prefix) const {
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0)) throw ValidationError(prefix + "." + name, "must be > 0");
  };
  auto non_negative = [&](double v, const char* name) {
    if (!(v >= 0.0)) throw ValidationError(prefix + "." + name, "must be >= 0");
  };
  positive(k, "k");
  positive(rho, "rho");
  positive(cp, "cp");
  positive(H, "H");
  positive(theta_scale, "theta_scale");
  positive(t_end, "t_end");
  non_negative(h_eff, "h_eff");
  non_negative(p0, "p0");
  non_negative(mu_rated, "mu_rated");
}

OperatingProfiles::Sample OperatingProfiles::at(double t) const {
  if (times.size() < 2) throw RangeError("profiles need at least 2 samples");
  if (t < times.front() || t > times.back())
    throw RangeError("t=" + std::to_string(t) + " outside profile range [" +
                     std::to_string(times.front()) + ", " + std::to_string(times.back()) + "]");
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t hi = std::min(std::size_t(it - times.begin()), times.size() - 1);
  if (hi == 0) hi = 1;
  std::size_t lo = hi - 1;
  double w = (t - times[lo]) / (times[hi] - times[lo]);
  auto lerp = [&](const std::vector<double>& v) { return v[lo] + w * (v[hi] - v[lo]); };
  return {lerp(load), lerp(theta_a), lerp(theta_to)};
}

void OperatingProfiles::validate(std::vector<std::string>* warnings) const {
  const std::size_t n = times.size();
  if (n < 2) throw ValidationError("profiles", "need at least 2 samples");
  if (load.size() != n || theta_a.size() != n || theta_to.size() != n)
    throw ValidationError("profiles", "series lengths differ");
  for (std::size_t i = 1; i < n; ++i)
    if (!(times[i] > times[i - 1]))
      throw ValidationError("profiles.times", "must be strictly increasing");
  for (std::size_t i = 0; i < n; ++i)
    if (!(load[i] >= 0.0)) throw ValidationError("profiles.K", "load factor must be >= 0");
  if (warnings) {
    auto plausible = [](double theta) { return theta >= 200.0 && theta <= 500.0; };
    for (std::size_t i = 0; i < n; ++i) {
      if (!plausible(theta_a[i]) || !plausible(theta_to[i])) {
        warnings->push_back("temperature outside plausible range 200..500 K at t=" +
                            std::to_string(times[i]) + " s");
        break;
      }
    }
  }
}

Scaled scale(const ThermalConfig& cfg, double x_phys, double t_phys, double theta_phys) {
  return {x_phys / cfg.H, t_phys / cfg.t_end, (theta_phys - cfg.theta_ref) / cfg.theta_scale};
}

Scaled unscale(const ThermalConfig& cfg, double x_scaled, double t_scaled, double theta_scaled) {
  return {x_scaled * cfg.H, t_scaled * cfg.t_end, cfg.theta_ref + cfg.theta_scale * theta_scaled};
}

double heat_source(double /*x*/, double t, double theta_o, const OperatingProfiles& profiles,
                   const ThermalConfig& cfg) {
  auto s = profiles.at(t);
  return cfg.p0 + s.load * s.load * cfg.mu_rated - cfg.h_eff * (theta_o - s.theta_a);
}

double source_const_part(double t_phys, const OperatingProfiles& profiles,
                         const ThermalConfig& cfg) {
  auto s = profiles.at(t_phys);
  return cfg.p0 + s.load * s.load * cfg.mu_rated + cfg.h_eff * s.theta_a;
}

std::pair<double, double> boundary_values(double t, const OperatingProfiles& profiles) {
  auto s = profiles.at(t);
  return {s.theta_a, s.theta_to};
}

double initial_condition(double x_scaled, const OperatingProfiles& profiles) {
  auto s = profiles.at(profiles.t_min());
  return s.theta_a + (s.theta_to - s.theta_a) * x_scaled;
}

ad::Var pde_residual_expr(ad::Tape& tape, ad::Var theta_phys, ad::Var x_scaled, ad::Var t_scaled,
                          ad::Var source_const, const ThermalConfig& cfg) {
  const ad::Var wrt[2] = {x_scaled, t_scaled};
  auto first = ad::derivative_exprs(theta_phys, wrt);
  ad::Var d_dt_scaled = first[1];
  ad::Var d2_dx2_scaled = ad::derivative_expr(first[0], x_scaled);

  // chain rule back to physical coordinates: x = H x~, t = t_end t~
  ad::Var diffusion = d2_dx2_scaled * (1.0 / (cfg.H * cfg.H));
  ad::Var q = cfg.h_eff != 0.0 ? source_const - cfg.h_eff * theta_phys : source_const;
  ad::Var transient = d_dt_scaled * (1.0 / (cfg.alpha() * cfg.t_end));
  return diffusion + q * (1.0 / cfg.k) - transient;
}

namespace {

ad::Var residual_at_point(ad::Tape& tape, std::span<const ad::Var> theta,
                          const std::vector<int>& layer_sizes, const CollocationPoint& p,
                          const OperatingProfiles& profiles, const ThermalConfig& cfg) {
  if (p.kind != PointKind::residual)
    throw ValidationError("collocation", "pde_residual expects a residual-kind point");
  ad::Var x = tape.input(p.x);
  ad::Var t = tape.input(p.t);
  ad::Var u = mlp_forward(tape, theta, layer_sizes, x, t);
  ad::Var theta_phys = cfg.theta_ref + cfg.theta_scale * u;
  double src = source_const_part(p.t * cfg.t_end, profiles, cfg);
  return pde_residual_expr(tape, theta_phys, x, t, tape.constant(src), cfg);
}

}  // namespace

ad::Var pde_residual(ad::Tape& tape, const MlpParams& net, const CollocationPoint& p,
                     const OperatingProfiles& profiles, const ThermalConfig& cfg) {
  std::vector<double> flat = net.flatten();
  std::vector<ad::Var> theta;
  theta.reserve(flat.size());
  for (double v : flat) theta.push_back(tape.constant(v));
  return residual_at_point(tape, theta, net.layer_sizes, p, profiles, cfg);
}

ad::Var pde_residual(ad::Tape& tape, std::span<const ad::Var> theta,
                     const std::vector<int>& layer_sizes, const CollocationPoint& p,
                     const OperatingProfiles& profiles, const ThermalConfig& cfg) {
  return residual_at_point(tape, theta, layer_sizes, p, profiles, cfg);
}

}  // namespace thermopinn
