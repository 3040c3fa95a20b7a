#include "thermopinn/solver.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace thermopinn {

void FieldGrid::validate() const {
  if (nx() < 3 || nt() < 3) throw ValidationError("grid", "nx and nt must be >= 3");
  if (theta.size() != cells()) throw ValidationError("grid", "theta size mismatch");
  if (!std_dev.empty() && std_dev.size() != cells())
    throw ValidationError("grid", "std channel size mismatch");
  if (!ageing.empty() && ageing.size() != cells())
    throw ValidationError("grid", "ageing channel size mismatch");
  auto check_axis = [](const std::vector<double>& axis, const char* name) {
    double step = axis[1] - axis[0];
    if (!(step > 0.0)) throw ValidationError(std::string("grid.") + name, "must be increasing");
    for (std::size_t i = 1; i < axis.size(); ++i) {
      double d = axis[i] - axis[i - 1];
      if (!(d > 0.0) || std::abs(d - step) > 1e-9 * std::max(1.0, std::abs(step)))
        throw ValidationError(std::string("grid.") + name, "must be uniformly spaced");
    }
  };
  check_axis(xs, "xs");
  check_axis(ts, "ts");
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(std::size_t(n), 0.0);
  for (int i = 0; i < n; ++i) v[std::size_t(i)] = lo + (hi - lo) * double(i) / double(n - 1);
  return v;
}

FieldGrid solve_crank_nicolson(const ThermalConfig& cfg, const OperatingProfiles& profiles,
                               int nx, int nt, std::span<const double> initial_row) {
  cfg.validate();
  if (nx < 3 || nt < 3) throw ValidationError("grid", "nx and nt must be >= 3");
  if (profiles.t_min() > 0.0 || profiles.t_max() < cfg.t_end)
    throw NumericError("profiles do not cover [0, t_end]");
  if (!initial_row.empty() && int(initial_row.size()) != nx)
    throw ValidationError("initial_row", "length must equal nx");

  FieldGrid grid;
  grid.xs = linspace(0.0, cfg.H, nx);
  grid.ts = linspace(0.0, cfg.t_end, nt);
  grid.theta.assign(grid.cells(), 0.0);

  if (initial_row.empty()) {
    for (int i = 0; i < nx; ++i)
      grid.at(i, 0) = initial_condition(double(i) / double(nx - 1), profiles);
  } else {
    for (int i = 0; i < nx; ++i) grid.at(i, 0) = initial_row[std::size_t(i)];
  }

  const double dx = cfg.H / double(nx - 1);
  const double dt = cfg.t_end / double(nt - 1);
  const double alpha = cfg.alpha();
  const double r = alpha * dt / (2.0 * dx * dx);
  const double c1 = 1.0 / (cfg.rho * cfg.cp);  // alpha / k
  // The convective term is affine in theta and is time-centered like the
  // diffusion term (half on each side of the step), which keeps the scheme
  // unconditionally stable and second order in time.
  const double beta = dt * c1 * cfg.h_eff;

  // Constant tridiagonal system: (1 + 2r + beta/2) on the diagonal, -r off it.
  // Thomas elimination coefficients are precomputed once.
  const int m = nx - 2;  // interior unknowns
  const double diag = 1.0 + 2.0 * r + 0.5 * beta;
  std::vector<double> inv_piv(std::size_t(m), 0.0);
  std::vector<double> mult(std::size_t(m), 0.0);
  {
    inv_piv[0] = 1.0 / diag;
    for (int i = 1; i < m; ++i) {
      mult[std::size_t(i)] = -r * inv_piv[std::size_t(i - 1)];
      double b = diag + r * mult[std::size_t(i)];  // diag - (a/b_prev) c with a = c = -r
      if (b == 0.0) throw NumericError("singular tridiagonal system");
      inv_piv[std::size_t(i)] = 1.0 / b;
    }
  }

  std::vector<double> rhs(std::size_t(m), 0.0);
  for (int n = 0; n + 1 < nt; ++n) {
    const double t_now = grid.ts[std::size_t(n)];
    const double t_next = grid.ts[std::size_t(n + 1)];
    const double t_half = 0.5 * (t_now + t_next);

    auto half = profiles.at(t_half);
    auto next = profiles.at(t_next);
    const double s_half = cfg.p0 + half.load * half.load * cfg.mu_rated;
    const double source = dt * c1 * s_half + beta * half.theta_a;

    const double bottom_next = next.theta_a;
    const double top_next = next.theta_to;

    const double* prev = grid.theta.data() + std::size_t(n) * std::size_t(nx);
    double* cur = grid.theta.data() + std::size_t(n + 1) * std::size_t(nx);

    for (int i = 1; i <= m; ++i) {
      rhs[std::size_t(i - 1)] = (1.0 - 2.0 * r - 0.5 * beta) * prev[i] +
                                r * (prev[i - 1] + prev[i + 1]) + source;
    }
    rhs[0] += r * bottom_next;
    rhs[std::size_t(m - 1)] += r * top_next;

    // Thomas forward/backward sweep.
    for (int i = 1; i < m; ++i)
      rhs[std::size_t(i)] -= mult[std::size_t(i)] * rhs[std::size_t(i - 1)];
    cur[m] = rhs[std::size_t(m - 1)] * inv_piv[std::size_t(m - 1)];
    for (int i = m - 1; i >= 1; --i)
      cur[i] = (rhs[std::size_t(i - 1)] + r * cur[i + 1]) * inv_piv[std::size_t(i - 1)];

    cur[0] = bottom_next;
    cur[nx - 1] = top_next;
  }
  return grid;
}

double manufactured_solution(double x, double t, const ThermalConfig& cfg) {
  const double pi = std::numbers::pi;
  return 300.0 + std::sin(pi * x / cfg.H) * std::exp(-cfg.alpha() * pi * pi * t / (cfg.H * cfg.H));
}

ErrorMap error_map(const FieldGrid& predicted, const FieldGrid& reference) {
  if (predicted.nx() != reference.nx() || predicted.nt() != reference.nt())
    throw ValidationError("error_map", "grid shapes differ");
  for (int i = 0; i < predicted.nx(); ++i)
    if (std::abs(predicted.xs[std::size_t(i)] - reference.xs[std::size_t(i)]) > 1e-9)
      throw ValidationError("error_map", "x axes differ");
  for (int i = 0; i < predicted.nt(); ++i)
    if (std::abs(predicted.ts[std::size_t(i)] - reference.ts[std::size_t(i)]) > 1e-9)
      throw ValidationError("error_map", "t axes differ");

  ErrorMap out;
  out.signed_error.xs = reference.xs;
  out.signed_error.ts = reference.ts;
  out.signed_error.theta.resize(reference.cells());
  double num = 0.0, den = 0.0, max_abs = 0.0;
  for (std::size_t i = 0; i < reference.cells(); ++i) {
    double d = predicted.theta[i] - reference.theta[i];
    out.signed_error.theta[i] = d;
    num += d * d;
    den += reference.theta[i] * reference.theta[i];
    max_abs = std::max(max_abs, std::abs(d));
  }
  out.summary.max_abs = max_abs;
  out.summary.l2_rel = den > 0.0 ? std::sqrt(num / den)
                                 : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  return out;
}

}  // namespace thermopinn
