#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "thermopinn/rng.hpp"
#include "thermopinn/solver.hpp"

using namespace thermopinn;

namespace {

OperatingProfiles constant_profiles(double k, double theta_a, double theta_to, double t_end) {
  OperatingProfiles p;
  p.times = {0.0, t_end};
  p.load = {k, k};
  p.theta_a = {theta_a, theta_a};
  p.theta_to = {theta_to, theta_to};
  return p;
}

// unit-diffusivity configuration: relaxes fast, so steady state is reached
ThermalConfig unit_cfg(double t_end) {
  ThermalConfig cfg;
  cfg.k = 1.0;
  cfg.rho = 1.0;
  cfg.cp = 1.0;
  cfg.H = 1.0;
  cfg.h_eff = 0.0;
  cfg.p0 = 0.0;
  cfg.mu_rated = 0.0;
  cfg.t_end = t_end;
  return cfg;
}

FieldGrid manufactured_run(const ThermalConfig& cfg, int nx, int nt) {
  OperatingProfiles p = constant_profiles(0.0, 300.0, 300.0, cfg.t_end);
  std::vector<double> ic(std::size_t(nx), 0.0);
  for (int i = 0; i < nx; ++i)
    ic[std::size_t(i)] = manufactured_solution(cfg.H * double(i) / double(nx - 1), 0.0, cfg);
  return solve_crank_nicolson(cfg, p, nx, nt, ic);
}

double manufactured_l2_rel(const ThermalConfig& cfg, const FieldGrid& grid) {
  double num = 0.0, den = 0.0;
  for (int it = 0; it < grid.nt(); ++it) {
    for (int ix = 0; ix < grid.nx(); ++ix) {
      double exact =
          manufactured_solution(grid.xs[std::size_t(ix)], grid.ts[std::size_t(it)], cfg);
      double d = grid.at(ix, it) - exact;
      num += d * d;
      den += exact * exact;
    }
  }
  return std::sqrt(num / den);
}

// error against the exact solution on the decaying mode only (offset removed),
// used for convergence-order estimates
double manufactured_err_l2(const ThermalConfig& cfg, const FieldGrid& grid) {
  double num = 0.0;
  for (int it = 0; it < grid.nt(); ++it)
    for (int ix = 0; ix < grid.nx(); ++ix) {
      double exact =
          manufactured_solution(grid.xs[std::size_t(ix)], grid.ts[std::size_t(it)], cfg);
      double d = grid.at(ix, it) - exact;
      num += d * d;
    }
  return std::sqrt(num / double(grid.cells()));
}

}  // namespace

TEST_CASE("manufactured solution closed-form spot values") {
  ThermalConfig cfg = unit_cfg(1.0);
  CHECK(manufactured_solution(cfg.H / 2, 0.0, cfg) == doctest::Approx(301.0).epsilon(1e-15));
  CHECK(manufactured_solution(0.0, 0.37, cfg) == doctest::Approx(300.0).epsilon(1e-15));
  CHECK(manufactured_solution(cfg.H, 1.93, cfg) == doctest::Approx(300.0).epsilon(1e-12));
  CHECK(manufactured_solution(0.4, 1e6, cfg) == doctest::Approx(300.0).epsilon(1e-12));
}

TEST_CASE("steady 1D conduction reaches the linear profile") {
  ThermalConfig cfg = unit_cfg(10.0);
  OperatingProfiles p = constant_profiles(0.0, 300.0, 320.0, cfg.t_end);
  // start far from steady state on purpose
  std::vector<double> ic(101, 300.0);
  FieldGrid g = solve_crank_nicolson(cfg, p, 101, 201, ic);
  double mid = g.at(50, 200);
  CHECK(mid == doctest::Approx(310.0).epsilon(1e-6 / 310.0));
}

TEST_CASE("manufactured-solution accuracy at 101x201") {
  ThermalConfig cfg = unit_cfg(0.5);
  FieldGrid g = manufactured_run(cfg, 101, 201);
  CHECK(manufactured_l2_rel(cfg, g) < 1e-3);
}

TEST_CASE("spatial convergence order is ~2") {
  ThermalConfig cfg = unit_cfg(0.5);
  // temporal error suppressed with a fine time grid
  double e1 = manufactured_err_l2(cfg, manufactured_run(cfg, 26, 801));
  double e2 = manufactured_err_l2(cfg, manufactured_run(cfg, 51, 801));
  double e3 = manufactured_err_l2(cfg, manufactured_run(cfg, 101, 801));
  double order12 = std::log2(e1 / e2);
  double order23 = std::log2(e2 / e3);
  CHECK(order12 == doctest::Approx(2.0).epsilon(0.1));
  CHECK(order23 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("temporal convergence order is ~2") {
  ThermalConfig cfg = unit_cfg(0.5);
  // spatial error suppressed with a fine space grid; coarse time steps
  double e1 = manufactured_err_l2(cfg, manufactured_run(cfg, 401, 9));
  double e2 = manufactured_err_l2(cfg, manufactured_run(cfg, 401, 17));
  double ratio = e1 / e2;
  CHECK(ratio > 3.0);
  CHECK(ratio < 5.0);
}

TEST_CASE("discrete maximum principle with zero source") {
  ThermalConfig cfg;
  cfg.h_eff = 0.0;
  cfg.p0 = 0.0;
  cfg.mu_rated = 0.0;
  OperatingProfiles p;
  int n = 33;
  for (int i = 0; i < n; ++i) {
    double t = cfg.t_end * double(i) / double(n - 1);
    p.times.push_back(t);
    p.load.push_back(0.0);
    p.theta_a.push_back(293.0 + 5.0 * std::sin(2 * 3.14159265358979 * t / 86400.0));
    p.theta_to.push_back(330.0 + 8.0 * std::sin(2 * 3.14159265358979 * t / 86400.0 + 0.7));
  }
  FieldGrid g = solve_crank_nicolson(cfg, p, 101, 201);
  double lo = 1e300, hi = -1e300;
  for (int it = 0; it < g.nt(); ++it) {
    lo = std::min(lo, std::min(g.at(0, it), g.at(g.nx() - 1, it)));
    hi = std::max(hi, std::max(g.at(0, it), g.at(g.nx() - 1, it)));
  }
  for (int ix = 0; ix < g.nx(); ++ix) {
    lo = std::min(lo, g.at(ix, 0));
    hi = std::max(hi, g.at(ix, 0));
  }
  for (int it = 0; it < g.nt(); ++it)
    for (int ix = 0; ix < g.nx(); ++ix) {
      CHECK(g.at(ix, it) >= lo - 1e-9);
      CHECK(g.at(ix, it) <= hi + 1e-9);
    }
}

TEST_CASE("boundary rows are pinned to the profiles") {
  ThermalConfig cfg;
  cfg.h_eff = 30.0;
  cfg.p0 = 500.0;
  cfg.mu_rated = 2000.0;
  OperatingProfiles p = constant_profiles(0.9, 294.0, 326.0, cfg.t_end);
  FieldGrid g = solve_crank_nicolson(cfg, p, 21, 31);
  for (int it = 0; it < g.nt(); ++it) {
    CHECK(g.at(0, it) == 294.0);
    CHECK(g.at(g.nx() - 1, it) == 326.0);
  }
}

TEST_CASE("steady state with convective source matches the closed form") {
  // k theta'' + S - h (theta - theta_A) = 0 with Dirichlet ends has a
  // cosh/sinh solution; run the solver long enough to relax onto it.
  ThermalConfig cfg;
  cfg.k = 5.0;
  cfg.rho = 1.0;
  cfg.cp = 1.0;
  cfg.H = 1.0;
  cfg.h_eff = 40.0;
  cfg.p0 = 900.0;
  cfg.mu_rated = 0.0;
  cfg.t_end = 20.0;
  double theta_a = 300.0, theta_to = 330.0;
  OperatingProfiles p = constant_profiles(0.0, theta_a, theta_to, cfg.t_end);
  FieldGrid g = solve_crank_nicolson(cfg, p, 201, 2001);

  double lam = std::sqrt(cfg.h_eff / cfg.k);
  double base = theta_a + cfg.p0 / cfg.h_eff;
  // phi = theta - base, phi(0) = -p0/h, phi(H) = theta_to - base
  double phi0 = -cfg.p0 / cfg.h_eff;
  double phiH = theta_to - base;
  auto exact = [&](double x) {
    double b = (phiH - phi0 * std::cosh(lam * cfg.H)) / std::sinh(lam * cfg.H);
    return base + phi0 * std::cosh(lam * x) + b * std::sinh(lam * x);
  };
  for (int ix = 0; ix < g.nx(); ix += 20) {
    double x = g.xs[std::size_t(ix)];
    CHECK(g.at(ix, g.nt() - 1) == doctest::Approx(exact(x)).epsilon(2e-4));
  }
}

TEST_CASE("solver is deterministic") {
  ThermalConfig cfg;
  cfg.h_eff = 80.0;
  cfg.p0 = 600.0;
  cfg.mu_rated = 2500.0;
  OperatingProfiles p = constant_profiles(0.8, 293.0, 324.0, cfg.t_end);
  FieldGrid a = solve_crank_nicolson(cfg, p, 41, 61);
  FieldGrid b = solve_crank_nicolson(cfg, p, 41, 61);
  CHECK(a.theta == b.theta);
}

TEST_CASE("profile range shortfall is an error") {
  ThermalConfig cfg;
  OperatingProfiles p = constant_profiles(1.0, 293.0, 320.0, cfg.t_end * 0.5);
  CHECK_THROWS_AS(solve_crank_nicolson(cfg, p, 11, 11), NumericError);
}

TEST_CASE("error map") {
  ThermalConfig cfg = unit_cfg(1.0);
  OperatingProfiles p = constant_profiles(0.0, 300.0, 310.0, 1.0);
  FieldGrid ref = solve_crank_nicolson(cfg, p, 11, 11);

  SUBCASE("identical fields") {
    ErrorMap em = error_map(ref, ref);
    CHECK(em.summary.l2_rel == 0.0);
    CHECK(em.summary.max_abs == 0.0);
    for (double v : em.signed_error.theta) CHECK(v == 0.0);
  }
  SUBCASE("constant offset") {
    FieldGrid shifted = ref;
    for (auto& v : shifted.theta) v += 1.0;
    ErrorMap em = error_map(shifted, ref);
    CHECK(em.summary.max_abs == doctest::Approx(1.0).epsilon(1e-12));
    double den = 0.0;
    for (double v : ref.theta) den += v * v;
    double expected = std::sqrt(double(ref.cells()) / den);
    CHECK(em.summary.l2_rel == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("grid mismatch throws") {
    FieldGrid other = solve_crank_nicolson(cfg, p, 11, 13);
    CHECK_THROWS_AS(error_map(other, ref), ValidationError);
  }
}
