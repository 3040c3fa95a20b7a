#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "thermopinn/ageing.hpp"
#include "thermopinn/rng.hpp"

using namespace thermopinn;

namespace {
double celsius(double c) { return c + 273.15; }
}  // namespace

TEST_CASE("ageing factor hits the loading-guide anchors exactly") {
  AgeingConfig ac;
  CHECK(ageing_factor(celsius(98.0), ac) == 1.0);
  CHECK(ageing_factor(celsius(104.0), ac) == 2.0);
  CHECK(ageing_factor(celsius(92.0), ac) == 0.5);
}

TEST_CASE("ageing factor is strictly increasing and log-linear") {
  AgeingConfig ac;
  double prev = 0.0;
  for (int i = 0; i <= 40; ++i) {
    double theta_c = 60.0 + 2.0 * i;
    double v = ageing_factor(celsius(theta_c), ac);
    CHECK(v > 0.0);
    if (i > 0) CHECK(v > prev);
    prev = v;
    // log2 V is affine in theta with slope 1/doubling_interval
    double expected_log2 = (theta_c - ac.theta_base_c) / ac.doubling_c;
    CHECK(std::log2(v) == doctest::Approx(expected_log2).epsilon(1e-12));
  }
}

TEST_CASE("configurable constants") {
  AgeingConfig ac;
  ac.theta_base_c = 110.0;
  ac.doubling_c = 7.0;
  CHECK(ageing_factor(celsius(110.0), ac) == 1.0);
  CHECK(ageing_factor(celsius(117.0), ac) == 2.0);
  AgeingConfig bad;
  bad.doubling_c = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("ageing field maps pointwise and preserves monotonicity") {
  AgeingConfig ac;
  FieldGrid grid;
  grid.xs = linspace(0.0, 1.5, 8);
  grid.ts = linspace(0.0, 3600.0, 5);
  grid.theta.resize(grid.cells());
  rng::Stream stream(14);
  for (int it = 0; it < grid.nt(); ++it) {
    double base = 340.0 + stream.uniform(-5.0, 5.0);
    for (int ix = 0; ix < grid.nx(); ++ix)
      grid.at(ix, it) = base + 3.0 * ix + stream.uniform(-0.5, 0.5);
  }

  FieldGrid aged = ageing_field(grid, ac);
  REQUIRE(aged.has_ageing());

  SUBCASE("uniform 98 C gives a uniform unit field") {
    FieldGrid flat = grid;
    for (auto& v : flat.theta) v = celsius(98.0);
    FieldGrid flat_aged = ageing_field(flat, ac);
    for (double v : flat_aged.ageing) CHECK(v == 1.0);
  }

  SUBCASE("ordering follows temperature per column") {
    for (int it = 0; it < grid.nt(); ++it)
      for (int ix = 0; ix + 1 < grid.nx(); ++ix) {
        double t0 = grid.at(ix, it), t1 = grid.at(ix + 1, it);
        double v0 = aged.ageing[std::size_t(it) * 8 + std::size_t(ix)];
        double v1 = aged.ageing[std::size_t(it) * 8 + std::size_t(ix + 1)];
        if (t1 > t0) CHECK(v1 > v0);
        if (t1 < t0) CHECK(v1 < v0);
      }
  }

  SUBCASE("spatial max of V is co-located with the max of theta") {
    for (int it = 0; it < grid.nt(); ++it) {
      int arg_theta = 0, arg_v = 0;
      for (int ix = 1; ix < grid.nx(); ++ix) {
        if (grid.at(ix, it) > grid.at(arg_theta, it)) arg_theta = ix;
        if (aged.ageing[std::size_t(it) * 8 + std::size_t(ix)] >
            aged.ageing[std::size_t(it) * 8 + std::size_t(arg_v)])
          arg_v = ix;
      }
      CHECK(arg_theta == arg_v);
    }
  }

  SUBCASE("commutes with grid restriction") {
    FieldGrid sub;
    sub.xs = grid.xs;
    sub.ts = {grid.ts[1], grid.ts[2], grid.ts[3]};
    sub.theta.assign(grid.theta.begin() + 1 * grid.nx(), grid.theta.begin() + 4 * grid.nx());
    FieldGrid sub_aged = ageing_field(sub, ac);
    for (int it = 0; it < 3; ++it)
      for (int ix = 0; ix < grid.nx(); ++ix)
        CHECK(sub_aged.ageing[std::size_t(it) * 8 + std::size_t(ix)] ==
              aged.ageing[std::size_t(it + 1) * 8 + std::size_t(ix)]);
  }
}

TEST_CASE("loss of life integrals") {
  AgeingConfig ac;

  auto uniform_grid = [&](double v_const, double hours, int nt) {
    FieldGrid g;
    g.xs = linspace(0.0, 1.0, 3);
    g.ts = linspace(0.0, hours * 3600.0, nt);
    g.theta.assign(g.cells(), celsius(98.0));
    g.ageing.assign(g.cells(), v_const);
    return g;
  };

  SUBCASE("V = 1 over 24 h gives 24 equivalent hours") {
    auto hours = loss_of_life(uniform_grid(1.0, 24.0, 25));
    for (double h : hours) CHECK(h == doctest::Approx(24.0).epsilon(1e-12));
  }

  SUBCASE("V = 2 over 12 h gives 24 equivalent hours") {
    auto hours = loss_of_life(uniform_grid(2.0, 12.0, 13));
    for (double h : hours) CHECK(h == doctest::Approx(24.0).epsilon(1e-12));
  }

  SUBCASE("piecewise 1 then 3 accumulates 48 h via additivity over segments") {
    auto first = loss_of_life(uniform_grid(1.0, 12.0, 13));
    auto second = loss_of_life(uniform_grid(3.0, 12.0, 13));
    for (std::size_t i = 0; i < first.size(); ++i)
      CHECK(first[i] + second[i] == doctest::Approx(48.0).epsilon(1e-12));
  }

  SUBCASE("additive over a split horizon to 1e-12 relative") {
    FieldGrid g;
    g.xs = linspace(0.0, 1.0, 4);
    g.ts = linspace(0.0, 7200.0, 9);
    g.theta.resize(g.cells());
    rng::Stream stream(8);
    for (auto& v : g.theta) v = celsius(stream.uniform(80.0, 115.0));
    FieldGrid aged = ageing_field(g, ac);
    auto full = loss_of_life(aged);

    auto slice = [&](int t0, int t1) {
      FieldGrid s;
      s.xs = g.xs;
      s.ts.assign(g.ts.begin() + t0, g.ts.begin() + t1);
      s.theta.assign(g.theta.begin() + t0 * g.nx(), g.theta.begin() + t1 * g.nx());
      s.ageing.assign(aged.ageing.begin() + t0 * g.nx(), aged.ageing.begin() + t1 * g.nx());
      return s;
    };
    auto a = loss_of_life(slice(0, 5));  // knots 0..4
    auto b = loss_of_life(slice(4, 9));  // knots 4..8, shares knot 4
    for (std::size_t i = 0; i < full.size(); ++i)
      CHECK(std::abs(a[i] + b[i] - full[i]) <= 1e-12 * std::abs(full[i]));
  }

  SUBCASE("missing ageing channel is an error") {
    FieldGrid g;
    g.xs = linspace(0.0, 1.0, 3);
    g.ts = linspace(0.0, 3600.0, 3);
    g.theta.assign(g.cells(), 300.0);
    CHECK_THROWS_AS(loss_of_life(g), ValidationError);
  }
}
