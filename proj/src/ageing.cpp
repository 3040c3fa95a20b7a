#include "thermopinn/ageing.hpp"

#include <cmath>
#include <cstdint>

namespace thermopinn {

void AgeingConfig::validate(const std::string& prefix) const {
  if (!(doubling_c > 0.0))
    throw ValidationError(prefix + ".doubling_c", "must be > 0");
  if (!std::isfinite(theta_base_c))
    throw ValidationError(prefix + ".theta_base_c", "must be finite");
}

double ageing_factor(double theta_kelvin, const AgeingConfig& ac) {
  return std::exp2((theta_kelvin - 273.15 - ac.theta_base_c) / ac.doubling_c);
}

FieldGrid ageing_field(const FieldGrid& grid, const AgeingConfig& ac) {
  ac.validate();
  if (grid.theta.size() != grid.cells())
    throw ValidationError("ageing_field", "grid has no temperature channel");
  FieldGrid out = grid;
  out.ageing.resize(grid.cells());
  const std::int64_t n = std::int64_t(grid.cells());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t i = 0; i < n; ++i)
    out.ageing[std::size_t(i)] = ageing_factor(grid.theta[std::size_t(i)], ac);
  return out;
}

std::vector<double> loss_of_life(const FieldGrid& grid) {
  if (!grid.has_ageing())
    throw ValidationError("loss_of_life", "grid has no ageing channel");
  const int nx = grid.nx();
  const int nt = grid.nt();
  std::vector<double> hours(std::size_t(nx), 0.0);
  for (int ix = 0; ix < nx; ++ix) {
    double acc = 0.0;
    for (int it = 0; it + 1 < nt; ++it) {
      double dt = grid.ts[std::size_t(it + 1)] - grid.ts[std::size_t(it)];
      double va = grid.ageing[std::size_t(it) * std::size_t(nx) + std::size_t(ix)];
      double vb = grid.ageing[std::size_t(it + 1) * std::size_t(nx) + std::size_t(ix)];
      acc += 0.5 * (va + vb) * dt;
    }
    hours[std::size_t(ix)] = acc / 3600.0;
  }
  return hours;
}

}  // namespace thermopinn
