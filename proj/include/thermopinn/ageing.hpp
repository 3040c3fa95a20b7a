#pragma once

#include <vector>

#include "thermopinn/solver.hpp"

namespace thermopinn {

// Doubling-law relative ageing factor: V = 2^((theta[C] - theta_base)/doubling).
// Defaults are the loading-guide constants for thermally upgraded paper; both
// are configuration, never hard-coded elsewhere.
struct AgeingConfig {
  double theta_base_c = 98.0;   // reference temperature [C] where V = 1
  double doubling_c = 6.0;      // [C] per doubling of the ageing rate

  void validate(const std::string& prefix = "ageing") const;
};

double ageing_factor(double theta_kelvin, const AgeingConfig& ac);

// Pointwise map over the theta channel; returns a copy with the ageing
// channel filled.
FieldGrid ageing_field(const FieldGrid& grid, const AgeingConfig& ac);

// Trapezoidal time integral of V(x, .) per x, in equivalent hours.
std::vector<double> loss_of_life(const FieldGrid& grid_with_ageing);

}  // namespace thermopinn
