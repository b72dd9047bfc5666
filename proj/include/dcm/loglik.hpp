#pragma once

#include <vector>

namespace dcm {

// Log-likelihood with its analytic gradient (same order as the model spec's
// canonical parameter names). `clamped` counts situations whose simulated
// chosen-probability underflowed and was floored at 1e-300.
struct LoglikResult {
  double loglik = 0.0;
  std::vector<double> gradient;
  long clamped = 0;
};

inline constexpr double kProbFloor = 1e-300;

}  // namespace dcm
