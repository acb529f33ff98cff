#pragma once

#include <cstdint>
#include <functional>

#include "xlsd/model.hpp"

namespace xlsd {

using LossClosure = std::function<LossGrad(const ToyClassifier&)>;

struct GradientCheckOptions {
  double epsilon = 1e-5;  // must lie in (0, 1e-2]
  // 0 means: check every coordinate when the model has <= 512 parameters,
  // otherwise a seeded random subsample of 256 (always >= 200).
  size_t max_coords = 0;
  uint64_t seed = 0;
};

// Compares the closure's analytic gradient against central finite differences
// (f(t+e) - f(t-e)) / 2e coordinate by coordinate and returns the maximum of
// |g_analytic - g_numeric| / max(1e-8, |g_analytic| + |g_numeric|).
// Throws if the loss is non-finite at any perturbed point.
double gradient_check(const ToyClassifier& model, const LossClosure& loss,
                      const GradientCheckOptions& options = {});

}  // namespace xlsd
