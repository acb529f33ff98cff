#include "xlsd/gradient_check.hpp"

#include <algorithm>
#include <cmath>

#include "xlsd/rng.hpp"

namespace xlsd {

double gradient_check(const ToyClassifier& model, const LossClosure& loss,
                      const GradientCheckOptions& options) {
  if (!(options.epsilon > 0.0 && options.epsilon <= 1e-2)) {
    fail("gradient_check epsilon must lie in (0, 1e-2], got ", options.epsilon);
  }
  const LossGrad base = loss(model);
  if (!std::isfinite(base.loss)) fail("loss is non-finite at the base point");
  if (base.grad.size() != model.param_count()) {
    fail("closure returned ", base.grad.size(), " gradient entries for ", model.param_count(),
         " parameters");
  }

  const size_t n = model.param_count();
  std::vector<size_t> coords;
  size_t budget = options.max_coords;
  if (budget == 0) budget = n <= 512 ? n : 256;
  if (budget >= n) {
    coords.resize(n);
    for (size_t i = 0; i < n; ++i) coords[i] = i;
  } else {
    budget = std::max<size_t>(budget, 200);
    Rng rng(options.seed);
    coords.resize(n);
    for (size_t i = 0; i < n; ++i) coords[i] = i;
    rng.shuffle(coords);
    coords.resize(std::min(budget, n));
  }

  ToyClassifier probe = model;
  double worst = 0.0;
  for (const size_t i : coords) {
    const double original = probe.param(i);
    probe.set_param(i, original + options.epsilon);
    const double loss_plus = loss(probe).loss;
    probe.set_param(i, original - options.epsilon);
    const double loss_minus = loss(probe).loss;
    probe.set_param(i, original);
    if (!std::isfinite(loss_plus) || !std::isfinite(loss_minus)) {
      fail("loss is non-finite at a perturbed point (parameter ", i, ")");
    }
    const double numeric = (loss_plus - loss_minus) / (2.0 * options.epsilon);
    const double analytic = base.grad[i];
    const double denom = std::max(1e-8, std::abs(analytic) + std::abs(numeric));
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  }
  return worst;
}

}  // namespace xlsd
