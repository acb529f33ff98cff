#pragma once

// Shared numeric kernels for the cross-entropy and consistency objectives.
// Internal: not part of the installed API surface contract.

#include <span>
#include <vector>

#include "xlsd/model.hpp"

namespace xlsd::internal {

// hidden = mean of the token embedding rows. Throws on out-of-range tokens.
void pool_tokens(const ToyClassifier& m, std::span<const int32_t> tokens, std::span<double> hidden);

void logits_from_hidden(const ToyClassifier& m, std::span<const double> hidden,
                        std::span<double> logits);

// In-place max-subtracted softmax.
void stable_softmax(std::span<double> values);

// pool + linear head + softmax; hidden and probs sized by the caller.
void forward_parts(const ToyClassifier& m, std::span<const int32_t> tokens,
                   std::span<double> hidden, std::span<double> probs);

// dlogits_m = p_m * (dprobs_m - sum_j p_j dprobs_j)
void softmax_backward(std::span<const double> probs, std::span<const double> dprobs,
                      std::span<double> dlogits);

// Accumulates flat parameter gradients (layout matching ToyClassifier::param)
// from per-example dL/dlogits contributions.
class GradAccumulator {
 public:
  explicit GradAccumulator(const ToyClassifier& m);

  void reset();
  void scale(double factor);
  void add_logit_grad(const ToyClassifier& m, std::span<const int32_t> tokens,
                      std::span<const double> hidden, std::span<const double> dlogits);

  std::vector<double> grad;

 private:
  size_t embed_offset_ = 0;
  size_t weight_offset_ = 0;
  size_t bias_offset_ = 0;
  std::vector<double> scratch_dhidden_;
};

}  // namespace xlsd::internal
