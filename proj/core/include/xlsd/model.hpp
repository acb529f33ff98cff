#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xlsd/corpus.hpp"
#include "xlsd/prediction.hpp"

namespace xlsd {

// Mean-pooled embedding bag with a linear softmax head. Deliberately small:
// the point is exact, hand-derived gradients that can be verified against
// finite differences, not modeling power.
struct ToyClassifier {
  int vocab_size = 0;
  int embed_dim = 0;
  int label_count = 0;
  std::vector<double> embeddings;  // vocab_size x embed_dim, row-major
  std::vector<double> weights;     // embed_dim x label_count, row-major
  std::vector<double> bias;        // label_count

  // Parameters drawn uniformly from [-0.05, 0.05].
  static ToyClassifier init(int vocab_size, int embed_dim, int label_count, uint64_t seed);

  void validate() const;  // finite parameters, mutually consistent dims

  // Flat parameter view, ordered embeddings | weights | bias. Used by the
  // trainers and the finite-difference checker.
  size_t param_count() const;
  double param(size_t index) const;
  void set_param(size_t index, double value);
};

// softmax(weights^T . mean(embeddings[tokens]) + bias), max-subtracted for
// stability. Throws on an out-of-range token id.
Distribution forward(const ToyClassifier& model, std::span<const int32_t> tokens);

PredictionMatrix predict_matrix(const ToyClassifier& model, const ParallelCorpus& corpus);

struct TrainConfig {
  // The toy defaults; learning rates tuned for billion-parameter models would
  // not move this classifier at all, and below ~0.1 the bilinear
  // embedding-times-head dynamics need hundreds of epochs to leave the
  // small-init plateau.
  double learning_rate = 0.5;
  int epochs = 30;
  int batch_size = 32;
  uint64_t seed = 0;

  void validate() const;
};

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;  // flat, aligned with ToyClassifier::param()
};

// Mean cross-entropy -log p(label) over the referenced examples, with exact
// analytic gradients. Probabilities are clamped to prob_floor inside the log
// only; the gradient differentiates the clamped expression so finite
// differences agree everywhere.
LossGrad cross_entropy_loss_grad(const ToyClassifier& model,
                                 std::span<const LabeledExample> examples,
                                 std::span<const int64_t> indices,
                                 double prob_floor = 1e-12);
LossGrad cross_entropy_loss_grad(const ToyClassifier& model,
                                 std::span<const LabeledExample> examples,
                                 double prob_floor = 1e-12);

struct TrainResult {
  ToyClassifier model;
  // loss_trace[0] is the pre-training full-set mean loss; loss_trace[e] the
  // mean loss after epoch e.
  std::vector<double> loss_trace;
};

// Mini-batch gradient descent on mean cross-entropy. Deterministic given the
// config seed; throws if the loss turns non-finite, naming the epoch.
TrainResult source_train(ToyClassifier model, const LabeledSet& train, const TrainConfig& config);

// Same trainer over an arbitrary pseudo-labeled pool (self-training reuses it).
TrainResult train_cross_entropy(ToyClassifier model, std::span<const LabeledExample> examples,
                                const TrainConfig& config);

// JSON checkpoint with a dims header and row-major parameter arrays;
// save -> load round-trips values exactly.
void save_model(const ToyClassifier& model, const std::string& path);
ToyClassifier load_model(const std::string& path);

}  // namespace xlsd
