#include "xlsd/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "xlsd/internal/math.hpp"
#include "xlsd/rng.hpp"

namespace xlsd {

using json = nlohmann::json;

ToyClassifier ToyClassifier::init(int vocab_size, int embed_dim, int label_count, uint64_t seed) {
  if (vocab_size <= 0) fail("vocab_size must be positive, got ", vocab_size);
  if (embed_dim <= 0) fail("embed_dim must be positive, got ", embed_dim);
  if (label_count < 2) fail("label_count must be >= 2, got ", label_count);

  ToyClassifier m;
  m.vocab_size = vocab_size;
  m.embed_dim = embed_dim;
  m.label_count = label_count;
  m.embeddings.resize(static_cast<size_t>(vocab_size) * static_cast<size_t>(embed_dim));
  m.weights.resize(static_cast<size_t>(embed_dim) * static_cast<size_t>(label_count));
  m.bias.resize(static_cast<size_t>(label_count));

  Rng rng(seed);
  for (auto& v : m.embeddings) v = rng.uniform_real(-0.05, 0.05);
  for (auto& v : m.weights) v = rng.uniform_real(-0.05, 0.05);
  for (auto& v : m.bias) v = rng.uniform_real(-0.05, 0.05);
  return m;
}

void ToyClassifier::validate() const {
  if (vocab_size <= 0 || embed_dim <= 0 || label_count < 2) {
    fail("model dims invalid: vocab=", vocab_size, " dim=", embed_dim, " labels=", label_count);
  }
  if (embeddings.size() != static_cast<size_t>(vocab_size) * static_cast<size_t>(embed_dim)) {
    fail("embedding table size ", embeddings.size(), " inconsistent with dims");
  }
  if (weights.size() != static_cast<size_t>(embed_dim) * static_cast<size_t>(label_count)) {
    fail("weight matrix size ", weights.size(), " inconsistent with dims");
  }
  if (bias.size() != static_cast<size_t>(label_count)) {
    fail("bias size ", bias.size(), " inconsistent with dims");
  }
  for (const double v : embeddings) {
    if (!std::isfinite(v)) fail("non-finite embedding parameter");
  }
  for (const double v : weights) {
    if (!std::isfinite(v)) fail("non-finite weight parameter");
  }
  for (const double v : bias) {
    if (!std::isfinite(v)) fail("non-finite bias parameter");
  }
}

size_t ToyClassifier::param_count() const {
  return embeddings.size() + weights.size() + bias.size();
}

double ToyClassifier::param(size_t index) const {
  if (index < embeddings.size()) return embeddings[index];
  index -= embeddings.size();
  if (index < weights.size()) return weights[index];
  index -= weights.size();
  if (index < bias.size()) return bias[index];
  fail("parameter index out of range");
}

void ToyClassifier::set_param(size_t index, double value) {
  if (index < embeddings.size()) {
    embeddings[index] = value;
    return;
  }
  index -= embeddings.size();
  if (index < weights.size()) {
    weights[index] = value;
    return;
  }
  index -= weights.size();
  if (index < bias.size()) {
    bias[index] = value;
    return;
  }
  fail("parameter index out of range");
}

namespace internal {

void pool_tokens(const ToyClassifier& m, std::span<const int32_t> tokens,
                 std::span<double> hidden) {
  if (tokens.empty()) fail("instance has no tokens");
  std::fill(hidden.begin(), hidden.end(), 0.0);
  for (const int32_t tok : tokens) {
    if (tok < 0 || tok >= m.vocab_size) {
      fail("token id ", tok, " outside vocabulary of size ", m.vocab_size);
    }
    const double* row = m.embeddings.data() + static_cast<size_t>(tok) * static_cast<size_t>(m.embed_dim);
    for (int d = 0; d < m.embed_dim; ++d) hidden[static_cast<size_t>(d)] += row[d];
  }
  const double inv = 1.0 / static_cast<double>(tokens.size());
  for (int d = 0; d < m.embed_dim; ++d) hidden[static_cast<size_t>(d)] *= inv;
}

void logits_from_hidden(const ToyClassifier& m, std::span<const double> hidden,
                        std::span<double> logits) {
  for (int k = 0; k < m.label_count; ++k) logits[static_cast<size_t>(k)] = m.bias[static_cast<size_t>(k)];
  for (int d = 0; d < m.embed_dim; ++d) {
    const double h = hidden[static_cast<size_t>(d)];
    const double* wrow = m.weights.data() + static_cast<size_t>(d) * static_cast<size_t>(m.label_count);
    for (int k = 0; k < m.label_count; ++k) logits[static_cast<size_t>(k)] += h * wrow[k];
  }
}

void stable_softmax(std::span<double> values) {
  double max = values[0];
  for (const double v : values) max = std::max(max, v);
  double sum = 0.0;
  for (double& v : values) {
    v = std::exp(v - max);
    sum += v;
  }
  for (double& v : values) v /= sum;
}

void forward_parts(const ToyClassifier& m, std::span<const int32_t> tokens,
                   std::span<double> hidden, std::span<double> probs) {
  pool_tokens(m, tokens, hidden);
  logits_from_hidden(m, hidden, probs);
  stable_softmax(probs);
}

void softmax_backward(std::span<const double> probs, std::span<const double> dprobs,
                      std::span<double> dlogits) {
  double dot = 0.0;
  for (size_t k = 0; k < probs.size(); ++k) dot += probs[k] * dprobs[k];
  for (size_t k = 0; k < probs.size(); ++k) dlogits[k] = probs[k] * (dprobs[k] - dot);
}

GradAccumulator::GradAccumulator(const ToyClassifier& m)
    : grad(m.param_count(), 0.0),
      embed_offset_(0),
      weight_offset_(m.embeddings.size()),
      bias_offset_(m.embeddings.size() + m.weights.size()) {}

void GradAccumulator::reset() { std::fill(grad.begin(), grad.end(), 0.0); }

void GradAccumulator::scale(double factor) {
  for (double& g : grad) g *= factor;
}

// Backprop of dL/dlogits through the linear head and the mean pool.
void GradAccumulator::add_logit_grad(const ToyClassifier& m, std::span<const int32_t> tokens,
                                     std::span<const double> hidden,
                                     std::span<const double> dlogits) {
  double* dbias = grad.data() + bias_offset_;
  double* dweights = grad.data() + weight_offset_;
  double* dembed = grad.data() + embed_offset_;

  for (int k = 0; k < m.label_count; ++k) dbias[k] += dlogits[static_cast<size_t>(k)];

  // dW[d][k] += h_d * dz_k; dh_d = sum_k W[d][k] * dz_k
  scratch_dhidden_.assign(static_cast<size_t>(m.embed_dim), 0.0);
  for (int d = 0; d < m.embed_dim; ++d) {
    const double h = hidden[static_cast<size_t>(d)];
    const double* wrow = m.weights.data() + static_cast<size_t>(d) * static_cast<size_t>(m.label_count);
    double* dwrow = dweights + static_cast<size_t>(d) * static_cast<size_t>(m.label_count);
    double dh = 0.0;
    for (int k = 0; k < m.label_count; ++k) {
      const double dz = dlogits[static_cast<size_t>(k)];
      dwrow[k] += h * dz;
      dh += wrow[k] * dz;
    }
    scratch_dhidden_[static_cast<size_t>(d)] = dh;
  }

  const double inv = 1.0 / static_cast<double>(tokens.size());
  for (const int32_t tok : tokens) {
    double* drow = dembed + static_cast<size_t>(tok) * static_cast<size_t>(m.embed_dim);
    for (int d = 0; d < m.embed_dim; ++d) drow[d] += inv * scratch_dhidden_[static_cast<size_t>(d)];
  }
}

}  // namespace internal

Distribution forward(const ToyClassifier& model, std::span<const int32_t> tokens) {
  std::vector<double> hidden(static_cast<size_t>(model.embed_dim));
  std::vector<double> probs(static_cast<size_t>(model.label_count));
  internal::forward_parts(model, tokens, hidden, probs);
  return Distribution{std::move(probs)};
}

PredictionMatrix predict_matrix(const ToyClassifier& model, const ParallelCorpus& corpus) {
  if (corpus.vocab_size() > model.vocab_size) {
    fail("corpus vocabulary (", corpus.vocab_size(), ") exceeds the model's (", model.vocab_size,
         ")");
  }
  if (corpus.label_count() != model.label_count) {
    fail("corpus label space (", corpus.label_count(), ") differs from the model's (",
         model.label_count, ")");
  }
  PredictionMatrix matrix(corpus.languages(), corpus.num_instances(), corpus.label_count());
  std::vector<double> hidden(static_cast<size_t>(model.embed_dim));
  std::vector<double> probs(static_cast<size_t>(model.label_count));
  for (size_t l = 0; l < corpus.num_languages(); ++l) {
    for (int64_t i = 0; i < corpus.num_instances(); ++i) {
      internal::forward_parts(model, corpus.tokens(l, i), hidden, probs);
      matrix.set_row(l, i, probs);
    }
  }
  return matrix;
}

void TrainConfig::validate() const {
  // 0 is allowed so a dry run expresses "evaluate but do not move".
  if (!(std::isfinite(learning_rate) && learning_rate >= 0.0)) {
    fail("learning_rate must be finite and >= 0, got ", learning_rate);
  }
  if (epochs <= 0) fail("epochs must be positive, got ", epochs);
  if (batch_size <= 0) fail("batch_size must be positive, got ", batch_size);
}

namespace {

// Cross entropy of one example; dL/dlogits written into `dlogits` when given.
// The probability enters the log through max(p, floor), and the gradient
// differentiates exactly that expression.
double example_cross_entropy(const ToyClassifier& m, const LabeledExample& ex, double floor,
                             std::span<double> hidden, std::span<double> probs,
                             std::span<double> dlogits) {
  if (ex.label < 0 || ex.label >= m.label_count) {
    fail("label ", ex.label, " outside [0, ", m.label_count, ")");
  }
  internal::forward_parts(m, ex.instance.tokens, hidden, probs);
  const double p_true = probs[static_cast<size_t>(ex.label)];
  const double clamped = std::max(p_true, floor);
  const double loss = -std::log(clamped);
  if (!dlogits.empty()) {
    if (p_true > floor) {
      for (int k = 0; k < m.label_count; ++k) dlogits[static_cast<size_t>(k)] = probs[static_cast<size_t>(k)];
      dlogits[static_cast<size_t>(ex.label)] -= 1.0;
    } else {
      // The clamp is active: the loss is locally flat in the parameters.
      std::fill(dlogits.begin(), dlogits.end(), 0.0);
    }
  }
  return loss;
}

}  // namespace

LossGrad cross_entropy_loss_grad(const ToyClassifier& model,
                                 std::span<const LabeledExample> examples,
                                 std::span<const int64_t> indices, double prob_floor) {
  if (indices.empty()) fail("cross-entropy batch is empty");
  internal::GradAccumulator acc(model);
  std::vector<double> hidden(static_cast<size_t>(model.embed_dim));
  std::vector<double> probs(static_cast<size_t>(model.label_count));
  std::vector<double> dlogits(static_cast<size_t>(model.label_count));
  double loss = 0.0;
  for (const int64_t idx : indices) {
    const auto& ex = examples[static_cast<size_t>(idx)];
    loss += example_cross_entropy(model, ex, prob_floor, hidden, probs, dlogits);
    acc.add_logit_grad(model, ex.instance.tokens, hidden, dlogits);
  }
  const double inv = 1.0 / static_cast<double>(indices.size());
  acc.scale(inv);
  return LossGrad{loss * inv, std::move(acc.grad)};
}

LossGrad cross_entropy_loss_grad(const ToyClassifier& model,
                                 std::span<const LabeledExample> examples, double prob_floor) {
  std::vector<int64_t> all(examples.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int64_t>(i);
  return cross_entropy_loss_grad(model, examples, all, prob_floor);
}

namespace {

double mean_cross_entropy(const ToyClassifier& m, std::span<const LabeledExample> examples,
                          double floor) {
  std::vector<double> hidden(static_cast<size_t>(m.embed_dim));
  std::vector<double> probs(static_cast<size_t>(m.label_count));
  double loss = 0.0;
  for (const auto& ex : examples) {
    loss += example_cross_entropy(m, ex, floor, hidden, probs, {});
  }
  return loss / static_cast<double>(examples.size());
}

}  // namespace

TrainResult train_cross_entropy(ToyClassifier model, std::span<const LabeledExample> examples,
                                const TrainConfig& config) {
  config.validate();
  model.validate();
  if (examples.empty()) fail("training set is empty");
  constexpr double kFloor = 1e-12;

  std::vector<double> trace;
  trace.reserve(static_cast<size_t>(config.epochs) + 1);
  trace.push_back(mean_cross_entropy(model, examples, kFloor));

  Rng rng(config.seed);
  std::vector<int64_t> order(examples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int64_t>(i);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
      const size_t len = std::min(static_cast<size_t>(config.batch_size), order.size() - start);
      const LossGrad lg = cross_entropy_loss_grad(
          model, examples, std::span<const int64_t>(order.data() + start, len), kFloor);
      if (!std::isfinite(lg.loss)) {
        fail("training diverged at epoch ", epoch, ": non-finite loss");
      }
      for (size_t i = 0; i < lg.grad.size(); ++i) {
        model.set_param(i, model.param(i) - config.learning_rate * lg.grad[i]);
      }
    }
    const double epoch_loss = mean_cross_entropy(model, examples, kFloor);
    if (!std::isfinite(epoch_loss)) {
      fail("training diverged at epoch ", epoch, ": non-finite loss");
    }
    trace.push_back(epoch_loss);
  }
  return TrainResult{std::move(model), std::move(trace)};
}

TrainResult source_train(ToyClassifier model, const LabeledSet& train, const TrainConfig& config) {
  if (train.examples.empty()) fail("labeled set is empty");
  if (train.label_count != model.label_count) {
    fail("labeled set label space (", train.label_count, ") differs from the model's (",
         model.label_count, ")");
  }
  return train_cross_entropy(std::move(model), train.examples, config);
}

void save_model(const ToyClassifier& model, const std::string& path) {
  model.validate();
  json doc;
  doc["vocab_size"] = model.vocab_size;
  doc["embed_dim"] = model.embed_dim;
  doc["label_count"] = model.label_count;
  doc["embeddings"] = model.embeddings;
  doc["weights"] = model.weights;
  doc["bias"] = model.bias;
  std::ofstream out(path);
  if (!out) fail("cannot write ", path);
  out << doc.dump() << "\n";
}

ToyClassifier load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open ", path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) fail(path, ": not a valid model checkpoint");
  ToyClassifier m;
  try {
    m.vocab_size = doc.at("vocab_size").get<int>();
    m.embed_dim = doc.at("embed_dim").get<int>();
    m.label_count = doc.at("label_count").get<int>();
    m.embeddings = doc.at("embeddings").get<std::vector<double>>();
    m.weights = doc.at("weights").get<std::vector<double>>();
    m.bias = doc.at("bias").get<std::vector<double>>();
  } catch (const json::exception&) {
    fail(path, ": model checkpoint has missing or mistyped fields");
  }
  m.validate();
  return m;
}

}  // namespace xlsd
