#include "xlsd/distillation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "xlsd/internal/math.hpp"
#include "xlsd/rng.hpp"

namespace xlsd {

using json = nlohmann::json;

PairSet build_pair_set(std::span<const LanguageId> languages,
                       std::span<const LanguageId> teachers, int64_t num_instances) {
  if (languages.empty()) fail("pair set needs at least one language");
  if (teachers.empty()) fail("pair set needs a non-empty teacher set");
  if (num_instances <= 0) fail("pair set num_instances must be positive");

  PairSet set;
  set.languages.assign(languages.begin(), languages.end());
  std::vector<uint8_t> is_teacher(languages.size(), 0);
  for (const auto& code : teachers) {
    const auto it = std::find(languages.begin(), languages.end(), code);
    if (it == languages.end()) fail("teacher \"", code, "\" is not in the language set");
    const auto idx = static_cast<uint32_t>(it - languages.begin());
    if (!is_teacher[idx]) {
      is_teacher[idx] = 1;
      set.teacher_indices.push_back(idx);
    }
  }
  std::sort(set.teacher_indices.begin(), set.teacher_indices.end());

  set.pairs.reserve(static_cast<size_t>(num_instances) * set.teacher_indices.size() *
                    (languages.size() - 1));
  for (int64_t i = 0; i < num_instances; ++i) {
    for (uint32_t learner = 0; learner < languages.size(); ++learner) {
      for (const uint32_t teacher : set.teacher_indices) {
        if (learner == teacher) continue;
        set.pairs.push_back(DistillPair{learner, teacher, i});
      }
    }
  }
  return set;
}

void DistillConfig::validate() const {
  // 0 is allowed so a dry run expresses "evaluate but do not move".
  if (!(std::isfinite(learning_rate) && learning_rate >= 0.0)) {
    fail("learning_rate must be finite and >= 0, got ", learning_rate);
  }
  if (epochs <= 0) fail("epochs must be positive, got ", epochs);
  if (batch_size <= 0) fail("batch_size must be positive, got ", batch_size);
  if (!(prob_floor > 0.0 && prob_floor <= 1e-6)) {
    fail("prob_floor must lie in (0, 1e-6], got ", prob_floor);
  }
}

double kl_divergence(std::span<const double> p, std::span<const double> q, double prob_floor) {
  if (p.size() != q.size()) {
    fail("KL divergence length mismatch: ", p.size(), " vs ", q.size());
  }
  double sum = 0.0;
  for (size_t k = 0; k < p.size(); ++k) {
    if (p[k] == 0.0) continue;  // 0 * ln(0/q) = 0
    sum += p[k] * std::log(std::max(p[k], prob_floor) / std::max(q[k], prob_floor));
  }
  if (sum < 0.0 && sum >= -1e-12) sum = 0.0;
  return sum;
}

double kl_divergence(const Distribution& p, const Distribution& q, double prob_floor) {
  return kl_divergence(std::span<const double>(p.probs), std::span<const double>(q.probs),
                       prob_floor);
}

namespace {

// Per-pair KL with gradients through the learner side; returns the pair loss.
// dL/dp_j of sum_k p_k (ln max(p_k,floor) - ln max(q_k,floor)) is
// ln(max(p_j,floor)/max(q_j,floor)) + [p_j > floor], then the softmax
// Jacobian maps it onto the logits.
double learner_side_grad(const ToyClassifier& m, std::span<const int32_t> learner_tokens,
                         std::span<const double> teacher_probs, double floor,
                         std::span<double> hidden, std::span<double> probs,
                         std::span<double> dprobs, std::span<double> dlogits,
                         internal::GradAccumulator* acc) {
  internal::forward_parts(m, learner_tokens, hidden, probs);
  const double loss = kl_divergence(probs, teacher_probs, floor);
  if (acc != nullptr) {
    for (size_t j = 0; j < probs.size(); ++j) {
      dprobs[j] = std::log(std::max(probs[j], floor) / std::max(teacher_probs[j], floor)) +
                  (probs[j] > floor ? 1.0 : 0.0);
    }
    internal::softmax_backward(probs, dprobs, dlogits);
    acc->add_logit_grad(m, learner_tokens, hidden, dlogits);
  }
  return loss;
}

// Gradient through the teacher side of the same objective:
// dL/dq_j = -p_j * [q_j > floor] / max(q_j, floor).
void teacher_side_grad(const ToyClassifier& m, std::span<const int32_t> teacher_tokens,
                       std::span<const double> learner_probs, std::span<const double> teacher_probs,
                       std::span<const double> teacher_hidden, double floor,
                       std::span<double> dprobs, std::span<double> dlogits,
                       internal::GradAccumulator& acc) {
  for (size_t j = 0; j < teacher_probs.size(); ++j) {
    dprobs[j] = teacher_probs[j] > floor ? -learner_probs[j] / teacher_probs[j] : 0.0;
  }
  internal::softmax_backward(teacher_probs, dprobs, dlogits);
  acc.add_logit_grad(m, teacher_tokens, teacher_hidden, dlogits);
}

struct Workspace {
  explicit Workspace(const ToyClassifier& m)
      : hidden(static_cast<size_t>(m.embed_dim)),
        teacher_hidden(static_cast<size_t>(m.embed_dim)),
        probs(static_cast<size_t>(m.label_count)),
        teacher_probs(static_cast<size_t>(m.label_count)),
        dprobs(static_cast<size_t>(m.label_count)),
        dlogits(static_cast<size_t>(m.label_count)) {}

  std::vector<double> hidden, teacher_hidden, probs, teacher_probs, dprobs, dlogits;
};

void check_pair_coverage(const ParallelCorpus& corpus, std::span<const DistillPair> batch,
                         size_t num_languages) {
  for (const auto& pair : batch) {
    if (pair.learner_lang >= num_languages || pair.teacher_lang >= num_languages ||
        pair.instance_id < 0 || pair.instance_id >= corpus.num_instances()) {
      fail("pair (", pair.learner_lang, ", ", pair.teacher_lang, ", ", pair.instance_id,
           ") not covered by the corpus");
    }
  }
}

LossGrad batch_loss_grad(const ToyClassifier& m, const ParallelCorpus& corpus,
                         std::span<const DistillPair> batch, const DistillConfig& cfg,
                         bool with_grad) {
  if (batch.empty()) fail("consistency batch is empty");
  check_pair_coverage(corpus, batch, corpus.num_languages());

  Workspace ws(m);
  internal::GradAccumulator acc(m);
  double loss = 0.0;
  for (const auto& pair : batch) {
    internal::forward_parts(m, corpus.tokens(pair.teacher_lang, pair.instance_id),
                            ws.teacher_hidden, ws.teacher_probs);
    const double pair_loss = learner_side_grad(
        m, corpus.tokens(pair.learner_lang, pair.instance_id), ws.teacher_probs, cfg.prob_floor,
        ws.hidden, ws.probs, ws.dprobs, ws.dlogits, with_grad ? &acc : nullptr);
    if (!std::isfinite(pair_loss)) {
      fail("non-finite consistency loss for pair (", corpus.languages()[pair.learner_lang], ", ",
           corpus.languages()[pair.teacher_lang], ", ", pair.instance_id, ")");
    }
    if (with_grad && !cfg.detach_teacher) {
      teacher_side_grad(m, corpus.tokens(pair.teacher_lang, pair.instance_id), ws.probs,
                        ws.teacher_probs, ws.teacher_hidden, cfg.prob_floor, ws.dprobs, ws.dlogits,
                        acc);
    }
    loss += pair_loss;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  acc.scale(inv);
  return LossGrad{loss * inv, std::move(acc.grad)};
}

}  // namespace

LossGrad consistency_loss_grad(const ToyClassifier& model, const ParallelCorpus& corpus,
                               std::span<const DistillPair> batch, const DistillConfig& config) {
  return batch_loss_grad(model, corpus, batch, config, /*with_grad=*/true);
}

double consistency_loss_value(const ToyClassifier& model, const ParallelCorpus& corpus,
                              std::span<const DistillPair> batch, const DistillConfig& config) {
  return batch_loss_grad(model, corpus, batch, config, /*with_grad=*/false).loss;
}

LossClosure frozen_teacher_closure(const ToyClassifier& teacher_snapshot,
                                   const ParallelCorpus& corpus, std::vector<DistillPair> batch,
                                   DistillConfig config) {
  if (batch.empty()) fail("consistency batch is empty");
  check_pair_coverage(corpus, batch, corpus.num_languages());

  // Teacher rows computed once from the snapshot and captured by value.
  const size_t k = static_cast<size_t>(teacher_snapshot.label_count);
  std::vector<double> frozen(batch.size() * k);
  {
    Workspace ws(teacher_snapshot);
    for (size_t b = 0; b < batch.size(); ++b) {
      internal::forward_parts(teacher_snapshot,
                              corpus.tokens(batch[b].teacher_lang, batch[b].instance_id),
                              ws.teacher_hidden, ws.teacher_probs);
      std::copy(ws.teacher_probs.begin(), ws.teacher_probs.end(), frozen.begin() + static_cast<std::ptrdiff_t>(b * k));
    }
  }

  return [&corpus, batch = std::move(batch), frozen = std::move(frozen), config,
          k](const ToyClassifier& m) -> LossGrad {
    Workspace ws(m);
    internal::GradAccumulator acc(m);
    double loss = 0.0;
    for (size_t b = 0; b < batch.size(); ++b) {
      const std::span<const double> teacher_row(frozen.data() + b * k, k);
      loss += learner_side_grad(m, corpus.tokens(batch[b].learner_lang, batch[b].instance_id),
                                teacher_row, config.prob_floor, ws.hidden, ws.probs, ws.dprobs,
                                ws.dlogits, &acc);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    acc.scale(inv);
    return LossGrad{loss * inv, std::move(acc.grad)};
  };
}

DistillResult distill(ToyClassifier model, const ParallelCorpus& unlabeled,
                      const SelectionResult& selection, const DistillConfig& config) {
  config.validate();
  model.validate();
  if (selection.languages != unlabeled.languages()) {
    fail("selection was computed for a different language set than the corpus");
  }
  if (selection.teachers.empty()) fail("selection has an empty teacher set");

  const PairSet pair_set =
      build_pair_set(unlabeled.languages(), selection.teachers, unlabeled.num_instances());

  std::vector<double> trace;
  trace.reserve(static_cast<size_t>(config.epochs) + 1);
  trace.push_back(consistency_loss_value(model, unlabeled, pair_set.pairs, config));

  Rng rng(config.seed);
  std::vector<DistillPair> order = pair_set.pairs;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
      const size_t len = std::min(static_cast<size_t>(config.batch_size), order.size() - start);
      const LossGrad lg = consistency_loss_grad(
          model, unlabeled, std::span<const DistillPair>(order.data() + start, len), config);
      if (!std::isfinite(lg.loss)) fail("distillation diverged at epoch ", epoch);
      for (size_t i = 0; i < lg.grad.size(); ++i) {
        model.set_param(i, model.param(i) - config.learning_rate * lg.grad[i]);
      }
    }
    const double epoch_loss = consistency_loss_value(model, unlabeled, pair_set.pairs, config);
    if (!std::isfinite(epoch_loss)) fail("distillation diverged at epoch ", epoch);
    trace.push_back(epoch_loss);
  }
  return DistillResult{std::move(model), std::move(trace),
                       static_cast<int64_t>(pair_set.pairs.size())};
}

void save_distill_log(const DistillResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write ", path);
  for (size_t e = 0; e < result.loss_trace.size(); ++e) {
    json line;
    line["epoch"] = e;
    line["loss"] = result.loss_trace[e];
    line["pairs"] = result.pair_count;
    out << line.dump() << "\n";
  }
}

}  // namespace xlsd
