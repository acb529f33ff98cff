#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xlsd/corpus.hpp"
#include "xlsd/gradient_check.hpp"
#include "xlsd/model.hpp"
#include "xlsd/selection.hpp"

namespace xlsd {

// (learner language, teacher language, instance) triple. Language values are
// indices into the owning PairSet's language list.
struct DistillPair {
  uint32_t learner_lang = 0;
  uint32_t teacher_lang = 0;
  int64_t instance_id = 0;
};

struct PairSet {
  std::vector<LanguageId> languages;
  std::vector<uint32_t> teacher_indices;  // ascending
  std::vector<DistillPair> pairs;         // lexicographic by (instance, learner, teacher)
};

// All (t1, t2, i) with t2 a teacher and t1 any other language: teacher-student
// pairs plus teacher-teacher pairs in both orders. Student-student and self
// pairs never appear, so |pairs| = N * |teachers| * (|languages| - 1).
PairSet build_pair_set(std::span<const LanguageId> languages,
                       std::span<const LanguageId> teachers, int64_t num_instances);

struct DistillConfig {
  // A light touch: longer or hotter distillation starts memorizing the
  // specific corruption draws in the unlabeled split and gives the gains back.
  double learning_rate = 0.05;
  int epochs = 10;
  int batch_size = 32;
  uint64_t seed = 0;
  // Treat the teacher-side distribution as a constant when differentiating.
  // Turning this off lets gradients flow through both sides of each pair.
  bool detach_teacher = true;
  double prob_floor = 1e-12;  // in (0, 1e-6], applied inside log terms only

  void validate() const;
};

// sum_k p_k * ln(max(p_k, floor) / max(q_k, floor)), with 0 * ln(0/q) = 0.
// Values in [-1e-12, 0) from rounding are clamped to 0.
double kl_divergence(std::span<const double> p, std::span<const double> q,
                     double prob_floor = 1e-12);
double kl_divergence(const Distribution& p, const Distribution& q, double prob_floor = 1e-12);

// Mean KL(P(learner side) || P(teacher side)) over the batch, with exact
// analytic gradients of that (floored, optionally teacher-detached)
// objective. Throws if the loss turns non-finite, naming the offending pair.
LossGrad consistency_loss_grad(const ToyClassifier& model, const ParallelCorpus& corpus,
                               std::span<const DistillPair> batch, const DistillConfig& config);
double consistency_loss_value(const ToyClassifier& model, const ParallelCorpus& corpus,
                              std::span<const DistillPair> batch, const DistillConfig& config);

// The detached objective as a function of the parameters alone: teacher rows
// are precomputed from `teacher_snapshot` and frozen, which is exactly what
// finite differences must see when checking the detached gradients. The
// corpus is captured by reference and must outlive the returned closure.
LossClosure frozen_teacher_closure(const ToyClassifier& teacher_snapshot,
                                   const ParallelCorpus& corpus, std::vector<DistillPair> batch,
                                   DistillConfig config);

struct DistillResult {
  ToyClassifier model;
  // loss_trace[0] is the pre-update mean loss over all pairs; loss_trace[e]
  // the full-pair-set mean loss after epoch e.
  std::vector<double> loss_trace;
  int64_t pair_count = 0;
};

// Builds the pair set from the selection once, then runs shuffled mini-batch
// gradient descent on the consistency loss. Deterministic given the seed.
DistillResult distill(ToyClassifier model, const ParallelCorpus& unlabeled,
                      const SelectionResult& selection, const DistillConfig& config);

// Training log JSONL: {"epoch": n, "loss": l, "pairs": c} per trace entry.
void save_distill_log(const DistillResult& result, const std::string& path);

}  // namespace xlsd
