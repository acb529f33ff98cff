#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xlsd/corpus.hpp"
#include "xlsd/model.hpp"

namespace xlsd {

// Self-training baselines. Each row labels itself with its own argmax; the
// consensus machinery stays out of here on purpose, since these baselines
// predate it.

struct PoolEntry {
  uint32_t lang = 0;  // index into the corpus language list
  int64_t instance_id = 0;
  int label = 0;       // the row's own argmax
  double confidence = 0.0;
};

enum class SelfTrainMode {
  kEnglishOnly,   // pool over the corpus source language only
  kFullLanguage,  // pool over every language
};

SelfTrainMode parse_self_train_mode(const std::string& name);
std::string to_string(SelfTrainMode mode);

struct SelfTrainConfig {
  double keep_fraction = 0.5;  // in (0, 1]
  // Gentle fine-tune: the pool labels are the model's own guesses, so
  // retraining at full source-training strength just bakes in its mistakes.
  TrainConfig train{0.05, 10, 32, 0};

  void validate() const;
};

std::vector<PoolEntry> pseudo_label_pool(const ToyClassifier& model, const ParallelCorpus& corpus,
                                         std::span<const LanguageId> languages);

// Keeps exactly ceil(keep_fraction * |pool|) highest-confidence entries;
// ties broken by (language order, instance id).
std::vector<PoolEntry> top_confidence_filter(std::vector<PoolEntry> pool, double keep_fraction);

struct SelfTrainResult {
  ToyClassifier model;
  std::vector<double> loss_trace;
  int64_t pool_size = 0;
  int64_t kept = 0;
};

// Pool -> filter -> cross-entropy fine-tune on the pseudo-labeled subset.
SelfTrainResult self_train(ToyClassifier model, const ParallelCorpus& corpus, SelfTrainMode mode,
                           const SelfTrainConfig& config);

}  // namespace xlsd
