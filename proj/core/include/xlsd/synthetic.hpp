#pragma once

#include <cstdint>
#include <vector>

#include "xlsd/corpus.hpp"

namespace xlsd {

// Synthetic multilingual classification task. Each instance gets a label and
// a bag of label-indicative tokens; language t's copy then has every token
// independently replaced by uniform vocabulary noise with probability
// corruption_rates[t]. The corruption rate is the per-language disparity
// knob: the higher it is, the worse a source-trained classifier does on that
// language. Language 0 is the source language.
struct SyntheticTaskConfig {
  int num_languages = 5;
  int64_t num_instances = 500;        // unlabeled (distillation) split
  int64_t num_train_instances = 500;  // labeled source-language split
  int64_t num_test_instances = 2000;  // gold-labeled test split
  int label_count = 3;
  int vocab_size = 64;
  int tokens_per_instance = 8;
  std::vector<double> corruption_rates = {0.0, 0.1, 0.2, 0.4, 0.6};
  uint64_t seed = 7;

  void validate() const;  // throws ValidationError naming the offending field
};

struct SyntheticTask {
  LabeledSet train;        // language 0 only
  ParallelCorpus unlabeled;
  ParallelCorpus test;     // carries gold labels
};

// Deterministic for a fixed config: the three splits are drawn from
// independent seed-derived streams, so they share no instances.
SyntheticTask generate_synthetic_task(const SyntheticTaskConfig& config);

}  // namespace xlsd
