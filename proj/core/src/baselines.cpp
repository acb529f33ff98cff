#include "xlsd/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "xlsd/internal/math.hpp"

namespace xlsd {

SelfTrainMode parse_self_train_mode(const std::string& name) {
  if (name == "english_only") return SelfTrainMode::kEnglishOnly;
  if (name == "full_language") return SelfTrainMode::kFullLanguage;
  fail("unknown self-train mode \"", name, "\" (expected english_only or full_language)");
}

std::string to_string(SelfTrainMode mode) {
  return mode == SelfTrainMode::kEnglishOnly ? "english_only" : "full_language";
}

void SelfTrainConfig::validate() const {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    fail("keep_fraction must lie in (0, 1], got ", keep_fraction);
  }
  train.validate();
}

std::vector<PoolEntry> pseudo_label_pool(const ToyClassifier& model, const ParallelCorpus& corpus,
                                         std::span<const LanguageId> languages) {
  if (languages.empty()) fail("pseudo-label pool needs at least one language");
  std::vector<double> hidden(static_cast<size_t>(model.embed_dim));
  std::vector<double> probs(static_cast<size_t>(model.label_count));
  std::vector<PoolEntry> pool;
  pool.reserve(languages.size() * static_cast<size_t>(corpus.num_instances()));
  for (const auto& code : languages) {
    const auto l = static_cast<uint32_t>(corpus.language_index(code));
    for (int64_t i = 0; i < corpus.num_instances(); ++i) {
      internal::forward_parts(model, corpus.tokens(l, i), hidden, probs);
      // Each row labels itself: argmax and its probability.
      size_t best = 0;
      for (size_t k = 1; k < probs.size(); ++k) {
        if (probs[k] > probs[best]) best = k;
      }
      pool.push_back(PoolEntry{l, i, static_cast<int>(best), probs[best]});
    }
  }
  return pool;
}

std::vector<PoolEntry> top_confidence_filter(std::vector<PoolEntry> pool, double keep_fraction) {
  if (pool.empty()) fail("pseudo-label pool is empty");
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    fail("keep_fraction must lie in (0, 1], got ", keep_fraction);
  }
  const auto keep = static_cast<size_t>(
      std::ceil(keep_fraction * static_cast<double>(pool.size())));
  std::sort(pool.begin(), pool.end(), [](const PoolEntry& a, const PoolEntry& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.lang != b.lang) return a.lang < b.lang;
    return a.instance_id < b.instance_id;
  });
  pool.resize(std::min(keep, pool.size()));
  return pool;
}

SelfTrainResult self_train(ToyClassifier model, const ParallelCorpus& corpus, SelfTrainMode mode,
                           const SelfTrainConfig& config) {
  config.validate();
  const std::vector<LanguageId> languages =
      mode == SelfTrainMode::kEnglishOnly ? std::vector<LanguageId>{corpus.source_language()}
                                          : corpus.languages();
  std::vector<PoolEntry> pool = pseudo_label_pool(model, corpus, languages);
  const auto pool_size = static_cast<int64_t>(pool.size());
  pool = top_confidence_filter(std::move(pool), config.keep_fraction);

  std::vector<LabeledExample> examples;
  examples.reserve(pool.size());
  for (const auto& entry : pool) {
    examples.push_back(
        {Instance{entry.instance_id, corpus.tokens(entry.lang, entry.instance_id)}, entry.label});
  }
  TrainResult trained = train_cross_entropy(std::move(model), examples, config.train);
  return SelfTrainResult{std::move(trained.model), std::move(trained.loss_trace), pool_size,
                         static_cast<int64_t>(pool.size())};
}

}  // namespace xlsd
