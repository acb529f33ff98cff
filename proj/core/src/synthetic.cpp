#include "xlsd/synthetic.hpp"

#include <cmath>

#include "xlsd/rng.hpp"

namespace xlsd {

void SyntheticTaskConfig::validate() const {
  if (num_languages <= 0) fail("num_languages must be positive, got ", num_languages);
  if (num_instances <= 0) fail("num_instances must be positive, got ", num_instances);
  if (num_train_instances <= 0) {
    fail("num_train_instances must be positive, got ", num_train_instances);
  }
  if (num_test_instances <= 0) fail("num_test_instances must be positive, got ", num_test_instances);
  if (label_count < 2) fail("label_count must be >= 2, got ", label_count);
  if (vocab_size < 2 * label_count) {
    fail("vocab_size must be >= 2 * label_count, got ", vocab_size, " < ", 2 * label_count);
  }
  if (tokens_per_instance <= 0) {
    fail("tokens_per_instance must be positive, got ", tokens_per_instance);
  }
  if (corruption_rates.size() != static_cast<size_t>(num_languages)) {
    fail("corruption_rates has ", corruption_rates.size(), " entries for ", num_languages,
         " languages");
  }
  for (size_t t = 0; t < corruption_rates.size(); ++t) {
    const double r = corruption_rates[t];
    if (!(r >= 0.0 && r <= 1.0)) {
      fail("corruption_rates[", t, "] = ", r, " outside [0, 1]");
    }
  }
}

namespace {

std::vector<LanguageId> language_names(int n) {
  std::vector<LanguageId> names;
  names.reserve(static_cast<size_t>(n));
  for (int t = 0; t < n; ++t) names.push_back(concat("l", t));
  return names;
}

// Label k's indicative tokens are [bounds[k], bounds[k+1]); the tail
// [bounds[K], V) is never indicative. Band sizes grow with the label index
// (proportional to k+1), so uniform corruption noise lands unevenly across
// label bands and a head trained on clean data alone carries a correctable
// class-prior error on corrupted views.
std::vector<int> band_bounds(int vocab_size, int label_count) {
  const int tail = vocab_size / 8;
  const int indicative = vocab_size - tail;
  const double total = static_cast<double>(label_count) * (label_count + 1) / 2.0;
  std::vector<int> bounds(static_cast<size_t>(label_count) + 1, 0);
  double cumulative = 0.0;
  for (int k = 0; k < label_count; ++k) {
    cumulative += k + 1;
    int edge = static_cast<int>(std::lround(indicative * cumulative / total));
    edge = std::max(edge, bounds[static_cast<size_t>(k)] + 1);  // every band non-empty
    bounds[static_cast<size_t>(k) + 1] = std::min(edge, indicative);
  }
  bounds[static_cast<size_t>(label_count)] = indicative;
  return bounds;
}

std::vector<int32_t> draw_instance(Rng& rng, const SyntheticTaskConfig& cfg,
                                   const std::vector<int>& bounds, int label) {
  const int lo = bounds[static_cast<size_t>(label)];
  const int width = bounds[static_cast<size_t>(label) + 1] - lo;
  std::vector<int32_t> tokens(static_cast<size_t>(cfg.tokens_per_instance));
  for (auto& tok : tokens) {
    tok = static_cast<int32_t>(lo + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(width))));
  }
  return tokens;
}

void corrupt(Rng& rng, std::vector<int32_t>& tokens, double rate, int vocab_size) {
  if (rate <= 0.0) return;
  for (auto& tok : tokens) {
    if (rng.bernoulli(rate)) {
      tok = static_cast<int32_t>(rng.uniform_int(static_cast<uint64_t>(vocab_size)));
    }
  }
}

ParallelCorpus generate_parallel_split(const SyntheticTaskConfig& cfg, int64_t n, bool with_gold,
                                       uint64_t seed) {
  Rng rng(seed);
  const std::vector<int> bounds = band_bounds(cfg.vocab_size, cfg.label_count);
  CorpusData data;
  data.languages = language_names(cfg.num_languages);
  data.num_instances = n;
  data.label_count = cfg.label_count;
  data.vocab_size = cfg.vocab_size;
  data.tokens.resize(data.languages.size() * static_cast<size_t>(n));
  if (with_gold) data.gold_labels.resize(static_cast<size_t>(n));

  for (int64_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(cfg.label_count)));
    if (with_gold) data.gold_labels[static_cast<size_t>(i)] = label;
    const std::vector<int32_t> base = draw_instance(rng, cfg, bounds, label);
    for (int t = 0; t < cfg.num_languages; ++t) {
      std::vector<int32_t> copy = base;
      corrupt(rng, copy, cfg.corruption_rates[static_cast<size_t>(t)], cfg.vocab_size);
      data.tokens[static_cast<size_t>(t) * static_cast<size_t>(n) + static_cast<size_t>(i)] =
          std::move(copy);
    }
  }
  return ParallelCorpus(std::move(data));
}

LabeledSet generate_train_split(const SyntheticTaskConfig& cfg, uint64_t seed) {
  Rng rng(seed);
  const std::vector<int> bounds = band_bounds(cfg.vocab_size, cfg.label_count);
  LabeledSet set;
  set.language = language_names(cfg.num_languages).front();
  set.label_count = cfg.label_count;
  set.vocab_size = cfg.vocab_size;
  set.examples.reserve(static_cast<size_t>(cfg.num_train_instances));
  for (int64_t i = 0; i < cfg.num_train_instances; ++i) {
    const int label = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(cfg.label_count)));
    std::vector<int32_t> tokens = draw_instance(rng, cfg, bounds, label);
    corrupt(rng, tokens, cfg.corruption_rates.front(), cfg.vocab_size);
    set.examples.push_back({Instance{i, std::move(tokens)}, label});
  }
  return set;
}

}  // namespace

SyntheticTask generate_synthetic_task(const SyntheticTaskConfig& config) {
  config.validate();
  return SyntheticTask{
      generate_train_split(config, derive_seed(config.seed, "synth:train")),
      generate_parallel_split(config, config.num_instances, /*with_gold=*/false,
                              derive_seed(config.seed, "synth:unlabeled")),
      generate_parallel_split(config, config.num_test_instances, /*with_gold=*/true,
                              derive_seed(config.seed, "synth:test")),
  };
}

}  // namespace xlsd
