#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xlsd/common.hpp"

namespace xlsd {

// Short language code ("en", "sw"). Non-empty, no whitespace, unique within
// a corpus.
using LanguageId = std::string;

void validate_language_id(const LanguageId& code);

struct Instance {
  int64_t id = 0;
  std::vector<int32_t> tokens;  // non-empty, each in [0, vocab_size)
};

// Raw pieces assembled by loaders and the synthetic generator. ParallelCorpus
// validates the whole bundle on construction and is immutable afterwards.
struct CorpusData {
  std::vector<LanguageId> languages;
  int64_t num_instances = 0;
  int label_count = 0;
  int vocab_size = 0;
  // Cell (lang l, instance i) lives at l * num_instances + i.
  std::vector<std::vector<int32_t>> tokens;
  std::vector<int> gold_labels;  // empty, or exactly num_instances entries
};

// Instance-aligned inputs across a language set. Instance ids are dense
// integers [0, num_instances) and every (language, id) cell is present, so
// parallelism is checkable in O(N). The first language is the source
// language of the task.
class ParallelCorpus {
 public:
  explicit ParallelCorpus(CorpusData data);

  const std::vector<LanguageId>& languages() const { return data_.languages; }
  size_t num_languages() const { return data_.languages.size(); }
  size_t language_index(const LanguageId& code) const;  // throws if absent
  const LanguageId& source_language() const { return data_.languages.front(); }

  int64_t num_instances() const { return data_.num_instances; }
  int label_count() const { return data_.label_count; }
  int vocab_size() const { return data_.vocab_size; }

  const std::vector<int32_t>& tokens(size_t lang_idx, int64_t id) const;
  Instance instance(size_t lang_idx, int64_t id) const;

  bool has_gold_labels() const { return !data_.gold_labels.empty(); }
  int gold_label(int64_t id) const;

 private:
  CorpusData data_;
};

struct LabeledExample {
  Instance instance;
  int label = 0;
};

// A monolingual labeled split (the source-language training set).
struct LabeledSet {
  LanguageId language;
  int label_count = 0;
  int vocab_size = 0;
  std::vector<LabeledExample> examples;
};

// Corpus JSONL: first line is a header object
//   {"languages": [...], "num_instances": N, "label_count": K, "vocab_size": V}
// followed by one record per (language, instance):
//   {"lang": str, "id": int, "tokens": [int], "label": int (optional)}
ParallelCorpus load_corpus(const std::string& path);
void save_corpus(const ParallelCorpus& corpus, const std::string& path);

// A labeled set is stored as a single-language corpus file whose records all
// carry labels.
LabeledSet load_labeled_set(const std::string& path);
void save_labeled_set(const LabeledSet& set, const std::string& path);

}  // namespace xlsd
