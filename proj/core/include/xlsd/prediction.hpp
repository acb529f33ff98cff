#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "xlsd/corpus.hpp"

namespace xlsd {

// Probability distribution over the label space: entries in [0,1], summing
// to 1 within 1e-9.
struct Distribution {
  std::vector<double> probs;

  static Distribution validated(std::vector<double> probs);
};

void validate_distribution(std::span<const double> probs, double sum_tolerance = 1e-9);

// One probability row per (language, instance). Complete over the full
// languages x instances grid once built; immutable afterwards in all read
// paths.
class PredictionMatrix {
 public:
  PredictionMatrix(std::vector<LanguageId> languages, int64_t num_instances, int label_count);

  const std::vector<LanguageId>& languages() const { return languages_; }
  size_t num_languages() const { return languages_.size(); }
  size_t language_index(const LanguageId& code) const;
  int64_t num_instances() const { return num_instances_; }
  int label_count() const { return label_count_; }

  // Validates the row as a Distribution. Overwriting a row is not allowed.
  void set_row(size_t lang_idx, int64_t id, std::span<const double> probs);
  std::span<const double> row(size_t lang_idx, int64_t id) const;

  bool complete() const { return rows_set_ == languages_.size() * static_cast<size_t>(num_instances_); }
  // Throws naming the first missing (language, id) cell.
  void require_complete() const;

 private:
  size_t cell(size_t lang_idx, int64_t id) const;

  std::vector<LanguageId> languages_;
  int64_t num_instances_ = 0;
  int label_count_ = 0;
  std::vector<double> rows_;
  std::vector<uint8_t> present_;
  size_t rows_set_ = 0;
};

// Prediction JSONL: one object per line, {"lang": str, "id": int, "dist": [float]}.
// Rows whose sum deviates from 1 by more than 1e-3 are rejected with the line
// number; smaller deviations are renormalized and the renormalization count is
// reported on `log` when given.
PredictionMatrix load_predictions(const std::string& path, const ParallelCorpus& corpus,
                                  std::ostream* log = nullptr);
void save_predictions(const PredictionMatrix& matrix, const std::string& path);

}  // namespace xlsd
