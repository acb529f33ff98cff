#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xlsd/prediction.hpp"

namespace xlsd {

// How per-language confidence is scored.
enum class ScoreMode {
  kPseudoLabel,  // mean probability assigned to the consensus pseudo-label
  kOwnArgmax,    // mean probability of each row's own argmax
};

ScoreMode parse_score_mode(const std::string& name);  // "pseudo" | "own-argmax"
std::string to_string(ScoreMode mode);

struct SelectionOptions {
  ScoreMode score_mode = ScoreMode::kPseudoLabel;
  // Replaces the mean-of-normalized-scores threshold when set. With an
  // override the teacher set can legitimately come out empty.
  std::optional<double> threshold_override;
};

struct SelectionResult {
  std::vector<LanguageId> languages;      // matrix order
  std::vector<int> pseudo_labels;         // one consensus label per instance
  std::vector<double> raw_scores;         // s_t, aligned with `languages`
  std::vector<double> normalized_scores;  // softmax of raw_scores, sums to 1
  double threshold = 0.0;
  std::vector<LanguageId> teachers;       // normalized score >= threshold
  std::vector<LanguageId> students;       // the rest

  bool is_teacher(const LanguageId& code) const;
};

// Argmax with ties broken toward the lowest index.
int predict_label(std::span<const double> dist);

// Consensus label: most per-language argmax votes; vote ties broken by the
// larger total probability mass over the tied labels, then lowest index.
int majority_vote(const PredictionMatrix& matrix, int64_t instance_id);
std::vector<int> majority_vote_all(const PredictionMatrix& matrix);

// s_t = mean over instances of P(pseudo_label_i | x_{t,i}).
std::vector<double> confidence_scores(const PredictionMatrix& matrix,
                                      std::span<const int> pseudo_labels);
// s_t = mean over instances of max_k P(k | x_{t,i}).
std::vector<double> own_argmax_scores(const PredictionMatrix& matrix);

// Softmax over languages, max-subtracted.
std::vector<double> normalize_scores(std::span<const double> raw_scores);

struct Partition {
  std::vector<size_t> teacher_indices;
  std::vector<size_t> student_indices;
  double threshold = 0.0;
};

// threshold = mean(normalized). The comparison is inclusive, so the top
// score always lands in the teacher set.
Partition partition_languages(std::span<const double> normalized_scores);
Partition partition_languages(std::span<const double> normalized_scores, double threshold);

// majority_vote_all -> confidence scores -> normalize -> partition.
SelectionResult select_teachers(const PredictionMatrix& matrix,
                                const SelectionOptions& options = {});

std::vector<int> ensemble_voted(const PredictionMatrix& matrix);
std::vector<int> ensemble_weighted(const PredictionMatrix& matrix,
                                   std::span<const double> normalized_scores);
std::vector<int> ensemble_best_language(const PredictionMatrix& matrix, const LanguageId& code);

// strategy: "voted", "weighted" (needs a selection), or "best_language:<lang>".
std::vector<int> ensemble_predict(const PredictionMatrix& matrix, const std::string& strategy,
                                  const SelectionResult* selection = nullptr);

void save_selection(const SelectionResult& result, const std::string& path);
SelectionResult load_selection(const std::string& path);

}  // namespace xlsd
