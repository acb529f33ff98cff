#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xlsd/corpus.hpp"
#include "xlsd/model.hpp"
#include "xlsd/prediction.hpp"
#include "xlsd/selection.hpp"

namespace xlsd {

// Accuracies are stored as fractions in [0,1]; rendering multiplies by 100
// and keeps two decimals.

struct GroupMeans {
  double teacher_mean = 0.0;
  std::optional<double> student_mean;  // absent when every language teaches
  double all_mean = 0.0;
};

struct EvalReport {
  std::vector<LanguageId> languages;  // column order
  LanguageId source;
  std::map<LanguageId, double> accuracy;
  // gap[t] = accuracy[source] - accuracy[t] for every non-source t.
  std::map<LanguageId, double> gap;
  double avg_gap = 0.0;  // mean over non-source languages
  std::optional<GroupMeans> group_means;
};

// Fraction of instances whose predicted argmax matches the gold label.
double accuracy(const PredictionMatrix& matrix, const ParallelCorpus& test,
                const LanguageId& language);
double accuracy(const ToyClassifier& model, const ParallelCorpus& test,
                const LanguageId& language);

std::map<LanguageId, double> per_language_accuracy(const ToyClassifier& model,
                                                   const ParallelCorpus& test);

struct TransferGaps {
  std::map<LanguageId, double> per_language;  // non-source only
  double avg = 0.0;
};

TransferGaps transfer_gaps(const std::map<LanguageId, double>& accuracy,
                           const LanguageId& source);

EvalReport make_report(std::vector<LanguageId> language_order,
                       std::map<LanguageId, double> accuracy, LanguageId source);

// Adds teacher/student/all mean accuracies from the selection's split.
EvalReport group_report(const std::map<LanguageId, double>& accuracy,
                        const SelectionResult& selection, const LanguageId& source);

struct RunComparison {
  std::map<LanguageId, double> accuracy_delta;  // after - before
  double avg_gap_delta = 0.0;                   // negative = disparity reduced
};

RunComparison compare_runs(const EvalReport& before, const EvalReport& after);

// Aligned text table: languages as columns, a Perf. row and a gap row, both
// in percent with two decimals.
std::string render_report_table(const EvalReport& report);

void save_report(const EvalReport& report, const std::string& json_path,
                 const std::string& table_path);
void save_comparison(const RunComparison& comparison, const std::string& path);

}  // namespace xlsd
