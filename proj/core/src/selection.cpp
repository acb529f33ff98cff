#include "xlsd/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string_view>

#include <nlohmann/json.hpp>

namespace xlsd {

using json = nlohmann::json;

ScoreMode parse_score_mode(const std::string& name) {
  if (name == "pseudo") return ScoreMode::kPseudoLabel;
  if (name == "own-argmax") return ScoreMode::kOwnArgmax;
  fail("unknown score mode \"", name, "\" (expected \"pseudo\" or \"own-argmax\")");
}

std::string to_string(ScoreMode mode) {
  return mode == ScoreMode::kPseudoLabel ? "pseudo" : "own-argmax";
}

bool SelectionResult::is_teacher(const LanguageId& code) const {
  return std::find(teachers.begin(), teachers.end(), code) != teachers.end();
}

int predict_label(std::span<const double> dist) {
  if (dist.empty()) fail("empty distribution");
  size_t best = 0;
  for (size_t k = 1; k < dist.size(); ++k) {
    if (dist[k] > dist[best]) best = k;
  }
  return static_cast<int>(best);
}

int majority_vote(const PredictionMatrix& matrix, int64_t instance_id) {
  const int k = matrix.label_count();
  std::vector<int> votes(static_cast<size_t>(k), 0);
  std::vector<double> mass(static_cast<size_t>(k), 0.0);
  for (size_t l = 0; l < matrix.num_languages(); ++l) {
    const auto row = matrix.row(l, instance_id);
    votes[static_cast<size_t>(predict_label(row))] += 1;
    for (int j = 0; j < k; ++j) mass[static_cast<size_t>(j)] += row[static_cast<size_t>(j)];
  }
  // Most votes; vote ties broken by total probability mass, then lowest index.
  int best = 0;
  for (int j = 1; j < k; ++j) {
    const size_t sj = static_cast<size_t>(j), sb = static_cast<size_t>(best);
    if (votes[sj] > votes[sb] || (votes[sj] == votes[sb] && mass[sj] > mass[sb])) best = j;
  }
  return best;
}

std::vector<int> majority_vote_all(const PredictionMatrix& matrix) {
  matrix.require_complete();
  std::vector<int> labels(static_cast<size_t>(matrix.num_instances()));
  for (int64_t i = 0; i < matrix.num_instances(); ++i) {
    labels[static_cast<size_t>(i)] = majority_vote(matrix, i);
  }
  return labels;
}

std::vector<double> confidence_scores(const PredictionMatrix& matrix,
                                      std::span<const int> pseudo_labels) {
  if (pseudo_labels.size() != static_cast<size_t>(matrix.num_instances())) {
    fail("pseudo labels cover ", pseudo_labels.size(), " of ", matrix.num_instances(),
         " instances");
  }
  std::vector<double> scores(matrix.num_languages(), 0.0);
  for (size_t l = 0; l < matrix.num_languages(); ++l) {
    double sum = 0.0;
    for (int64_t i = 0; i < matrix.num_instances(); ++i) {
      const int y = pseudo_labels[static_cast<size_t>(i)];
      if (y < 0 || y >= matrix.label_count()) {
        fail("pseudo label ", y, " for instance ", i, " outside [0, ", matrix.label_count(), ")");
      }
      sum += matrix.row(l, i)[static_cast<size_t>(y)];
    }
    scores[l] = sum / static_cast<double>(matrix.num_instances());
  }
  return scores;
}

std::vector<double> own_argmax_scores(const PredictionMatrix& matrix) {
  std::vector<double> scores(matrix.num_languages(), 0.0);
  for (size_t l = 0; l < matrix.num_languages(); ++l) {
    double sum = 0.0;
    for (int64_t i = 0; i < matrix.num_instances(); ++i) {
      const auto row = matrix.row(l, i);
      sum += row[static_cast<size_t>(predict_label(row))];
    }
    scores[l] = sum / static_cast<double>(matrix.num_instances());
  }
  return scores;
}

std::vector<double> normalize_scores(std::span<const double> raw_scores) {
  if (raw_scores.empty()) fail("no scores to normalize");
  double max = raw_scores[0];
  for (const double s : raw_scores) {
    if (!std::isfinite(s)) fail("raw score is not finite");
    max = std::max(max, s);
  }
  std::vector<double> normalized(raw_scores.size());
  double sum = 0.0;
  for (size_t t = 0; t < raw_scores.size(); ++t) {
    normalized[t] = std::exp(raw_scores[t] - max);
    sum += normalized[t];
  }
  for (double& v : normalized) v /= sum;
  return normalized;
}

Partition partition_languages(std::span<const double> normalized_scores) {
  double mean = 0.0;
  for (const double s : normalized_scores) mean += s;
  mean /= static_cast<double>(normalized_scores.size());
  return partition_languages(normalized_scores, mean);
}

Partition partition_languages(std::span<const double> normalized_scores, double threshold) {
  if (normalized_scores.empty()) fail("no scores to partition");
  Partition p;
  p.threshold = threshold;
  for (size_t t = 0; t < normalized_scores.size(); ++t) {
    if (normalized_scores[t] >= threshold) {
      p.teacher_indices.push_back(t);
    } else {
      p.student_indices.push_back(t);
    }
  }
  return p;
}

SelectionResult select_teachers(const PredictionMatrix& matrix, const SelectionOptions& options) {
  matrix.require_complete();
  SelectionResult result;
  result.languages = matrix.languages();
  result.pseudo_labels = majority_vote_all(matrix);
  result.raw_scores = options.score_mode == ScoreMode::kPseudoLabel
                          ? confidence_scores(matrix, result.pseudo_labels)
                          : own_argmax_scores(matrix);
  result.normalized_scores = normalize_scores(result.raw_scores);
  const Partition partition =
      options.threshold_override
          ? partition_languages(result.normalized_scores, *options.threshold_override)
          : partition_languages(result.normalized_scores);
  result.threshold = partition.threshold;
  for (const size_t t : partition.teacher_indices) result.teachers.push_back(result.languages[t]);
  for (const size_t t : partition.student_indices) result.students.push_back(result.languages[t]);
  return result;
}

std::vector<int> ensemble_voted(const PredictionMatrix& matrix) { return majority_vote_all(matrix); }

std::vector<int> ensemble_weighted(const PredictionMatrix& matrix,
                                   std::span<const double> normalized_scores) {
  if (normalized_scores.size() != matrix.num_languages()) {
    fail("weighted ensemble got ", normalized_scores.size(), " weights for ",
         matrix.num_languages(), " languages");
  }
  std::vector<int> labels(static_cast<size_t>(matrix.num_instances()));
  std::vector<double> weighted(static_cast<size_t>(matrix.label_count()));
  for (int64_t i = 0; i < matrix.num_instances(); ++i) {
    std::fill(weighted.begin(), weighted.end(), 0.0);
    for (size_t l = 0; l < matrix.num_languages(); ++l) {
      const auto row = matrix.row(l, i);
      for (int k = 0; k < matrix.label_count(); ++k) {
        weighted[static_cast<size_t>(k)] += normalized_scores[l] * row[static_cast<size_t>(k)];
      }
    }
    labels[static_cast<size_t>(i)] = predict_label(weighted);
  }
  return labels;
}

std::vector<int> ensemble_best_language(const PredictionMatrix& matrix, const LanguageId& code) {
  const size_t l = matrix.language_index(code);
  std::vector<int> labels(static_cast<size_t>(matrix.num_instances()));
  for (int64_t i = 0; i < matrix.num_instances(); ++i) {
    labels[static_cast<size_t>(i)] = predict_label(matrix.row(l, i));
  }
  return labels;
}

std::vector<int> ensemble_predict(const PredictionMatrix& matrix, const std::string& strategy,
                                  const SelectionResult* selection) {
  if (strategy == "voted") return ensemble_voted(matrix);
  if (strategy == "weighted") {
    if (selection == nullptr) fail("weighted ensemble requires a selection result");
    if (selection->languages != matrix.languages()) {
      fail("selection languages do not match the prediction matrix");
    }
    return ensemble_weighted(matrix, selection->normalized_scores);
  }
  constexpr std::string_view kBestPrefix = "best_language:";
  if (strategy.rfind(kBestPrefix, 0) == 0) {
    return ensemble_best_language(matrix, strategy.substr(kBestPrefix.size()));
  }
  fail("unknown ensemble strategy \"", strategy,
       "\" (expected voted, weighted, or best_language:<lang>)");
}

void save_selection(const SelectionResult& result, const std::string& path) {
  json doc;
  doc["pseudo_labels"] = result.pseudo_labels;
  json scores = json::object();
  json normalized = json::object();
  for (size_t t = 0; t < result.languages.size(); ++t) {
    scores[result.languages[t]] = result.raw_scores[t];
    normalized[result.languages[t]] = result.normalized_scores[t];
  }
  doc["scores"] = scores;
  doc["normalized"] = normalized;
  doc["threshold"] = result.threshold;
  doc["teachers"] = result.teachers;
  doc["students"] = result.students;
  // languages kept so the matrix order survives a round trip
  doc["languages"] = result.languages;
  std::ofstream out(path);
  if (!out) fail("cannot write ", path);
  out << doc.dump(2) << "\n";
}

SelectionResult load_selection(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open ", path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) fail(path, ": not a valid selection document");
  SelectionResult result;
  try {
    result.languages = doc.at("languages").get<std::vector<LanguageId>>();
    result.pseudo_labels = doc.at("pseudo_labels").get<std::vector<int>>();
    result.threshold = doc.at("threshold").get<double>();
    result.teachers = doc.at("teachers").get<std::vector<LanguageId>>();
    result.students = doc.at("students").get<std::vector<LanguageId>>();
    const auto& scores = doc.at("scores");
    const auto& normalized = doc.at("normalized");
    for (const auto& lang : result.languages) {
      result.raw_scores.push_back(scores.at(lang).get<double>());
      result.normalized_scores.push_back(normalized.at(lang).get<double>());
    }
  } catch (const json::exception&) {
    fail(path, ": selection document has missing or mistyped fields");
  }
  return result;
}

}  // namespace xlsd
