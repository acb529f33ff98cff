#include "xlsd/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace xlsd {

using json = nlohmann::json;

void validate_distribution(std::span<const double> probs, double sum_tolerance) {
  if (probs.empty()) fail("distribution is empty");
  double sum = 0.0;
  for (const double p : probs) {
    if (!std::isfinite(p)) fail("distribution entry is not finite");
    if (p < 0.0 || p > 1.0) fail("distribution entry ", p, " outside [0, 1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > sum_tolerance) {
    fail("distribution sums to ", sum, ", deviating from 1 by more than ", sum_tolerance);
  }
}

Distribution Distribution::validated(std::vector<double> probs) {
  validate_distribution(probs);
  return Distribution{std::move(probs)};
}

PredictionMatrix::PredictionMatrix(std::vector<LanguageId> languages, int64_t num_instances,
                                   int label_count)
    : languages_(std::move(languages)), num_instances_(num_instances), label_count_(label_count) {
  if (languages_.empty()) fail("prediction matrix needs at least one language");
  if (num_instances_ <= 0) fail("prediction matrix num_instances must be positive");
  if (label_count_ < 2) fail("prediction matrix label_count must be >= 2");
  const size_t cells = languages_.size() * static_cast<size_t>(num_instances_);
  rows_.assign(cells * static_cast<size_t>(label_count_), 0.0);
  present_.assign(cells, 0);
}

size_t PredictionMatrix::language_index(const LanguageId& code) const {
  const auto it = std::find(languages_.begin(), languages_.end(), code);
  if (it == languages_.end()) fail("unknown language \"", code, "\"");
  return static_cast<size_t>(it - languages_.begin());
}

size_t PredictionMatrix::cell(size_t lang_idx, int64_t id) const {
  if (lang_idx >= languages_.size()) fail("language index ", lang_idx, " out of range");
  if (id < 0 || id >= num_instances_) fail("instance id ", id, " out of range");
  return lang_idx * static_cast<size_t>(num_instances_) + static_cast<size_t>(id);
}

void PredictionMatrix::set_row(size_t lang_idx, int64_t id, std::span<const double> probs) {
  if (probs.size() != static_cast<size_t>(label_count_)) {
    fail("row for (", languages_[lang_idx], ", ", id, ") has ", probs.size(), " entries, expected ",
         label_count_);
  }
  validate_distribution(probs);
  const size_t c = cell(lang_idx, id);
  if (present_[c]) fail("row for (", languages_[lang_idx], ", ", id, ") already set");
  std::copy(probs.begin(), probs.end(),
            rows_.begin() + static_cast<std::ptrdiff_t>(c * static_cast<size_t>(label_count_)));
  present_[c] = 1;
  ++rows_set_;
}

std::span<const double> PredictionMatrix::row(size_t lang_idx, int64_t id) const {
  const size_t c = cell(lang_idx, id);
  if (!present_[c]) fail("row for (", languages_[lang_idx], ", ", id, ") was never set");
  return {rows_.data() + c * static_cast<size_t>(label_count_),
          static_cast<size_t>(label_count_)};
}

void PredictionMatrix::require_complete() const {
  if (complete()) return;
  for (size_t l = 0; l < languages_.size(); ++l) {
    for (int64_t i = 0; i < num_instances_; ++i) {
      if (!present_[l * static_cast<size_t>(num_instances_) + static_cast<size_t>(i)]) {
        fail("incomplete prediction matrix: missing row for (", languages_[l], ", ", i, ")");
      }
    }
  }
}

PredictionMatrix load_predictions(const std::string& path, const ParallelCorpus& corpus,
                                  std::ostream* log) {
  std::ifstream in(path);
  if (!in) fail("cannot open ", path);

  PredictionMatrix matrix(corpus.languages(), corpus.num_instances(), corpus.label_count());
  std::string line;
  int line_no = 0;
  int64_t renormalized = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
      fail("line ", line_no, ": not a valid JSON object");
    }
    std::string lang;
    int64_t id = 0;
    std::vector<double> dist;
    try {
      lang = rec.at("lang").get<std::string>();
      id = rec.at("id").get<int64_t>();
      dist = rec.at("dist").get<std::vector<double>>();
    } catch (const json::exception&) {
      fail("line ", line_no, ": expected fields lang (string), id (int), dist ([float])");
    }
    const auto it = std::find(corpus.languages().begin(), corpus.languages().end(), lang);
    if (it == corpus.languages().end()) {
      fail("line ", line_no, ": language \"", lang, "\" not in the corpus");
    }
    if (id < 0 || id >= corpus.num_instances()) {
      fail("line ", line_no, ": instance id ", id, " outside [0, ", corpus.num_instances(), ")");
    }
    if (dist.size() != static_cast<size_t>(corpus.label_count())) {
      fail("line ", line_no, ": distribution has ", dist.size(), " entries, expected ",
           corpus.label_count());
    }
    double sum = 0.0;
    for (const double p : dist) {
      if (!std::isfinite(p) || p < 0.0) {
        fail("line ", line_no, ": distribution entries must be finite and non-negative");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-3) {
      fail("line ", line_no, ": row sums to ", sum, ", deviating from 1 by more than 1e-3");
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      for (double& p : dist) p /= sum;
      ++renormalized;
    }
    matrix.set_row(static_cast<size_t>(it - corpus.languages().begin()), id, dist);
  }
  matrix.require_complete();
  if (renormalized > 0 && log != nullptr) {
    *log << "load_predictions: renormalized " << renormalized << " row(s) from " << path << "\n";
  }
  return matrix;
}

void save_predictions(const PredictionMatrix& matrix, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write ", path);
  for (size_t l = 0; l < matrix.num_languages(); ++l) {
    for (int64_t i = 0; i < matrix.num_instances(); ++i) {
      const auto row = matrix.row(l, i);
      json rec;
      rec["lang"] = matrix.languages()[l];
      rec["id"] = i;
      rec["dist"] = std::vector<double>(row.begin(), row.end());
      out << rec.dump() << "\n";
    }
  }
}

}  // namespace xlsd
