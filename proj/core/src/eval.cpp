#include "xlsd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xlsd/internal/math.hpp"

namespace xlsd {

using json = nlohmann::json;

double accuracy(const PredictionMatrix& matrix, const ParallelCorpus& test,
                const LanguageId& language) {
  if (!test.has_gold_labels()) fail("test corpus carries no gold labels");
  if (matrix.num_instances() != test.num_instances()) {
    fail("prediction matrix covers ", matrix.num_instances(), " instances, test corpus ",
         test.num_instances());
  }
  const size_t l = matrix.language_index(language);
  int64_t correct = 0;
  for (int64_t i = 0; i < test.num_instances(); ++i) {
    const auto row = matrix.row(l, i);
    size_t best = 0;
    for (size_t k = 1; k < row.size(); ++k) {
      if (row[k] > row[best]) best = k;
    }
    if (static_cast<int>(best) == test.gold_label(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.num_instances());
}

double accuracy(const ToyClassifier& model, const ParallelCorpus& test,
                const LanguageId& language) {
  if (!test.has_gold_labels()) fail("test corpus carries no gold labels");
  const size_t l = test.language_index(language);
  std::vector<double> hidden(static_cast<size_t>(model.embed_dim));
  std::vector<double> probs(static_cast<size_t>(model.label_count));
  int64_t correct = 0;
  for (int64_t i = 0; i < test.num_instances(); ++i) {
    internal::forward_parts(model, test.tokens(l, i), hidden, probs);
    size_t best = 0;
    for (size_t k = 1; k < probs.size(); ++k) {
      if (probs[k] > probs[best]) best = k;
    }
    if (static_cast<int>(best) == test.gold_label(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.num_instances());
}

std::map<LanguageId, double> per_language_accuracy(const ToyClassifier& model,
                                                   const ParallelCorpus& test) {
  std::map<LanguageId, double> acc;
  for (const auto& code : test.languages()) acc[code] = accuracy(model, test, code);
  return acc;
}

TransferGaps transfer_gaps(const std::map<LanguageId, double>& accuracy,
                           const LanguageId& source) {
  const auto src = accuracy.find(source);
  if (src == accuracy.end()) fail("source language \"", source, "\" missing from accuracy map");
  if (accuracy.size() < 2) fail("transfer gaps need at least two languages");
  TransferGaps gaps;
  double sum = 0.0;
  for (const auto& [code, acc] : accuracy) {
    if (code == source) continue;
    const double gap = src->second - acc;
    gaps.per_language[code] = gap;
    sum += gap;
  }
  gaps.avg = sum / static_cast<double>(gaps.per_language.size());
  return gaps;
}

EvalReport make_report(std::vector<LanguageId> language_order,
                       std::map<LanguageId, double> accuracy, LanguageId source) {
  if (language_order.size() != accuracy.size()) {
    fail("language order lists ", language_order.size(), " languages, accuracy map has ",
         accuracy.size());
  }
  for (const auto& code : language_order) {
    if (accuracy.find(code) == accuracy.end()) {
      fail("language \"", code, "\" missing from accuracy map");
    }
  }
  EvalReport report;
  report.languages = std::move(language_order);
  report.source = std::move(source);
  TransferGaps gaps = transfer_gaps(accuracy, report.source);
  report.accuracy = std::move(accuracy);
  report.gap = std::move(gaps.per_language);
  report.avg_gap = gaps.avg;
  return report;
}

EvalReport group_report(const std::map<LanguageId, double>& accuracy,
                        const SelectionResult& selection, const LanguageId& source) {
  if (selection.languages.size() != accuracy.size()) {
    fail("selection covers ", selection.languages.size(), " languages, accuracy map has ",
         accuracy.size());
  }
  for (const auto& code : selection.languages) {
    if (accuracy.find(code) == accuracy.end()) {
      fail("language \"", code, "\" missing from accuracy map");
    }
  }
  EvalReport report = make_report(selection.languages, accuracy, source);

  GroupMeans means;
  double all = 0.0;
  for (const auto& [code, acc] : report.accuracy) all += acc;
  means.all_mean = all / static_cast<double>(report.accuracy.size());

  double teacher = 0.0;
  for (const auto& code : selection.teachers) teacher += report.accuracy.at(code);
  means.teacher_mean = teacher / static_cast<double>(selection.teachers.size());

  if (!selection.students.empty()) {
    double student = 0.0;
    for (const auto& code : selection.students) student += report.accuracy.at(code);
    means.student_mean = student / static_cast<double>(selection.students.size());
  }
  report.group_means = means;
  return report;
}

RunComparison compare_runs(const EvalReport& before, const EvalReport& after) {
  if (before.accuracy.size() != after.accuracy.size()) {
    fail("reports cover different language sets");
  }
  RunComparison cmp;
  for (const auto& code : before.languages) {
    const auto it = after.accuracy.find(code);
    if (it == after.accuracy.end()) {
      fail("reports cover different language sets: \"", code, "\" missing from one side");
    }
    cmp.accuracy_delta[code] = it->second - before.accuracy.at(code);
  }
  cmp.avg_gap_delta = after.avg_gap - before.avg_gap;
  return cmp;
}

namespace {

std::string pct(double fraction) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << fraction * 100.0;
  return os.str();
}

}  // namespace

std::string render_report_table(const EvalReport& report) {
  std::vector<std::string> header{""};
  std::vector<std::string> perf{"Perf."};
  std::vector<std::string> delta{"Gap"};
  for (const auto& code : report.languages) {
    header.push_back(code);
    perf.push_back(pct(report.accuracy.at(code)));
    delta.push_back(code == report.source ? "\\" : pct(report.gap.at(code)));
  }
  header.push_back("avg");
  double all = 0.0;
  for (const auto& [code, acc] : report.accuracy) all += acc;
  perf.push_back(pct(all / static_cast<double>(report.accuracy.size())));
  delta.push_back(pct(report.avg_gap));

  std::vector<size_t> widths(header.size(), 0);
  for (size_t c = 0; c < header.size(); ++c) {
    widths[c] = std::max({header[c].size(), perf[c].size(), delta[c].size()});
  }
  std::ostringstream os;
  const auto emit = [&](const std::vector<std::string>& row) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c > 0) os << "  ";
      os << std::setw(static_cast<int>(widths[c])) << row[c];
    }
    os << "\n";
  };
  emit(header);
  emit(perf);
  emit(delta);

  if (report.group_means) {
    const auto& g = *report.group_means;
    os << "avg(T) " << pct(g.teacher_mean);
    if (g.student_mean) os << "  avg(S) " << pct(*g.student_mean);
    os << "  avg(A) " << pct(g.all_mean) << "\n";
  }
  return os.str();
}

namespace {

json report_to_json(const EvalReport& report) {
  json doc;
  doc["languages"] = report.languages;
  doc["source"] = report.source;
  json acc = json::object();
  for (const auto& [code, a] : report.accuracy) acc[code] = a;
  doc["accuracy"] = acc;
  json gap = json::object();
  for (const auto& [code, g] : report.gap) gap[code] = g;
  doc["gap"] = gap;
  doc["avg_gap"] = report.avg_gap;
  if (report.group_means) {
    json means;
    means["teacher_mean"] = report.group_means->teacher_mean;
    if (report.group_means->student_mean) {
      means["student_mean"] = *report.group_means->student_mean;
    } else {
      means["student_mean"] = nullptr;
    }
    means["all_mean"] = report.group_means->all_mean;
    doc["group_means"] = means;
  }
  return doc;
}

}  // namespace

void save_report(const EvalReport& report, const std::string& json_path,
                 const std::string& table_path) {
  {
    std::ofstream out(json_path);
    if (!out) fail("cannot write ", json_path);
    out << report_to_json(report).dump(2) << "\n";
  }
  {
    std::ofstream out(table_path);
    if (!out) fail("cannot write ", table_path);
    out << render_report_table(report);
  }
}

void save_comparison(const RunComparison& comparison, const std::string& path) {
  json doc;
  json acc = json::object();
  for (const auto& [code, d] : comparison.accuracy_delta) acc[code] = d;
  doc["accuracy_delta"] = acc;
  doc["avg_gap_delta"] = comparison.avg_gap_delta;
  std::ofstream out(path);
  if (!out) fail("cannot write ", path);
  out << doc.dump(2) << "\n";
}

}  // namespace xlsd
