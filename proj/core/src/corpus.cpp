#include "xlsd/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace xlsd {

using json = nlohmann::json;

void validate_language_id(const LanguageId& code) {
  if (code.empty()) fail("language code must be non-empty");
  for (const char c : code) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      fail("language code \"", code, "\" contains whitespace");
    }
  }
}

ParallelCorpus::ParallelCorpus(CorpusData data) : data_(std::move(data)) {
  if (data_.languages.empty()) fail("corpus has no languages");
  std::unordered_set<std::string> seen;
  for (const auto& code : data_.languages) {
    validate_language_id(code);
    if (!seen.insert(code).second) fail("duplicate language code \"", code, "\"");
  }
  if (data_.num_instances <= 0) fail("corpus num_instances must be positive");
  if (data_.label_count < 2) fail("corpus label_count must be >= 2");
  if (data_.vocab_size <= 0) fail("corpus vocab_size must be positive");

  const size_t expected = data_.languages.size() * static_cast<size_t>(data_.num_instances);
  if (data_.tokens.size() != expected) {
    fail("corpus holds ", data_.tokens.size(), " cells, expected ", expected,
         " (languages x instances)");
  }
  for (size_t l = 0; l < data_.languages.size(); ++l) {
    for (int64_t i = 0; i < data_.num_instances; ++i) {
      const auto& cell = data_.tokens[l * static_cast<size_t>(data_.num_instances) +
                                      static_cast<size_t>(i)];
      if (cell.empty()) {
        fail("instance (", data_.languages[l], ", ", i, ") has no tokens");
      }
      for (const int32_t t : cell) {
        if (t < 0 || t >= data_.vocab_size) {
          fail("instance (", data_.languages[l], ", ", i, ") token ", t,
               " outside vocabulary of size ", data_.vocab_size);
        }
      }
    }
  }
  if (!data_.gold_labels.empty()) {
    if (data_.gold_labels.size() != static_cast<size_t>(data_.num_instances)) {
      fail("gold labels cover ", data_.gold_labels.size(), " of ", data_.num_instances,
           " instances");
    }
    for (int64_t i = 0; i < data_.num_instances; ++i) {
      const int y = data_.gold_labels[static_cast<size_t>(i)];
      if (y < 0 || y >= data_.label_count) {
        fail("gold label ", y, " for instance ", i, " outside [0, ", data_.label_count, ")");
      }
    }
  }
}

size_t ParallelCorpus::language_index(const LanguageId& code) const {
  const auto it = std::find(data_.languages.begin(), data_.languages.end(), code);
  if (it == data_.languages.end()) fail("unknown language \"", code, "\"");
  return static_cast<size_t>(it - data_.languages.begin());
}

const std::vector<int32_t>& ParallelCorpus::tokens(size_t lang_idx, int64_t id) const {
  if (lang_idx >= data_.languages.size()) fail("language index ", lang_idx, " out of range");
  if (id < 0 || id >= data_.num_instances) fail("instance id ", id, " out of range");
  return data_.tokens[lang_idx * static_cast<size_t>(data_.num_instances) +
                      static_cast<size_t>(id)];
}

Instance ParallelCorpus::instance(size_t lang_idx, int64_t id) const {
  return Instance{id, tokens(lang_idx, id)};
}

int ParallelCorpus::gold_label(int64_t id) const {
  if (!has_gold_labels()) fail("corpus carries no gold labels");
  if (id < 0 || id >= data_.num_instances) fail("instance id ", id, " out of range");
  return data_.gold_labels[static_cast<size_t>(id)];
}

namespace {

json parse_line(const std::string& line, int line_no) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    fail("line ", line_no, ": not a valid JSON object");
  }
  return j;
}

template <typename T>
T field(const json& j, const char* key, int line_no) {
  const auto it = j.find(key);
  if (it == j.end()) fail("line ", line_no, ": missing field \"", key, "\"");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail("line ", line_no, ": field \"", key, "\" has the wrong type");
  }
}

struct CorpusFile {
  CorpusData data;
  std::vector<uint8_t> cell_present;
  std::vector<uint8_t> label_present;
};

CorpusFile read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open ", path);

  std::string line;
  int line_no = 0;
  // Header.
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty()) break;
  }
  if (line.empty()) fail(path, ": no records");

  CorpusFile file;
  CorpusData& data = file.data;
  {
    const json header = parse_line(line, line_no);
    data.languages = field<std::vector<std::string>>(header, "languages", line_no);
    data.num_instances = field<int64_t>(header, "num_instances", line_no);
    data.label_count = field<int>(header, "label_count", line_no);
    data.vocab_size = field<int>(header, "vocab_size", line_no);
  }
  if (data.languages.empty()) fail(path, ": header lists no languages");
  if (data.num_instances <= 0) fail(path, ": header num_instances must be positive");

  const size_t cells = data.languages.size() * static_cast<size_t>(data.num_instances);
  data.tokens.assign(cells, {});
  file.cell_present.assign(cells, 0);
  file.label_present.assign(static_cast<size_t>(data.num_instances), 0);

  std::vector<int> labels(static_cast<size_t>(data.num_instances), 0);
  size_t records = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json rec = parse_line(line, line_no);
    const auto lang = field<std::string>(rec, "lang", line_no);
    const auto id = field<int64_t>(rec, "id", line_no);
    const auto it = std::find(data.languages.begin(), data.languages.end(), lang);
    if (it == data.languages.end()) {
      fail("line ", line_no, ": language \"", lang, "\" not in header");
    }
    if (id < 0 || id >= data.num_instances) {
      fail("line ", line_no, ": instance id ", id, " outside [0, ", data.num_instances, ")");
    }
    const size_t l = static_cast<size_t>(it - data.languages.begin());
    const size_t cell = l * static_cast<size_t>(data.num_instances) + static_cast<size_t>(id);
    if (file.cell_present[cell]) {
      fail("line ", line_no, ": duplicate record for (", lang, ", ", id, ")");
    }
    data.tokens[cell] = field<std::vector<int32_t>>(rec, "tokens", line_no);
    file.cell_present[cell] = 1;
    ++records;

    if (rec.contains("label")) {
      const int y = field<int>(rec, "label", line_no);
      const size_t i = static_cast<size_t>(id);
      if (file.label_present[i] && labels[i] != y) {
        fail("line ", line_no, ": conflicting gold labels for instance ", id);
      }
      labels[i] = y;
      file.label_present[i] = 1;
    }
  }
  if (records == 0) fail(path, ": no records");

  // Parallelism: every (language, id) cell must be present.
  for (size_t l = 0; l < data.languages.size(); ++l) {
    for (int64_t i = 0; i < data.num_instances; ++i) {
      if (!file.cell_present[l * static_cast<size_t>(data.num_instances) +
                             static_cast<size_t>(i)]) {
        fail(path, ": missing record for (", data.languages[l], ", ", i, ")");
      }
    }
  }

  const size_t labeled =
      static_cast<size_t>(std::count(file.label_present.begin(), file.label_present.end(), 1));
  if (labeled != 0) {
    if (labeled != static_cast<size_t>(data.num_instances)) {
      fail(path, ": gold labels present for only ", labeled, " of ", data.num_instances,
           " instances");
    }
    data.gold_labels = std::move(labels);
  }
  return file;
}

}  // namespace

ParallelCorpus load_corpus(const std::string& path) {
  return ParallelCorpus(std::move(read_corpus_file(path).data));
}

namespace {

void write_corpus_lines(std::ostream& out, const std::vector<LanguageId>& languages,
                        int64_t num_instances, int label_count, int vocab_size,
                        const std::function<const std::vector<int32_t>&(size_t, int64_t)>& tokens,
                        const std::function<const int*(int64_t)>& label) {
  json header;
  header["languages"] = languages;
  header["num_instances"] = num_instances;
  header["label_count"] = label_count;
  header["vocab_size"] = vocab_size;
  out << header.dump() << "\n";
  for (size_t l = 0; l < languages.size(); ++l) {
    for (int64_t i = 0; i < num_instances; ++i) {
      json rec;
      rec["lang"] = languages[l];
      rec["id"] = i;
      rec["tokens"] = tokens(l, i);
      if (const int* y = label(i)) rec["label"] = *y;
      out << rec.dump() << "\n";
    }
  }
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write ", path);
  return out;
}

}  // namespace

void save_corpus(const ParallelCorpus& corpus, const std::string& path) {
  auto out = open_for_write(path);
  int label_scratch = 0;
  write_corpus_lines(
      out, corpus.languages(), corpus.num_instances(), corpus.label_count(), corpus.vocab_size(),
      [&](size_t l, int64_t i) -> const std::vector<int32_t>& { return corpus.tokens(l, i); },
      [&](int64_t i) -> const int* {
        if (!corpus.has_gold_labels()) return nullptr;
        label_scratch = corpus.gold_label(i);
        return &label_scratch;
      });
}

LabeledSet load_labeled_set(const std::string& path) {
  CorpusFile file = read_corpus_file(path);
  const CorpusData& data = file.data;
  if (data.languages.size() != 1) {
    fail(path, ": labeled set must hold exactly one language, found ", data.languages.size());
  }
  if (data.gold_labels.empty()) fail(path, ": labeled set records carry no labels");

  LabeledSet set;
  set.language = data.languages.front();
  set.label_count = data.label_count;
  set.vocab_size = data.vocab_size;
  set.examples.reserve(static_cast<size_t>(data.num_instances));
  for (int64_t i = 0; i < data.num_instances; ++i) {
    const int y = data.gold_labels[static_cast<size_t>(i)];
    if (y < 0 || y >= data.label_count) {
      fail(path, ": label ", y, " for instance ", i, " outside [0, ", data.label_count, ")");
    }
    set.examples.push_back({Instance{i, data.tokens[static_cast<size_t>(i)]}, y});
  }
  return set;
}

void save_labeled_set(const LabeledSet& set, const std::string& path) {
  auto out = open_for_write(path);
  int label_scratch = 0;
  write_corpus_lines(
      out, {set.language}, static_cast<int64_t>(set.examples.size()), set.label_count,
      set.vocab_size,
      [&](size_t, int64_t i) -> const std::vector<int32_t>& {
        return set.examples[static_cast<size_t>(i)].instance.tokens;
      },
      [&](int64_t i) -> const int* {
        label_scratch = set.examples[static_cast<size_t>(i)].label;
        return &label_scratch;
      });
}

}  // namespace xlsd
