#pragma once

// Shared test utilities: scratch directories, file hashing, a CLI subprocess
// runner, simple random-fixture generators, and naive reference oracles kept
// deliberately independent of the library implementations they check.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "xlsd/prediction.hpp"

namespace testutil {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("xlsd_" + tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string dir() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline uint64_t fnv1a(const std::string& bytes) {
  uint64_t h = 1469598103934665603ull;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

inline uint64_t file_hash(const std::string& path) { return fnv1a(read_file(path)); }

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr combined
};

// Runs the real binary; used by the CLI tests and the determinism criterion.
inline CliResult run_cli(const std::string& cli_path, const std::string& args) {
  const std::string command = cli_path + " " + args + " 2>&1";
  CliResult result;
  FILE* pipe = popen(command.c_str(), "r");
  if (pipe == nullptr) return result;
  std::array<char, 4096> buffer{};
  size_t n = 0;
  while ((n = fread(buffer.data(), 1, buffer.size(), pipe)) > 0) {
    result.output.append(buffer.data(), n);
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

// ---- random fixtures ----------------------------------------------------

inline std::vector<double> random_distribution(std::mt19937_64& rng, int k) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> row(static_cast<size_t>(k));
  double sum = 0.0;
  for (auto& v : row) {
    v = -std::log(1.0 - unif(rng));  // exponential, so the normalized row is Dirichlet(1)
    sum += v;
  }
  for (auto& v : row) v /= sum;
  return row;
}

// Coarsely quantized rows: many exact argmax and vote ties.
inline std::vector<double> quantized_distribution(std::mt19937_64& rng, int k) {
  std::uniform_int_distribution<int> level(0, 4);
  std::vector<double> row(static_cast<size_t>(k));
  int sum = 0;
  std::vector<int> raw(static_cast<size_t>(k));
  for (auto& v : raw) {
    v = level(rng);
    sum += v;
  }
  if (sum == 0) {
    raw[0] = 1;
    sum = 1;
  }
  for (size_t i = 0; i < raw.size(); ++i) row[i] = static_cast<double>(raw[i]) / sum;
  return row;
}

inline xlsd::PredictionMatrix random_matrix(std::mt19937_64& rng, size_t num_languages,
                                            int64_t num_instances, int label_count,
                                            bool quantized) {
  std::vector<xlsd::LanguageId> languages;
  for (size_t t = 0; t < num_languages; ++t) languages.push_back("L" + std::to_string(t));
  xlsd::PredictionMatrix matrix(languages, num_instances, label_count);
  for (size_t l = 0; l < num_languages; ++l) {
    for (int64_t i = 0; i < num_instances; ++i) {
      matrix.set_row(l, i,
                     quantized ? quantized_distribution(rng, label_count)
                               : random_distribution(rng, label_count));
    }
  }
  return matrix;
}

// ---- naive oracles -------------------------------------------------------

// Reference majority vote, written as a direct transcription of the rule:
// per-language argmax votes, tie by summed probability mass, then lowest
// label. Scans label-by-label instead of accumulating, unlike the library.
inline int naive_majority_vote(const xlsd::PredictionMatrix& matrix, int64_t instance) {
  const int k = matrix.label_count();
  int best_label = -1;
  int best_votes = -1;
  double best_mass = 0.0;
  for (int label = 0; label < k; ++label) {
    int votes = 0;
    double mass = 0.0;
    for (size_t l = 0; l < matrix.num_languages(); ++l) {
      const auto row = matrix.row(l, instance);
      bool is_argmax = true;
      for (int other = 0; other < k; ++other) {
        if (row[static_cast<size_t>(other)] > row[static_cast<size_t>(label)] ||
            (row[static_cast<size_t>(other)] == row[static_cast<size_t>(label)] &&
             other < label)) {
          is_argmax = false;
          break;
        }
      }
      if (is_argmax) ++votes;
      mass += row[static_cast<size_t>(label)];
    }
    if (votes > best_votes || (votes == best_votes && mass > best_mass)) {
      best_label = label;
      best_votes = votes;
      best_mass = mass;
    }
  }
  return best_label;
}

// Reference pair enumeration: filter the full (t1, t2, i) cube.
struct NaivePair {
  size_t learner, teacher;
  int64_t instance;
  bool operator==(const NaivePair&) const = default;
};

inline std::vector<NaivePair> naive_pair_enumeration(size_t num_languages,
                                                     const std::vector<size_t>& teachers,
                                                     int64_t num_instances) {
  std::vector<NaivePair> pairs;
  for (int64_t i = 0; i < num_instances; ++i) {
    for (size_t t1 = 0; t1 < num_languages; ++t1) {
      for (size_t t2 = 0; t2 < num_languages; ++t2) {
        const bool t2_is_teacher =
            std::find(teachers.begin(), teachers.end(), t2) != teachers.end();
        if (t2_is_teacher && t1 != t2) pairs.push_back({t1, t2, i});
      }
    }
  }
  return pairs;
}

}  // namespace testutil
