#pragma once

#include <cstdint>
#include <string>

#include "xlsd/distillation.hpp"
#include "xlsd/eval.hpp"
#include "xlsd/model.hpp"
#include "xlsd/selection.hpp"

namespace xlsd {

// Full run: source-train -> select -> distill -> evaluate before/after.
// Every stage seed derives from `seed`, so a fixed seed reproduces every
// artifact byte for byte.
struct PipelineOptions {
  std::string train_path;
  std::string unlabeled_path;
  std::string test_path;
  std::string out_dir;

  uint64_t seed = 7;
  int embed_dim = 16;
  TrainConfig train;
  DistillConfig distill;
  SelectionOptions selection;
};

struct PipelineResult {
  SelectionResult selection;
  EvalReport before;
  EvalReport after;
  RunComparison delta;
};

// Artifacts written under out_dir (fixed names):
//   model_source.json, source_train_log.jsonl, report_baseline.{json,txt},
//   selection.json, model_distilled.json, distill_log.jsonl,
//   report_final.{json,txt}, compare.json
// Any stage failure is rethrown with the stage name prefixed.
PipelineResult run_pipeline(const PipelineOptions& options);

}  // namespace xlsd
