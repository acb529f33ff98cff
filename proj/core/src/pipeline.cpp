#include "xlsd/pipeline.hpp"

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "xlsd/rng.hpp"

namespace xlsd {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError(concat("stage ", name, ": ", e.what()));
  } catch (const std::exception& e) {
    throw std::runtime_error(concat("stage ", name, ": ", e.what()));
  }
}

void save_train_log(const std::vector<double>& trace, size_t examples, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write ", path);
  for (size_t e = 0; e < trace.size(); ++e) {
    json line;
    line["epoch"] = e;
    line["loss"] = trace[e];
    line["examples"] = examples;
    out << line.dump() << "\n";
  }
}

}  // namespace

PipelineResult run_pipeline(const PipelineOptions& options) {
  if (options.out_dir.empty()) fail("pipeline needs an output directory");
  fs::create_directories(options.out_dir);
  const auto out = [&](const char* name) { return (fs::path(options.out_dir) / name).string(); };

  const LabeledSet train = stage("load-train", [&] { return load_labeled_set(options.train_path); });
  const ParallelCorpus unlabeled =
      stage("load-unlabeled", [&] { return load_corpus(options.unlabeled_path); });
  const ParallelCorpus test = stage("load-test", [&] { return load_corpus(options.test_path); });

  // Source training.
  TrainConfig train_cfg = options.train;
  train_cfg.seed = derive_seed(options.seed, "train");
  const TrainResult source = stage("train-source", [&] {
    ToyClassifier model = ToyClassifier::init(train.vocab_size, options.embed_dim,
                                              train.label_count, derive_seed(options.seed, "init"));
    return source_train(std::move(model), train, train_cfg);
  });
  save_model(source.model, out("model_source.json"));
  save_train_log(source.loss_trace, train.examples.size(), out("source_train_log.jsonl"));

  // Baseline evaluation of the source-trained model.
  PipelineResult result;
  result.before = stage("eval-baseline", [&] {
    return make_report(test.languages(), per_language_accuracy(source.model, test),
                       test.source_language());
  });
  save_report(result.before, out("report_baseline.json"), out("report_baseline.txt"));

  // Teacher selection on the distillation corpus.
  result.selection = stage("select", [&] {
    return select_teachers(predict_matrix(source.model, unlabeled), options.selection);
  });
  save_selection(result.selection, out("selection.json"));

  // Cross-lingual self-distillation.
  DistillConfig distill_cfg = options.distill;
  distill_cfg.seed = derive_seed(options.seed, "distill");
  const DistillResult distilled =
      stage("distill", [&] { return distill(source.model, unlabeled, result.selection, distill_cfg); });
  save_model(distilled.model, out("model_distilled.json"));
  save_distill_log(distilled, out("distill_log.jsonl"));

  // Final evaluation and the before/after comparison.
  result.after = stage("eval-final", [&] {
    return group_report(per_language_accuracy(distilled.model, test), result.selection,
                        test.source_language());
  });
  save_report(result.after, out("report_final.json"), out("report_final.txt"));
  result.delta = stage("compare", [&] { return compare_runs(result.before, result.after); });
  save_comparison(result.delta, out("compare.json"));
  return result;
}

}  // namespace xlsd
