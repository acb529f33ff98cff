#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xlsd/baselines.hpp"
#include "xlsd/corpus.hpp"
#include "xlsd/distillation.hpp"
#include "xlsd/eval.hpp"
#include "xlsd/model.hpp"
#include "xlsd/pipeline.hpp"
#include "xlsd/prediction.hpp"
#include "xlsd/rng.hpp"
#include "xlsd/selection.hpp"
#include "xlsd/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

std::string join(const std::string& dir, const char* name) {
  return (fs::path(dir) / name).string();
}

void ensure_out_dir(const std::string& dir) {
  if (dir.empty()) xlsd::fail("--out-dir must not be empty");
  fs::create_directories(dir);
}

// Everything below throws xlsd::ValidationError for user mistakes; the
// wrapper in run_command_line turns that into exit code 1.

struct SynthArgs {
  int langs = 5;
  std::vector<double> corruption = {0.0, 0.1, 0.2, 0.4, 0.6};
  int64_t instances = 500;
  int64_t train_instances = 500;
  int64_t test_instances = 2000;
  int labels = 3;
  int vocab = 64;
  int tokens = 8;
  uint64_t seed = 7;
  std::string out_dir;
};

void cmd_synth(const SynthArgs& args) {
  xlsd::SyntheticTaskConfig config;
  config.num_languages = args.langs;
  config.corruption_rates = args.corruption;
  config.num_instances = args.instances;
  config.num_train_instances = args.train_instances;
  config.num_test_instances = args.test_instances;
  config.label_count = args.labels;
  config.vocab_size = args.vocab;
  config.tokens_per_instance = args.tokens;
  config.seed = args.seed;

  ensure_out_dir(args.out_dir);
  const xlsd::SyntheticTask task = xlsd::generate_synthetic_task(config);
  xlsd::save_labeled_set(task.train, join(args.out_dir, "train.jsonl"));
  xlsd::save_corpus(task.unlabeled, join(args.out_dir, "unlabeled.jsonl"));
  xlsd::save_corpus(task.test, join(args.out_dir, "test.jsonl"));
  std::cout << "wrote train.jsonl (" << task.train.examples.size() << " instances), "
            << "unlabeled.jsonl (" << task.unlabeled.num_instances() << " x "
            << task.unlabeled.num_languages() << "), test.jsonl (" << task.test.num_instances()
            << " x " << task.test.num_languages() << ") under " << args.out_dir << "\n";
}

struct TrainArgs {
  std::string train_path;
  std::string out_dir;
  int embed_dim = 16;
  double lr = xlsd::TrainConfig{}.learning_rate;
  int epochs = 30;
  int batch = 32;
  uint64_t seed = 7;
};

void write_train_log(const std::vector<double>& trace, int64_t count, const char* count_key,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) xlsd::fail("cannot write ", path);
  for (size_t e = 0; e < trace.size(); ++e) {
    out << "{\"epoch\":" << e << ",\"loss\":" << trace[e] << ",\"" << count_key
        << "\":" << count << "}\n";
  }
}

void cmd_train_source(const TrainArgs& args) {
  const xlsd::LabeledSet train = xlsd::load_labeled_set(args.train_path);
  xlsd::TrainConfig config{args.lr, args.epochs, args.batch, xlsd::derive_seed(args.seed, "train")};
  xlsd::ToyClassifier model = xlsd::ToyClassifier::init(
      train.vocab_size, args.embed_dim, train.label_count, xlsd::derive_seed(args.seed, "init"));
  const xlsd::TrainResult result = xlsd::source_train(std::move(model), train, config);

  ensure_out_dir(args.out_dir);
  xlsd::save_model(result.model, join(args.out_dir, "model_source.json"));
  write_train_log(result.loss_trace, static_cast<int64_t>(train.examples.size()), "examples",
                  join(args.out_dir, "source_train_log.jsonl"));
  std::cout << "source training loss " << result.loss_trace.front() << " -> "
            << result.loss_trace.back() << " over " << args.epochs << " epochs\n";
}

struct SelectArgs {
  std::string predictions_path;
  std::string corpus_path;
  std::string out_dir;
  std::string score_mode = "pseudo";
  std::optional<double> threshold_override;
};

void print_selection(const xlsd::SelectionResult& selection) {
  std::cout << "threshold " << selection.threshold << "\nteachers:";
  for (const auto& code : selection.teachers) std::cout << " " << code;
  std::cout << "\nstudents:";
  for (const auto& code : selection.students) std::cout << " " << code;
  std::cout << "\n";
}

void cmd_select(const SelectArgs& args) {
  const xlsd::ParallelCorpus corpus = xlsd::load_corpus(args.corpus_path);
  const xlsd::PredictionMatrix matrix =
      xlsd::load_predictions(args.predictions_path, corpus, &std::cerr);
  xlsd::SelectionOptions options;
  options.score_mode = xlsd::parse_score_mode(args.score_mode);
  options.threshold_override = args.threshold_override;
  const xlsd::SelectionResult selection = xlsd::select_teachers(matrix, options);
  ensure_out_dir(args.out_dir);
  xlsd::save_selection(selection, join(args.out_dir, "selection.json"));
  print_selection(selection);
}

struct DistillArgs {
  std::string model_path;
  std::string corpus_path;
  std::string selection_path;
  std::string out_dir;
  double lr = xlsd::DistillConfig{}.learning_rate;
  int epochs = xlsd::DistillConfig{}.epochs;
  int batch = 32;
  uint64_t seed = 7;
  bool detach_teacher = true;
  double prob_floor = 1e-12;
};

void cmd_distill(const DistillArgs& args) {
  xlsd::ToyClassifier model = xlsd::load_model(args.model_path);
  const xlsd::ParallelCorpus corpus = xlsd::load_corpus(args.corpus_path);
  const xlsd::SelectionResult selection = xlsd::load_selection(args.selection_path);
  xlsd::DistillConfig config;
  config.learning_rate = args.lr;
  config.epochs = args.epochs;
  config.batch_size = args.batch;
  config.seed = xlsd::derive_seed(args.seed, "distill");
  config.detach_teacher = args.detach_teacher;
  config.prob_floor = args.prob_floor;

  const xlsd::DistillResult result = xlsd::distill(std::move(model), corpus, selection, config);
  ensure_out_dir(args.out_dir);
  xlsd::save_model(result.model, join(args.out_dir, "model_distilled.json"));
  xlsd::save_distill_log(result, join(args.out_dir, "distill_log.jsonl"));
  std::cout << "consistency loss " << result.loss_trace.front() << " -> "
            << result.loss_trace.back() << " over " << result.pair_count << " pairs\n";
}

struct SelfTrainArgs {
  std::string model_path;
  std::string corpus_path;
  std::string mode = "full_language";
  std::string out_dir;
  double keep_fraction = xlsd::SelfTrainConfig{}.keep_fraction;
  double lr = xlsd::SelfTrainConfig{}.train.learning_rate;
  int epochs = xlsd::SelfTrainConfig{}.train.epochs;
  int batch = 32;
  uint64_t seed = 7;
};

void cmd_self_train(const SelfTrainArgs& args) {
  xlsd::ToyClassifier model = xlsd::load_model(args.model_path);
  const xlsd::ParallelCorpus corpus = xlsd::load_corpus(args.corpus_path);
  xlsd::SelfTrainConfig config;
  config.keep_fraction = args.keep_fraction;
  config.train = {args.lr, args.epochs, args.batch, xlsd::derive_seed(args.seed, "selftrain")};
  const xlsd::SelfTrainResult result =
      xlsd::self_train(std::move(model), corpus, xlsd::parse_self_train_mode(args.mode), config);
  ensure_out_dir(args.out_dir);
  xlsd::save_model(result.model, join(args.out_dir, "model_selftrain.json"));
  write_train_log(result.loss_trace, result.kept, "examples",
                  join(args.out_dir, "selftrain_log.jsonl"));
  std::cout << "kept " << result.kept << " of " << result.pool_size
            << " pseudo-labeled rows; final loss " << result.loss_trace.back() << "\n";
}

struct EvalArgs {
  std::string model_path;
  std::string predictions_path;
  std::string test_path;
  std::string selection_path;
  std::string out_dir;
};

void cmd_eval(const EvalArgs& args) {
  const xlsd::ParallelCorpus test = xlsd::load_corpus(args.test_path);
  if (args.model_path.empty() == args.predictions_path.empty()) {
    xlsd::fail("pass exactly one of --model or --predictions");
  }

  std::map<xlsd::LanguageId, double> acc;
  if (!args.model_path.empty()) {
    const xlsd::ToyClassifier model = xlsd::load_model(args.model_path);
    acc = xlsd::per_language_accuracy(model, test);
  } else {
    const xlsd::PredictionMatrix matrix =
        xlsd::load_predictions(args.predictions_path, test, &std::cerr);
    for (const auto& code : test.languages()) acc[code] = xlsd::accuracy(matrix, test, code);
  }

  xlsd::EvalReport report;
  if (!args.selection_path.empty()) {
    const xlsd::SelectionResult selection = xlsd::load_selection(args.selection_path);
    report = xlsd::group_report(acc, selection, test.source_language());
  } else {
    report = xlsd::make_report(test.languages(), acc, test.source_language());
  }
  ensure_out_dir(args.out_dir);
  xlsd::save_report(report, join(args.out_dir, "report.json"), join(args.out_dir, "report.txt"));
  std::cout << xlsd::render_report_table(report);
}

struct PipelineArgs {
  std::string data_dir;
  std::string train_path, unlabeled_path, test_path;
  std::string out_dir;
  uint64_t seed = 7;
  int embed_dim = 16;
  double train_lr = xlsd::TrainConfig{}.learning_rate;
  int train_epochs = 30;
  double distill_lr = xlsd::DistillConfig{}.learning_rate;
  int distill_epochs = xlsd::DistillConfig{}.epochs;
  int batch = 32;
  std::string score_mode = "pseudo";
  std::optional<double> threshold_override;
  bool detach_teacher = true;
};

void cmd_pipeline(const PipelineArgs& args) {
  xlsd::PipelineOptions options;
  options.train_path = args.train_path;
  options.unlabeled_path = args.unlabeled_path;
  options.test_path = args.test_path;
  if (!args.data_dir.empty()) {
    if (options.train_path.empty()) options.train_path = join(args.data_dir, "train.jsonl");
    if (options.unlabeled_path.empty()) {
      options.unlabeled_path = join(args.data_dir, "unlabeled.jsonl");
    }
    if (options.test_path.empty()) options.test_path = join(args.data_dir, "test.jsonl");
  }
  if (options.train_path.empty() || options.unlabeled_path.empty() || options.test_path.empty()) {
    xlsd::fail("pass --data-dir or all of --train/--unlabeled/--test");
  }
  options.out_dir = args.out_dir;
  options.seed = args.seed;
  options.embed_dim = args.embed_dim;
  options.train = {args.train_lr, args.train_epochs, args.batch, 0};
  options.distill.learning_rate = args.distill_lr;
  options.distill.epochs = args.distill_epochs;
  options.distill.batch_size = args.batch;
  options.distill.detach_teacher = args.detach_teacher;
  options.selection.score_mode = xlsd::parse_score_mode(args.score_mode);
  options.selection.threshold_override = args.threshold_override;

  const xlsd::PipelineResult result = xlsd::run_pipeline(options);
  std::cout << "== baseline ==\n"
            << xlsd::render_report_table(result.before) << "== after distillation ==\n"
            << xlsd::render_report_table(result.after);
  print_selection(result.selection);
  std::cout << "avg gap delta " << result.delta.avg_gap_delta << "\n";
}

void add_out_dir(CLI::App* cmd, std::string& out_dir) {
  cmd->add_option("--out-dir", out_dir, "Output directory (created if missing)")->required();
}

}  // namespace

int run_command_line(int argc, const char* const* argv) {
  CLI::App app{
      "Consensus-driven teacher language selection and cross-lingual self-distillation\n"
      "for multilingual classifiers, with a built-in synthetic task generator, a toy\n"
      "differentiable classifier, self-training baselines, and transfer-gap reports.\n"
      "Output files always land under --out-dir with fixed names (see each subcommand)."};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Flat key=value config file; explicit flags win over file values");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand(
      "synth", "Generate a synthetic task: writes train.jsonl, unlabeled.jsonl, test.jsonl");
  synth_cmd->configurable();
  synth_cmd->add_option("--langs", synth.langs, "Number of languages")->capture_default_str();
  synth_cmd->add_option("--corruption", synth.corruption,
                        "Per-language token corruption rates, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  synth_cmd->add_option("--instances", synth.instances, "Unlabeled (distillation) instances")
      ->capture_default_str();
  synth_cmd->add_option("--train-instances", synth.train_instances, "Labeled source instances")
      ->capture_default_str();
  synth_cmd->add_option("--test-instances", synth.test_instances, "Gold-labeled test instances")
      ->capture_default_str();
  synth_cmd->add_option("--labels", synth.labels, "Label count")->capture_default_str();
  synth_cmd->add_option("--vocab", synth.vocab, "Vocabulary size")->capture_default_str();
  synth_cmd->add_option("--tokens", synth.tokens, "Tokens per instance")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Run seed")->capture_default_str();
  add_out_dir(synth_cmd, synth.out_dir);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand(
      "train-source", "Train the toy classifier on the labeled source set: writes "
                      "model_source.json, source_train_log.jsonl");
  train_cmd->configurable();
  train_cmd->add_option("--train", train.train_path, "Labeled corpus JSONL")->required();
  train_cmd->add_option("--embed-dim", train.embed_dim, "Embedding width")->capture_default_str();
  train_cmd->add_option("--lr", train.lr, "Learning rate")->capture_default_str();
  train_cmd->add_option("--epochs", train.epochs, "Epochs")->capture_default_str();
  train_cmd->add_option("--batch", train.batch, "Batch size")->capture_default_str();
  train_cmd->add_option("--seed", train.seed, "Run seed")->capture_default_str();
  add_out_dir(train_cmd, train.out_dir);

  SelectArgs select;
  auto* select_cmd = app.add_subcommand(
      "select", "Teacher selection from a prediction dump: writes selection.json");
  select_cmd->configurable();
  select_cmd->add_option("--predictions", select.predictions_path, "Prediction JSONL")->required();
  select_cmd->add_option("--corpus", select.corpus_path, "Corpus JSONL the dump refers to")
      ->required();
  select_cmd->add_option("--score-mode", select.score_mode, "pseudo | own-argmax")
      ->capture_default_str();
  select_cmd->add_option("--threshold-override", select.threshold_override,
                         "Fixed threshold instead of the mean rule");
  add_out_dir(select_cmd, select.out_dir);

  DistillArgs distill;
  auto* distill_cmd = app.add_subcommand(
      "distill", "Cross-lingual self-distillation: writes model_distilled.json, "
                 "distill_log.jsonl");
  distill_cmd->configurable();
  distill_cmd->add_option("--model", distill.model_path, "Model checkpoint")->required();
  distill_cmd->add_option("--corpus", distill.corpus_path, "Unlabeled parallel corpus")->required();
  distill_cmd->add_option("--selection", distill.selection_path, "selection.json")->required();
  distill_cmd->add_option("--lr", distill.lr, "Learning rate")->capture_default_str();
  distill_cmd->add_option("--epochs", distill.epochs, "Epochs")->capture_default_str();
  distill_cmd->add_option("--batch", distill.batch, "Batch size")->capture_default_str();
  distill_cmd->add_option("--seed", distill.seed, "Run seed")->capture_default_str();
  distill_cmd->add_option("--detach-teacher", distill.detach_teacher,
                          "Treat teacher-side distributions as constants (true|false)")
      ->capture_default_str();
  distill_cmd->add_option("--prob-floor", distill.prob_floor, "Probability floor inside logs")
      ->capture_default_str();
  add_out_dir(distill_cmd, distill.out_dir);

  SelfTrainArgs self_train;
  auto* self_train_cmd = app.add_subcommand(
      "self-train", "Self-training baseline: writes model_selftrain.json, selftrain_log.jsonl");
  self_train_cmd->configurable();
  self_train_cmd->add_option("--model", self_train.model_path, "Model checkpoint")->required();
  self_train_cmd->add_option("--corpus", self_train.corpus_path, "Unlabeled parallel corpus")
      ->required();
  self_train_cmd->add_option("--mode", self_train.mode, "english_only | full_language")
      ->capture_default_str();
  self_train_cmd->add_option("--keep-fraction", self_train.keep_fraction,
                             "Top-confidence fraction to keep")
      ->capture_default_str();
  self_train_cmd->add_option("--lr", self_train.lr, "Learning rate")->capture_default_str();
  self_train_cmd->add_option("--epochs", self_train.epochs, "Epochs")->capture_default_str();
  self_train_cmd->add_option("--batch", self_train.batch, "Batch size")->capture_default_str();
  self_train_cmd->add_option("--seed", self_train.seed, "Run seed")->capture_default_str();
  add_out_dir(self_train_cmd, self_train.out_dir);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand(
      "eval", "Per-language accuracy and transfer gaps: writes report.json, report.txt");
  eval_cmd->configurable();
  eval_cmd->add_option("--model", eval.model_path, "Model checkpoint");
  eval_cmd->add_option("--predictions", eval.predictions_path,
                       "Prediction JSONL (instead of a model)");
  eval_cmd->add_option("--test", eval.test_path, "Gold-labeled test corpus")->required();
  eval_cmd->add_option("--selection", eval.selection_path,
                       "selection.json for teacher/student group means");
  add_out_dir(eval_cmd, eval.out_dir);

  PipelineArgs pipeline;
  auto* pipeline_cmd = app.add_subcommand(
      "pipeline", "train-source -> select -> distill -> eval with before/after comparison; "
                  "writes model_source.json, source_train_log.jsonl, report_baseline.{json,txt}, "
                  "selection.json, model_distilled.json, distill_log.jsonl, "
                  "report_final.{json,txt}, compare.json");
  pipeline_cmd->configurable();
  pipeline_cmd->add_option("--data-dir", pipeline.data_dir,
                           "Directory holding train.jsonl, unlabeled.jsonl, test.jsonl");
  pipeline_cmd->add_option("--train", pipeline.train_path, "Labeled corpus JSONL");
  pipeline_cmd->add_option("--unlabeled", pipeline.unlabeled_path, "Unlabeled parallel corpus");
  pipeline_cmd->add_option("--test", pipeline.test_path, "Gold-labeled test corpus");
  pipeline_cmd->add_option("--seed", pipeline.seed, "Run seed")->capture_default_str();
  pipeline_cmd->add_option("--embed-dim", pipeline.embed_dim, "Embedding width")
      ->capture_default_str();
  pipeline_cmd->add_option("--train-lr", pipeline.train_lr, "Source-training learning rate")
      ->capture_default_str();
  pipeline_cmd->add_option("--train-epochs", pipeline.train_epochs, "Source-training epochs")
      ->capture_default_str();
  pipeline_cmd->add_option("--distill-lr", pipeline.distill_lr, "Distillation learning rate")
      ->capture_default_str();
  pipeline_cmd->add_option("--distill-epochs", pipeline.distill_epochs, "Distillation epochs")
      ->capture_default_str();
  pipeline_cmd->add_option("--batch", pipeline.batch, "Batch size for both phases")
      ->capture_default_str();
  pipeline_cmd->add_option("--score-mode", pipeline.score_mode, "pseudo | own-argmax")
      ->capture_default_str();
  pipeline_cmd->add_option("--threshold-override", pipeline.threshold_override,
                           "Fixed selection threshold instead of the mean rule");
  pipeline_cmd->add_option("--detach-teacher", pipeline.detach_teacher,
                           "Teacher-side gradient detachment (true|false)")
      ->capture_default_str();
  add_out_dir(pipeline_cmd, pipeline.out_dir);

  try {
    app.parse(argc, argv);
    if (synth_cmd->parsed()) cmd_synth(synth);
    if (train_cmd->parsed()) cmd_train_source(train);
    if (select_cmd->parsed()) cmd_select(select);
    if (distill_cmd->parsed()) cmd_distill(distill);
    if (self_train_cmd->parsed()) cmd_self_train(self_train);
    if (eval_cmd->parsed()) cmd_eval(eval);
    if (pipeline_cmd->parsed()) cmd_pipeline(pipeline);
    return 0;
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const xlsd::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
