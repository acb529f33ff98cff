#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "helpers.hpp"
#include "xlsd/corpus.hpp"
#include "xlsd/eval.hpp"
#include "xlsd/model.hpp"
#include "xlsd/synthetic.hpp"

using namespace xlsd;

namespace {

SyntheticTaskConfig small_config() {
  SyntheticTaskConfig cfg;
  cfg.num_languages = 3;
  cfg.num_instances = 20;
  cfg.num_train_instances = 30;
  cfg.num_test_instances = 25;
  cfg.label_count = 3;
  cfg.vocab_size = 32;
  cfg.tokens_per_instance = 6;
  cfg.corruption_rates = {0.0, 0.2, 0.5};
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("zero corruption copies every language identically") {
  SyntheticTaskConfig cfg = small_config();
  cfg.corruption_rates = {0.0, 0.0, 0.0};
  const SyntheticTask task = generate_synthetic_task(cfg);
  for (const auto* corpus : {&task.unlabeled, &task.test}) {
    for (int64_t i = 0; i < corpus->num_instances(); ++i) {
      for (size_t l = 1; l < corpus->num_languages(); ++l) {
        REQUIRE(corpus->tokens(l, i) == corpus->tokens(0, i));
      }
    }
  }
}

TEST_CASE("generation is deterministic byte for byte") {
  const SyntheticTaskConfig cfg = small_config();
  const SyntheticTask a = generate_synthetic_task(cfg);
  const SyntheticTask b = generate_synthetic_task(cfg);

  testutil::TempDir tmp("corpus_det");
  save_labeled_set(a.train, tmp.file("a_train.jsonl"));
  save_labeled_set(b.train, tmp.file("b_train.jsonl"));
  save_corpus(a.unlabeled, tmp.file("a_unlabeled.jsonl"));
  save_corpus(b.unlabeled, tmp.file("b_unlabeled.jsonl"));
  save_corpus(a.test, tmp.file("a_test.jsonl"));
  save_corpus(b.test, tmp.file("b_test.jsonl"));
  for (const char* split : {"train", "unlabeled", "test"}) {
    CHECK(testutil::read_file(tmp.file(std::string("a_") + split + ".jsonl")) ==
          testutil::read_file(tmp.file(std::string("b_") + split + ".jsonl")));
  }

  SyntheticTaskConfig other = cfg;
  other.seed = 12;
  const SyntheticTask c = generate_synthetic_task(other);
  save_corpus(c.test, tmp.file("c_test.jsonl"));
  CHECK(testutil::read_file(tmp.file("a_test.jsonl")) !=
        testutil::read_file(tmp.file("c_test.jsonl")));
}

TEST_CASE("every (language, id) cell of a generated corpus is present") {
  const SyntheticTask task = generate_synthetic_task(small_config());
  size_t cells = 0;
  for (size_t l = 0; l < task.test.num_languages(); ++l) {
    for (int64_t i = 0; i < task.test.num_instances(); ++i) {
      REQUIRE_FALSE(task.test.tokens(l, i).empty());
      ++cells;
    }
  }
  CHECK(cells == task.test.num_languages() * static_cast<size_t>(task.test.num_instances()));
}

TEST_CASE("config validation names the offending field") {
  SyntheticTaskConfig cfg = small_config();
  cfg.corruption_rates = {0.0, 0.2, 1.5};
  CHECK_THROWS_WITH_AS(generate_synthetic_task(cfg), doctest::Contains("corruption_rates"),
                       ValidationError);

  cfg = small_config();
  cfg.corruption_rates = {0.0, 0.2};
  CHECK_THROWS_WITH_AS(generate_synthetic_task(cfg), doctest::Contains("corruption_rates"),
                       ValidationError);

  cfg = small_config();
  cfg.num_instances = 0;
  CHECK_THROWS_WITH_AS(generate_synthetic_task(cfg), doctest::Contains("num_instances"),
                       ValidationError);

  cfg = small_config();
  cfg.vocab_size = 4;
  CHECK_THROWS_WITH_AS(generate_synthetic_task(cfg), doctest::Contains("vocab_size"),
                       ValidationError);
}

TEST_CASE("corruption splits source-trained accuracy apart") {
  // Regression fixture: two languages, rates {0.0, 0.6}, 2000 test instances.
  SyntheticTaskConfig cfg;
  cfg.num_languages = 2;
  cfg.corruption_rates = {0.0, 0.6};
  cfg.num_test_instances = 2000;
  cfg.seed = 3;
  const SyntheticTask task = generate_synthetic_task(cfg);

  TrainConfig train_cfg;
  train_cfg.seed = 5;
  ToyClassifier model = ToyClassifier::init(cfg.vocab_size, 16, cfg.label_count, 17);
  const TrainResult trained = source_train(std::move(model), task.train, train_cfg);

  const double clean = accuracy(trained.model, task.test, "l0");
  const double noisy = accuracy(trained.model, task.test, "l1");
  CHECK(clean > noisy);
  CHECK(clean > 0.9);  // the clean language should be essentially solved
}

TEST_CASE("accuracy is non-increasing in the corruption rate") {
  // 3 languages at rates {0.0, 0.3, 0.6}; the ordering must hold for a
  // majority of 5 seeds.
  int ordered = 0;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticTaskConfig cfg;
    cfg.num_languages = 3;
    cfg.corruption_rates = {0.0, 0.3, 0.6};
    cfg.num_test_instances = 2000;
    cfg.seed = seed;
    const SyntheticTask task = generate_synthetic_task(cfg);
    TrainConfig train_cfg;
    train_cfg.seed = seed;
    const TrainResult trained = source_train(
        ToyClassifier::init(cfg.vocab_size, 16, cfg.label_count, seed), task.train, train_cfg);
    const double a0 = accuracy(trained.model, task.test, "l0");
    const double a1 = accuracy(trained.model, task.test, "l1");
    const double a2 = accuracy(trained.model, task.test, "l2");
    if (a0 >= a1 && a1 >= a2) ++ordered;
  }
  CHECK(ordered >= 3);
}

TEST_CASE("load_corpus reads a well-formed file") {
  testutil::TempDir tmp("corpus_load");
  const std::string path = tmp.file("corpus.jsonl");
  testutil::write_file(
      path,
      R"({"languages":["en","fr"],"num_instances":2,"label_count":2,"vocab_size":8})"
      "\n"
      R"({"lang":"en","id":0,"tokens":[1,2]})"
      "\n"
      R"({"lang":"en","id":1,"tokens":[3]})"
      "\n"
      R"({"lang":"fr","id":0,"tokens":[4,5]})"
      "\n"
      R"({"lang":"fr","id":1,"tokens":[6]})"
      "\n");
  const ParallelCorpus corpus = load_corpus(path);
  CHECK(corpus.num_instances() == 2);
  CHECK(corpus.languages() == std::vector<LanguageId>{"en", "fr"});
  CHECK(corpus.tokens(1, 1) == std::vector<int32_t>{6});
  CHECK_FALSE(corpus.has_gold_labels());
}

TEST_CASE("load_corpus names the missing (language, id) hole") {
  testutil::TempDir tmp("corpus_hole");
  const std::string path = tmp.file("corpus.jsonl");
  testutil::write_file(
      path,
      R"({"languages":["en","fr"],"num_instances":2,"label_count":2,"vocab_size":8})"
      "\n"
      R"({"lang":"en","id":0,"tokens":[1]})"
      "\n"
      R"({"lang":"en","id":1,"tokens":[2]})"
      "\n"
      R"({"lang":"fr","id":0,"tokens":[3]})"
      "\n");
  CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("(fr, 1)"), ValidationError);
}

TEST_CASE("load_corpus rejects degenerate input") {
  testutil::TempDir tmp("corpus_bad");

  testutil::write_file(tmp.file("empty.jsonl"), "");
  CHECK_THROWS_WITH_AS(load_corpus(tmp.file("empty.jsonl")), doctest::Contains("no records"),
                       ValidationError);

  testutil::write_file(
      tmp.file("header_only.jsonl"),
      R"({"languages":["en"],"num_instances":1,"label_count":2,"vocab_size":8})"
      "\n");
  CHECK_THROWS_WITH_AS(load_corpus(tmp.file("header_only.jsonl")),
                       doctest::Contains("no records"), ValidationError);

  testutil::write_file(
      tmp.file("parse.jsonl"),
      R"({"languages":["en"],"num_instances":1,"label_count":2,"vocab_size":8})"
      "\n{oops\n");
  CHECK_THROWS_WITH_AS(load_corpus(tmp.file("parse.jsonl")), doctest::Contains("line 2"),
                       ValidationError);

  testutil::write_file(
      tmp.file("dup.jsonl"),
      R"({"languages":["en"],"num_instances":1,"label_count":2,"vocab_size":8})"
      "\n"
      R"({"lang":"en","id":0,"tokens":[1]})"
      "\n"
      R"({"lang":"en","id":0,"tokens":[2]})"
      "\n");
  CHECK_THROWS_WITH_AS(load_corpus(tmp.file("dup.jsonl")), doctest::Contains("duplicate"),
                       ValidationError);

  testutil::write_file(
      tmp.file("token.jsonl"),
      R"({"languages":["en"],"num_instances":1,"label_count":2,"vocab_size":8})"
      "\n"
      R"({"lang":"en","id":0,"tokens":[9]})"
      "\n");
  CHECK_THROWS_AS(load_corpus(tmp.file("token.jsonl")), ValidationError);
}

TEST_CASE("gold labels are all-or-nothing and consistent") {
  testutil::TempDir tmp("corpus_gold");
  testutil::write_file(
      tmp.file("partial.jsonl"),
      R"({"languages":["en"],"num_instances":2,"label_count":2,"vocab_size":8})"
      "\n"
      R"({"lang":"en","id":0,"tokens":[1],"label":1})"
      "\n"
      R"({"lang":"en","id":1,"tokens":[2]})"
      "\n");
  CHECK_THROWS_WITH_AS(load_corpus(tmp.file("partial.jsonl")), doctest::Contains("only 1 of 2"),
                       ValidationError);

  testutil::write_file(
      tmp.file("conflict.jsonl"),
      R"({"languages":["en","fr"],"num_instances":1,"label_count":2,"vocab_size":8})"
      "\n"
      R"({"lang":"en","id":0,"tokens":[1],"label":1})"
      "\n"
      R"({"lang":"fr","id":0,"tokens":[1],"label":0})"
      "\n");
  CHECK_THROWS_WITH_AS(load_corpus(tmp.file("conflict.jsonl")), doctest::Contains("conflicting"),
                       ValidationError);

  testutil::write_file(
      tmp.file("range.jsonl"),
      R"({"languages":["en"],"num_instances":1,"label_count":2,"vocab_size":8})"
      "\n"
      R"({"lang":"en","id":0,"tokens":[1],"label":7})"
      "\n");
  CHECK_THROWS_AS(load_corpus(tmp.file("range.jsonl")), ValidationError);
}

TEST_CASE("corpus and labeled set round-trip through JSONL") {
  const SyntheticTask task = generate_synthetic_task(small_config());
  testutil::TempDir tmp("corpus_rt");

  save_corpus(task.test, tmp.file("test.jsonl"));
  const ParallelCorpus test = load_corpus(tmp.file("test.jsonl"));
  CHECK(test.languages() == task.test.languages());
  CHECK(test.num_instances() == task.test.num_instances());
  REQUIRE(test.has_gold_labels());
  for (int64_t i = 0; i < test.num_instances(); ++i) {
    CHECK(test.gold_label(i) == task.test.gold_label(i));
    for (size_t l = 0; l < test.num_languages(); ++l) {
      CHECK(test.tokens(l, i) == task.test.tokens(l, i));
    }
  }
  // A second save of the loaded corpus is byte-identical.
  save_corpus(test, tmp.file("test2.jsonl"));
  CHECK(testutil::read_file(tmp.file("test.jsonl")) == testutil::read_file(tmp.file("test2.jsonl")));

  save_labeled_set(task.train, tmp.file("train.jsonl"));
  const LabeledSet train = load_labeled_set(tmp.file("train.jsonl"));
  CHECK(train.language == task.train.language);
  REQUIRE(train.examples.size() == task.train.examples.size());
  for (size_t i = 0; i < train.examples.size(); ++i) {
    CHECK(train.examples[i].label == task.train.examples[i].label);
    CHECK(train.examples[i].instance.tokens == task.train.examples[i].instance.tokens);
  }
}

TEST_CASE("language ids reject whitespace and duplicates") {
  CHECK_THROWS_AS(validate_language_id(""), ValidationError);
  CHECK_THROWS_AS(validate_language_id("e n"), ValidationError);
  CHECK_NOTHROW(validate_language_id("en"));

  CorpusData data;
  data.languages = {"en", "en"};
  data.num_instances = 1;
  data.label_count = 2;
  data.vocab_size = 4;
  data.tokens = {{1}, {1}};
  CHECK_THROWS_WITH_AS(ParallelCorpus(std::move(data)), doctest::Contains("duplicate"),
                       ValidationError);
}
