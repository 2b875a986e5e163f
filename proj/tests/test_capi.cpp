#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <cstring>
#include <json.hpp>
#include <sstream>
#include <string>

#include "core/corpus.hpp"
#include "distner/distner.h"
#include "support/synthetic.hpp"

using nlohmann::json;

#ifndef TESTS_DATA_DIR
#error "TESTS_DATA_DIR must point at the bundled fixtures"
#endif

namespace {

// Owns one library-allocated string.
struct CStr {
  char* p = nullptr;
  ~CStr() { distner_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

struct DatasetHandle {
  distner_dataset* h = nullptr;
  ~DatasetHandle() { distner_dataset_free(h); }
};

struct ConfigHandle {
  distner_config* h = nullptr;
  ~ConfigHandle() { distner_config_free(h); }
};

struct ModelHandle {
  distner_model* h = nullptr;
  ~ModelHandle() { distner_model_free(h); }
};

std::string temp_dir() {
  char tmpl[] = "/tmp/distner_capi_XXXXXX";
  char* got = mkdtemp(tmpl);
  REQUIRE(got != nullptr);
  return std::string(got);
}

std::string toy_corpus_text(int sentences, std::uint64_t seed) {
  synthetic::Spec spec;
  spec.sentences = sentences;
  spec.tokens_per_type = 8;
  spec.filler_vocab = 20;
  spec.seed = seed;
  return distner::serialize_conll(synthetic::separable_corpus(spec), false);
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("version and error channel start out clean") {
  REQUIRE(distner_version() != nullptr);
  CHECK(std::strlen(distner_version()) > 0);
  CHECK(std::string(distner_last_error()).empty());
}

TEST_CASE("datasets round trip through parse and serialize") {
  const char* text = "EU B-ORG\nrejects O\n\nPeter B-PER\nBlackburn I-PER\n";
  DatasetHandle ds;
  REQUIRE(distner_dataset_parse(text, 0, 0, &ds.h) == DISTNER_OK);
  CHECK(distner_dataset_sentences(ds.h) == 2);
  CHECK(distner_dataset_repaired_tags(ds.h) == 0);

  CStr out;
  REQUIRE(distner_dataset_serialize(ds.h, 0, &out.p) == DISTNER_OK);
  CHECK(out.str() == text);
}

TEST_CASE("parse failures surface as status codes with line numbers") {
  DatasetHandle ds;
  CHECK(distner_dataset_parse("tok B-X\nbad Z-X\n", 0, 0, &ds.h) == DISTNER_ERR_PARSE);
  CHECK(std::string(distner_last_error()).find("line 2") != std::string::npos);

  CHECK(distner_dataset_parse("only_token\n", 0, 0, &ds.h) == DISTNER_ERR_PARSE);
  CHECK(distner_dataset_parse(nullptr, 0, 0, &ds.h) == DISTNER_ERR_INVALID_ARGUMENT);
  CHECK(distner_dataset_load("/nonexistent/path.conll", 0, 0, &ds.h) == DISTNER_ERR_IO);

  // Orphan continuations: error without repair, counted with it.
  CHECK(distner_dataset_parse("a I-PER\n", 0, 0, &ds.h) == DISTNER_ERR_PARSE);
  REQUIRE(distner_dataset_parse("a I-PER\n", 0, 1, &ds.h) == DISTNER_OK);
  CHECK(distner_dataset_repaired_tags(ds.h) == 1);
}

TEST_CASE("masking via the API moves the annotation to the gold column") {
  DatasetHandle ds;
  REQUIRE(distner_dataset_parse("a B-X\nb O\n\nc B-X\nd I-X\n", 0, 0, &ds.h) ==
          DISTNER_OK);
  DatasetHandle masked;
  REQUIRE(distner_dataset_mask(ds.h, 1.0, 7, &masked.h) == DISTNER_OK);

  CStr three;
  REQUIRE(distner_dataset_serialize(masked.h, 1, &three.p) == DISTNER_OK);
  CHECK(three.str() == "a O B-X\nb O O\n\nc O B-X\nd O I-X\n");

  CHECK(distner_dataset_mask(ds.h, 1.5, 7, &masked.h) == DISTNER_ERR_INVALID_ARGUMENT);
}

TEST_CASE("auditing a dataset against itself reports zero noise") {
  DatasetHandle clean;
  REQUIRE(distner_dataset_parse("a B-X\nb O\n\nc B-Y\nd O\n", 0, 0, &clean.h) ==
          DISTNER_OK);
  DatasetHandle paired;
  REQUIRE(distner_dataset_with_reference(clean.h, clean.h, &paired.h) == DISTNER_OK);

  CStr csv, report;
  REQUIRE(distner_audit(paired.h, "token", &csv.p, &report.p) == DISTNER_OK);
  json j = json::parse(report.str());
  CHECK(j["areas"]["missing"].get<std::int64_t>() == 0);
  CHECK(j["areas"]["wrong"].get<std::int64_t>() == 0);
  CHECK(j["areas"]["correct"].get<std::int64_t>() > 0);
  CHECK(j["entity_prf"]["f1"].get<double>() == 1.0);
  CHECK(csv.str().rfind("observed\\true,X,Y,O,zero_row\n", 0) == 0);

  CHECK(distner_audit(clean.h, "token", &csv.p, &report.p) ==
        DISTNER_ERR_INVALID_ARGUMENT);  // no gold column
  CHECK(distner_audit(paired.h, "word", &csv.p, &report.p) ==
        DISTNER_ERR_INVALID_ARGUMENT);
}

TEST_CASE("config handles accept keys and dump the full option set") {
  ConfigHandle cfg;
  REQUIRE(distner_config_create(&cfg.h) == DISTNER_OK);
  CHECK(distner_config_set(cfg.h, "epochs", "4") == DISTNER_OK);
  CHECK(distner_config_set(cfg.h, "bogus", "1") == DISTNER_ERR_INVALID_ARGUMENT);
  CHECK(std::string(distner_last_error()).find("bogus") != std::string::npos);

  CStr dump;
  REQUIRE(distner_config_dump(cfg.h, &dump.p) == DISTNER_OK);
  CHECK(dump.str().find("epochs=4\n") != std::string::npos);
  CHECK(dump.str().find("seed=unset\n") != std::string::npos);
}

TEST_CASE("a model trains, saves, reloads and predicts through the API") {
  std::string text = toy_corpus_text(60, 71);
  DatasetHandle train_set;
  REQUIRE(distner_dataset_parse(text.c_str(), 0, 0, &train_set.h) == DISTNER_OK);

  ConfigHandle cfg;
  REQUIRE(distner_config_create(&cfg.h) == DISTNER_OK);
  for (auto [k, v] : {std::pair<const char*, const char*>{"seed", "73"},
                      {"epochs", "4"},
                      {"lambda", "0.8"},
                      {"ues", "false"},
                      {"npe", "false"},
                      {"dim", "16"},
                      {"hidden", "32"},
                      {"context_window", "0"},
                      {"max_span_len", "2"},
                      {"dropout", "0.1"},
                      {"threads", "2"}})
    REQUIRE(distner_config_set(cfg.h, k, v) == DISTNER_OK);

  ModelHandle model;
  CStr report;
  REQUIRE(distner_train(train_set.h, nullptr, cfg.h, nullptr, &model.h, &report.p) ==
          DISTNER_OK);
  json rep = json::parse(report.str());
  CHECK(rep["epochs"].size() == 4);
  CHECK(rep["best_epoch"].get<int>() == 4);
  CHECK(rep["selection_basis"].get<std::string>() == "final");
  CHECK(rep["epochs"][0]["instances"].get<std::int64_t>() > 0);

  std::string dir = temp_dir();
  std::string model_path = dir + "/model.bin";
  REQUIRE(distner_model_save(model.h, model_path.c_str()) == DISTNER_OK);
  ModelHandle loaded;
  REQUIRE(distner_model_load(model_path.c_str(), &loaded.h) == DISTNER_OK);

  CStr bio_a, bio_b;
  REQUIRE(distner_model_predict_bio(model.h, train_set.h, 2, &bio_a.p) == DISTNER_OK);
  REQUIRE(distner_model_predict_bio(loaded.h, train_set.h, 1, &bio_b.p) == DISTNER_OK);
  CHECK(bio_a.str() == bio_b.str());

  // The reloaded model scores the corpus it was fit on nearly perfectly.
  DatasetHandle pred;
  REQUIRE(distner_dataset_parse(bio_b.p, 0, 0, &pred.h) == DISTNER_OK);
  CStr eval;
  REQUIRE(distner_eval_bio(pred.h, train_set.h, &eval.p) == DISTNER_OK);
  json ej = json::parse(eval.str());
  CHECK(ej["entity"]["f1"].get<double>() >= 0.95);

  CStr metrics;
  REQUIRE(distner_model_evaluate(loaded.h, train_set.h, 2, &metrics.p) == DISTNER_OK);
  json mj = json::parse(metrics.str());
  CHECK(mj["entity"]["f1"].get<double>() ==
        doctest::Approx(ej["entity"]["f1"].get<double>()).epsilon(1e-12));

  // Scored span predictions parse as JSONL and point at real sentences.
  CStr spans;
  REQUIRE(distner_model_predict(loaded.h, train_set.h, 2, &spans.p) == DISTNER_OK);
  {
    std::istringstream in(spans.str());
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      CHECK(j.contains("score"));
      CHECK(j["sentence_id"].get<int>() >= 0);
      CHECK(j["sentence_id"].get<int>() < 60);
    }
  }

  // One confidence record per observed positive span.
  CStr conf;
  REQUIRE(distner_model_positive_confidences(loaded.h, train_set.h, 2, &conf.p) ==
          DISTNER_OK);
  distner::Dataset parsed = distner::parse_conll(text, false, false);
  std::int64_t positives = 0;
  for (const auto& s : parsed.sentences)
    positives += static_cast<std::int64_t>(distner::bio_to_spans(s.observed).size());
  CHECK(count_lines(conf.str()) == positives);

  std::string cleanup = "rm -rf " + dir;
  CHECK(std::system(cleanup.c_str()) == 0);
}

TEST_CASE("training failures map to the abort status") {
  ConfigHandle cfg;
  REQUIRE(distner_config_create(&cfg.h) == DISTNER_OK);

  DatasetHandle empty;
  REQUIRE(distner_dataset_parse("", 0, 0, &empty.h) == DISTNER_OK);
  ModelHandle model;
  CStr report;

  // Unseeded config first: invalid argument, not an abort.
  CHECK(distner_train(empty.h, nullptr, cfg.h, nullptr, &model.h, &report.p) ==
        DISTNER_ERR_INVALID_ARGUMENT);
  REQUIRE(distner_config_set(cfg.h, "seed", "1") == DISTNER_OK);
  CHECK(distner_train(empty.h, nullptr, cfg.h, nullptr, &model.h, &report.p) ==
        DISTNER_ERR_TRAINING_ABORT);
  CHECK(std::string(distner_last_error()).find("no sentences") != std::string::npos);
}

TEST_CASE("selection produces a decision the trainer accepts back") {
  std::string text = toy_corpus_text(10, 79);
  DatasetHandle ds;
  REQUIRE(distner_dataset_parse(text.c_str(), 0, 0, &ds.h) == DISTNER_OK);

  ConfigHandle cfg;
  REQUIRE(distner_config_create(&cfg.h) == DISTNER_OK);
  for (auto [k, v] : {std::pair<const char*, const char*>{"seed", "83"},
                      {"epochs", "1"},
                      {"ues", "false"},
                      {"npe", "false"},
                      {"k_folds", "2"},
                      {"dim", "8"},
                      {"hidden", "16"},
                      {"max_span_len", "2"},
                      {"context_window", "0"}})
    REQUIRE(distner_config_set(cfg.h, k, v) == DISTNER_OK);

  CStr decision;
  REQUIRE(distner_select(ds.h, cfg.h, "both", "span", &decision.p) == DISTNER_OK);

  std::istringstream in(decision.str());
  std::string first;
  REQUIRE(std::getline(in, first));
  json meta = json::parse(first);
  CHECK(meta["type"].get<std::string>() == "meta");
  CHECK(meta["strategy"].get<std::string>() == "both");
  CHECK(meta["level"].get<std::string>() == "span");
  CHECK(meta["k_folds"].get<int>() == 2);
  REQUIRE(meta["classes"].size() == 4);  // three entity types plus O
  double mass = 0.0;
  for (const auto& row : meta["q_hat"])
    for (const auto& cell : row) mass += cell.get<double>();
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));

  std::int64_t removed = meta["removed"].get<std::int64_t>();
  int body = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++body;
  CHECK(body == removed);

  // The decision feeds straight back into training as an exclusion list.
  REQUIRE(distner_config_set(cfg.h, "epochs", "2") == DISTNER_OK);
  ModelHandle model;
  CStr report;
  REQUIRE(distner_train(ds.h, nullptr, cfg.h, decision.p, &model.h, &report.p) ==
          DISTNER_OK);

  CHECK(distner_select(ds.h, cfg.h, "rbx", "span", &decision.p) ==
        DISTNER_ERR_INVALID_ARGUMENT);
  CHECK(distner_select(ds.h, cfg.h, "rbc", "spans", &decision.p) ==
        DISTNER_ERR_INVALID_ARGUMENT);
}

TEST_CASE("evaluating a prediction against itself is perfect") {
  DatasetHandle ds;
  REQUIRE(distner_dataset_parse("a B-X\nb O\n\nc B-Y\nd I-Y\n", 0, 0, &ds.h) ==
          DISTNER_OK);
  CStr metrics;
  REQUIRE(distner_eval_bio(ds.h, ds.h, &metrics.p) == DISTNER_OK);
  json j = json::parse(metrics.str());
  CHECK(j["entity"]["f1"].get<double>() == 1.0);
  CHECK(j["token"]["f1"].get<double>() == 1.0);

  // Token mismatch between prediction and reference is an input error.
  DatasetHandle other;
  REQUIRE(distner_dataset_parse("a B-X\nZZZ O\n\nc B-Y\nd I-Y\n", 0, 0, &other.h) ==
          DISTNER_OK);
  CHECK(distner_eval_bio(ds.h, other.h, &metrics.p) == DISTNER_ERR_INVALID_ARGUMENT);
}

TEST_CASE("scored spans evaluate with a threshold search over the reference") {
  // Reference with gold: the observed span on sentence 0 is wrong (noisy), the
  // one on sentence 1 is right.
  DatasetHandle ref;
  REQUIRE(distner_dataset_parse("a B-X O\nb O O\n\nc B-Y B-Y\nd O O\n", 1, 0, &ref.h) ==
          DISTNER_OK);

  std::string spans =
      "{\"sentence_id\":0,\"start\":0,\"end\":0,\"label\":\"X\",\"score\":0.2}\n"
      "{\"sentence_id\":1,\"start\":0,\"end\":0,\"label\":\"Y\",\"score\":0.9}\n";
  CStr metrics;
  REQUIRE(distner_eval_spans(spans.c_str(), ref.h, 1, &metrics.p) == DISTNER_OK);
  json j = json::parse(metrics.str());
  CHECK(j["spans"].get<int>() == 2);
  // Flagging everything below 0.201 catches the noisy span and nothing else.
  CHECK(j["tau_search"]["tau"].get<double>() == doctest::Approx(0.201));
  CHECK(j["tau_search"]["ne_recall"].get<double>() == 1.0);
  CHECK(j["tau_search"]["ne_precision"].get<double>() == 1.0);

  // Without scores the search cannot run.
  std::string unscored = "{\"sentence_id\":0,\"start\":0,\"end\":0,\"label\":\"X\"}\n";
  CHECK(distner_eval_spans(unscored.c_str(), ref.h, 1, &metrics.p) ==
        DISTNER_ERR_INVALID_ARGUMENT);
  REQUIRE(distner_eval_spans(unscored.c_str(), ref.h, 0, &metrics.p) == DISTNER_OK);
}

TEST_CASE("model responses align onto the bundled token file") {
  std::string response =
      distner::read_file(std::string(TESTS_DATA_DIR) + "/llm_response.jsonl");
  DatasetHandle tokens;
  REQUIRE(distner_dataset_load_tokens(
              (std::string(TESTS_DATA_DIR) + "/llm_tokens.txt").c_str(), &tokens.h) ==
          DISTNER_OK);
  REQUIRE(distner_dataset_sentences(tokens.h) == 1);

  CStr conll, report;
  REQUIRE(distner_align(response.c_str(), tokens.h, &conll.p, &report.p) == DISTNER_OK);
  CHECK(conll.str().find("England B-LOC\n") == 0);
  CHECK(conll.str().find("The B-LOC\nOval I-LOC\n") != std::string::npos);

  std::istringstream in(report.str());
  std::string line;
  json summary;
  int records = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (j.contains("type") && j["type"] == "summary")
      summary = j;
    else
      ++records;
  }
  CHECK(records == 1);
  CHECK(summary["exact"].get<int>() == 1);
  CHECK(summary["matched_tokens"].get<int>() == 25);
  CHECK(summary["invalid_tags"].get<int>() == 0);

  // A record for an unknown sentence is rejected.
  std::string bad = "{\"sentence_id\": 9, \"payload\": \"[(\\\"a\\\", \\\"O\\\")]\"}";
  CHECK(distner_align(bad.c_str(), tokens.h, &conll.p, &report.p) ==
        DISTNER_ERR_INVALID_ARGUMENT);
}
