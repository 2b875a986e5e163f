// Command line front end. All real work happens behind the C API in
// libdistner; this file only parses arguments, moves file contents around and
// maps status codes to exit codes.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "distner/distner.h"

namespace {

struct ApiError {
  distner_status status;
  std::string message;
};

void check(distner_status status) {
  if (status != DISTNER_OK) throw ApiError{status, distner_last_error()};
}

[[noreturn]] void usage_error(const std::string& message) {
  throw ApiError{DISTNER_ERR_INVALID_ARGUMENT, message};
}

const char* status_name(distner_status s) {
  switch (s) {
    case DISTNER_OK: return "ok";
    case DISTNER_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case DISTNER_ERR_PARSE: return "parse_error";
    case DISTNER_ERR_IO: return "io_error";
    case DISTNER_ERR_TRAINING_ABORT: return "training_abort";
    case DISTNER_ERR_INTERNAL: return "internal_error";
  }
  return "internal_error";
}

int exit_code_of(distner_status s) {
  switch (s) {
    case DISTNER_OK: return 0;
    case DISTNER_ERR_INVALID_ARGUMENT:
    case DISTNER_ERR_PARSE:
    case DISTNER_ERR_IO: return 2;
    case DISTNER_ERR_TRAINING_ABORT: return 3;
    case DISTNER_ERR_INTERNAL: return 1;
  }
  return 1;
}

void print_error(distner_status s, const std::string& message) {
  nlohmann::json j;
  j["status"] = status_name(s);
  j["message"] = message;
  std::cerr << j.dump() << '\n';
}

// Owners for everything the library hands out.
struct StringOut {
  char* ptr = nullptr;
  ~StringOut() { distner_string_free(ptr); }
  std::string str() const { return ptr ? std::string(ptr) : std::string(); }
};

struct DatasetHandle {
  distner_dataset* ptr = nullptr;
  DatasetHandle() = default;
  DatasetHandle(const DatasetHandle&) = delete;
  DatasetHandle& operator=(const DatasetHandle&) = delete;
  ~DatasetHandle() { distner_dataset_free(ptr); }
};

struct ConfigHandle {
  distner_config* ptr = nullptr;
  ConfigHandle() { check(distner_config_create(&ptr)); }
  ConfigHandle(const ConfigHandle&) = delete;
  ConfigHandle& operator=(const ConfigHandle&) = delete;
  ~ConfigHandle() { distner_config_free(ptr); }
  void set(const std::string& key, const std::string& value) {
    check(distner_config_set(ptr, key.c_str(), value.c_str()));
  }
};

struct ModelHandle {
  distner_model* ptr = nullptr;
  ModelHandle() = default;
  ModelHandle(const ModelHandle&) = delete;
  ModelHandle& operator=(const ModelHandle&) = delete;
  ~ModelHandle() { distner_model_free(ptr); }
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) usage_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::filesystem::path ensure_out_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) usage_error("cannot create output directory " + dir + ": " + ec.message());
  return p;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) usage_error("cannot write " + path.string());
  out << content;
  if (!out) usage_error("failed while writing " + path.string());
}

// Shared config plumbing: defaults, then config file, then --set pairs, then
// the explicit flags, each layer overriding the previous one.
struct ConfigArgs {
  std::string config_file;
  std::vector<std::string> sets;
  std::string seed;  // kept as text so 64-bit values survive untouched
  int threads = 1;
  bool no_ues = false;
  bool no_npe = false;
  bool dump = false;
};

void add_config_options(CLI::App* cmd, ConfigArgs& a, bool with_ablation_flags) {
  cmd->add_option("--config", a.config_file, "key=value config file");
  cmd->add_option("--set", a.sets, "override one config key (key=value), repeatable");
  cmd->add_option("--seed", a.seed, "root random seed (required, no clock default)");
  cmd->add_option("--threads", a.threads, "worker threads (default 1)");
  if (with_ablation_flags) {
    cmd->add_flag("--no-ues", a.no_ues, "disable confident-negative selection");
    cmd->add_flag("--no-npe", a.no_npe, "disable confident-positive selection");
  }
  cmd->add_flag("--dump-config", a.dump, "print the assembled config and exit");
}

void apply_config_args(ConfigHandle& cfg, const ConfigArgs& a) {
  if (!a.config_file.empty())
    check(distner_config_apply_file(cfg.ptr, a.config_file.c_str()));
  for (const std::string& kv : a.sets) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos) usage_error("--set wants key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!a.seed.empty()) cfg.set("seed", a.seed);
  cfg.set("threads", std::to_string(a.threads));
  if (a.no_ues) cfg.set("ues", "false");
  if (a.no_npe) cfg.set("npe", "false");
}

bool handle_dump(const ConfigHandle& cfg, const ConfigArgs& a) {
  if (!a.dump) return false;
  StringOut text;
  check(distner_config_dump(cfg.ptr, &text.ptr));
  std::cout << text.str();
  return true;
}

/* ---- audit ------------------------------------------------------------ */

struct AuditArgs {
  std::string input, gold, granularity = "token", out_dir;
  bool no_repair = false;
};

void run_audit(const AuditArgs& a) {
  std::filesystem::path dir = ensure_out_dir(a.out_dir);
  DatasetHandle ds;
  if (a.gold.empty()) {
    check(distner_dataset_load(a.input.c_str(), 1, a.no_repair ? 0 : 1, &ds.ptr));
  } else {
    DatasetHandle noisy, truth;
    check(distner_dataset_load(a.input.c_str(), 0, a.no_repair ? 0 : 1, &noisy.ptr));
    check(distner_dataset_load(a.gold.c_str(), 0, a.no_repair ? 0 : 1, &truth.ptr));
    check(distner_dataset_with_reference(noisy.ptr, truth.ptr, &ds.ptr));
  }
  StringOut csv, report;
  check(distner_audit(ds.ptr, a.granularity.c_str(), &csv.ptr, &report.ptr));
  write_text(dir / "matrix.csv", csv.str());
  write_text(dir / "audit.json", report.str());
  nlohmann::json j = nlohmann::json::parse(report.str());
  std::printf("audited %lld sentences: correct %lld, missing %lld, wrong %lld\n",
              static_cast<long long>(j["sentences"].get<std::int64_t>()),
              static_cast<long long>(j["areas"]["correct"].get<std::int64_t>()),
              static_cast<long long>(j["areas"]["missing"].get<std::int64_t>()),
              static_cast<long long>(j["areas"]["wrong"].get<std::int64_t>()));
}

/* ---- mask ------------------------------------------------------------- */

struct MaskArgs {
  std::string input, out_dir, seed;
  double p = 0.0;
  double flip_q = 0.0;
  bool no_repair = false;
};

void run_mask(const MaskArgs& a) {
  std::filesystem::path dir = ensure_out_dir(a.out_dir);
  std::uint64_t seed = 0;
  try {
    std::size_t used = 0;
    seed = std::stoull(a.seed, &used);
    if (used != a.seed.size()) throw std::invalid_argument(a.seed);
  } catch (const std::exception&) {
    usage_error("--seed wants a non-negative integer, got '" + a.seed + "'");
  }

  DatasetHandle original;
  check(distner_dataset_load(a.input.c_str(), 0, a.no_repair ? 0 : 1, &original.ptr));

  // Flip types first (needs the entity labels intact), then hide spans. The
  // final gold column is always the uncorrupted input annotation.
  DatasetHandle flipped;
  const distner_dataset* current = original.ptr;
  if (a.flip_q > 0.0) {
    check(distner_dataset_flip(current, a.flip_q, seed, &flipped.ptr));
    current = flipped.ptr;
  }
  DatasetHandle masked;
  check(distner_dataset_mask(current, a.p, seed, &masked.ptr));
  DatasetHandle final_ds;
  check(distner_dataset_with_reference(masked.ptr, original.ptr, &final_ds.ptr));
  check(distner_dataset_save(final_ds.ptr, (dir / "masked.conll").string().c_str(), 1));
  std::printf("wrote %s\n", (dir / "masked.conll").string().c_str());
}

/* ---- train ------------------------------------------------------------ */

struct TrainArgs {
  std::string train, dev, test, embeddings, prune, out_dir;
  bool train_with_gold = false;
  bool no_repair = false;
  ConfigArgs config;
};

void load_with_embeddings(const std::string& path, int has_gold, int repair,
                          const std::string& embeddings, DatasetHandle& out) {
  check(distner_dataset_load(path.c_str(), has_gold, repair, &out.ptr));
  if (!embeddings.empty())
    check(distner_dataset_attach_embeddings(out.ptr, embeddings.c_str()));
}

void run_train(const TrainArgs& a) {
  ConfigHandle cfg;
  if (!a.embeddings.empty()) cfg.set("trainable_embeddings", "false");
  apply_config_args(cfg, a.config);
  if (handle_dump(cfg, a.config)) return;
  if (a.train.empty()) usage_error("--train is required");
  std::filesystem::path dir = ensure_out_dir(a.out_dir);

  const int repair = a.no_repair ? 0 : 1;
  DatasetHandle train_ds;
  load_with_embeddings(a.train, a.train_with_gold ? 1 : 0, repair, a.embeddings, train_ds);
  DatasetHandle dev_ds;
  if (!a.dev.empty()) load_with_embeddings(a.dev, 0, repair, a.embeddings, dev_ds);

  std::optional<std::string> prune_text;
  if (!a.prune.empty()) prune_text = read_text(a.prune);

  ModelHandle model;
  StringOut report;
  check(distner_train(train_ds.ptr, dev_ds.ptr, cfg.ptr,
                      prune_text ? prune_text->c_str() : nullptr, &model.ptr,
                      &report.ptr));
  check(distner_model_save(model.ptr, (dir / "model.bin").string().c_str()));
  write_text(dir / "report.json", report.str());

  nlohmann::json rep = nlohmann::json::parse(report.str());
  std::ostringstream epochs;
  for (const auto& e : rep["epochs"]) epochs << e.dump() << '\n';
  write_text(dir / "epochs.jsonl", epochs.str());

  StringOut confidences;
  check(distner_model_positive_confidences(model.ptr, train_ds.ptr, a.config.threads,
                                           &confidences.ptr));
  write_text(dir / "confidences.jsonl", confidences.str());

  if (!a.test.empty()) {
    DatasetHandle test_ds;
    load_with_embeddings(a.test, 0, repair, a.embeddings, test_ds);
    StringOut metrics, predictions;
    check(distner_model_evaluate(model.ptr, test_ds.ptr, a.config.threads, &metrics.ptr));
    check(distner_model_predict(model.ptr, test_ds.ptr, a.config.threads,
                                &predictions.ptr));
    write_text(dir / "metrics.json", metrics.str());
    write_text(dir / "predictions.jsonl", predictions.str());
    nlohmann::json m = nlohmann::json::parse(metrics.str());
    std::printf("best epoch %d (%s); test F1 %.4f\n", rep["best_epoch"].get<int>(),
                rep["selection_basis"].get<std::string>().c_str(),
                m["entity"]["f1"].get<double>());
  } else {
    std::printf("best epoch %d (%s)\n", rep["best_epoch"].get<int>(),
                rep["selection_basis"].get<std::string>().c_str());
  }
}

/* ---- select ----------------------------------------------------------- */

struct SelectArgs {
  std::string train, embeddings, out_dir;
  std::string strategy = "both";
  std::string level = "span";
  bool no_repair = false;
  ConfigArgs config;
};

void run_select(const SelectArgs& a) {
  ConfigHandle cfg;
  // The cross-validation harness scores spans with plain negative-sampling
  // models; the selection mechanisms stay off unless explicitly requested.
  cfg.set("ues", "false");
  cfg.set("npe", "false");
  if (!a.embeddings.empty()) cfg.set("trainable_embeddings", "false");
  apply_config_args(cfg, a.config);
  if (handle_dump(cfg, a.config)) return;
  if (a.train.empty()) usage_error("--train is required");
  std::filesystem::path dir = ensure_out_dir(a.out_dir);

  DatasetHandle train_ds;
  load_with_embeddings(a.train, 0, a.no_repair ? 0 : 1, a.embeddings, train_ds);

  StringOut decision;
  check(distner_select(train_ds.ptr, cfg.ptr, a.strategy.c_str(), a.level.c_str(),
                       &decision.ptr));
  write_text(dir / "decision.jsonl", decision.str());

  std::istringstream lines(decision.str());
  std::string meta_line;
  std::getline(lines, meta_line);
  nlohmann::json meta = nlohmann::json::parse(meta_line);
  std::printf("flagged %lld of %lld spans (%s, %s level)\n",
              static_cast<long long>(meta["removed"].get<std::int64_t>()),
              static_cast<long long>(meta["examples"].get<std::int64_t>()),
              a.strategy.c_str(), a.level.c_str());
}

/* ---- eval ------------------------------------------------------------- */

struct EvalArgs {
  std::string pred, ref, out_dir;
  bool ref_has_gold = false;
  bool tau_search = false;
  bool no_repair = false;
};

void run_eval(const EvalArgs& a) {
  std::filesystem::path dir = ensure_out_dir(a.out_dir);
  DatasetHandle ref;
  check(distner_dataset_load(a.ref.c_str(), a.ref_has_gold ? 1 : 0, a.no_repair ? 0 : 1,
                             &ref.ptr));

  std::string pred_text = read_text(a.pred);
  std::size_t first = pred_text.find_first_not_of(" \t\r\n");
  bool spans_mode = first != std::string::npos && pred_text[first] == '{';

  StringOut metrics;
  if (spans_mode) {
    check(distner_eval_spans(pred_text.c_str(), ref.ptr, a.tau_search ? 1 : 0,
                             &metrics.ptr));
  } else {
    if (a.tau_search)
      usage_error("--tau-search needs scored span records, not a token file");
    DatasetHandle pred;
    check(distner_dataset_parse(pred_text.c_str(), 0, a.no_repair ? 0 : 1, &pred.ptr));
    check(distner_eval_bio(pred.ptr, ref.ptr, &metrics.ptr));
  }
  write_text(dir / "metrics.json", metrics.str());
  nlohmann::json m = nlohmann::json::parse(metrics.str());
  if (m.contains("tau_search")) {
    std::printf("entity F1 %.4f; threshold %.3f (flag recall %.4f, precision %.4f)\n",
                m["entity"]["f1"].get<double>(), m["tau_search"]["tau"].get<double>(),
                m["tau_search"]["ne_recall"].get<double>(),
                m["tau_search"]["ne_precision"].get<double>());
  } else {
    std::printf("entity F1 %.4f\n", m["entity"]["f1"].get<double>());
  }
}

/* ---- align ------------------------------------------------------------ */

struct AlignArgs {
  std::string outputs, tokens, out_dir;
};

void run_align(const AlignArgs& a) {
  std::filesystem::path dir = ensure_out_dir(a.out_dir);
  DatasetHandle tokens;
  check(distner_dataset_load_tokens(a.tokens.c_str(), &tokens.ptr));
  std::string outputs_text = read_text(a.outputs);

  StringOut conll, report;
  check(distner_align(outputs_text.c_str(), tokens.ptr, &conll.ptr, &report.ptr));
  write_text(dir / "aligned.conll", conll.str());
  write_text(dir / "align_report.jsonl", report.str());

  // The summary record is the last line of the report.
  std::istringstream lines(report.str());
  std::string line, last;
  while (std::getline(lines, line))
    if (!line.empty()) last = line;
  nlohmann::json summary = nlohmann::json::parse(last);
  std::printf("aligned %lld sentences: %lld exact, %lld repaired, %lld fallback\n",
              static_cast<long long>(summary["sentences"].get<std::int64_t>()),
              static_cast<long long>(summary["exact"].get<std::int64_t>()),
              static_cast<long long>(summary["lcs_repaired"].get<std::int64_t>()),
              static_cast<long long>(summary["fallback_O"].get<std::int64_t>()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Span-level NER trainer for distantly annotated corpora: audits "
               "annotation noise, trains with confident span selection, prunes "
               "mislabeled entities, and aligns free-form tagger output."};
  app.require_subcommand(1);

  AuditArgs audit;
  CLI::App* cmd_audit = app.add_subcommand(
      "audit", "Compare an annotation against a reference: transition matrix, "
               "error decomposition, direct F1");
  cmd_audit->add_option("--input", audit.input, "annotated CoNLL file")->required();
  cmd_audit->add_option("--gold", audit.gold,
                        "reference CoNLL file (omit when --input has 3 columns)");
  cmd_audit->add_option("--granularity", audit.granularity, "token or span");
  cmd_audit->add_option("--out-dir", audit.out_dir, "output directory")->required();
  cmd_audit->add_flag("--no-repair", audit.no_repair, "reject orphan I- tags");

  MaskArgs mask;
  CLI::App* cmd_mask = app.add_subcommand(
      "mask", "Corrupt a clean annotation: hide whole entities, optionally flip "
              "entity types; keeps the original as the gold column");
  cmd_mask->add_option("--input", mask.input, "clean 2-column CoNLL file")->required();
  cmd_mask->add_option("--p", mask.p, "probability of hiding each entity");
  cmd_mask->add_option("--flip-q", mask.flip_q,
                       "probability of retyping each entity (applied before hiding)");
  cmd_mask->add_option("--seed", mask.seed, "root random seed")->required();
  cmd_mask->add_option("--out-dir", mask.out_dir, "output directory")->required();
  cmd_mask->add_flag("--no-repair", mask.no_repair, "reject orphan I- tags");

  TrainArgs train;
  CLI::App* cmd_train = app.add_subcommand(
      "train", "Train the span classifier with confident-example selection");
  cmd_train->add_option("--train", train.train, "training CoNLL file");
  cmd_train->add_flag("--train-with-gold", train.train_with_gold,
                      "training file has a third gold column (enables hidden-entity "
                      "diagnostics)");
  cmd_train->add_option("--dev", train.dev, "development CoNLL file for model selection");
  cmd_train->add_option("--test", train.test, "test CoNLL file for final metrics");
  cmd_train->add_option("--embeddings", train.embeddings,
                        "frozen token vectors (sentence_id token_index v1..vd)");
  cmd_train->add_option("--prune", train.prune, "decision file from `select`; its spans "
                                                "or sentences are excluded");
  cmd_train->add_option("--out-dir", train.out_dir, "output directory");
  cmd_train->add_flag("--no-repair", train.no_repair, "reject orphan I- tags");
  add_config_options(cmd_train, train.config, true);

  SelectArgs sel;
  CLI::App* cmd_select = app.add_subcommand(
      "select", "Flag mislabeled entity spans via cross-validated confidence "
                "calibration and ranked pruning");
  cmd_select->add_option("--train", sel.train, "training CoNLL file");
  cmd_select->add_option("--embeddings", sel.embeddings, "frozen token vectors");
  cmd_select->add_option("--strategy", sel.strategy, "rbc, rbnr or both");
  cmd_select->add_option("--level", sel.level, "span or sentence");
  cmd_select->add_option("--out-dir", sel.out_dir, "output directory");
  cmd_select->add_flag("--no-repair", sel.no_repair, "reject orphan I- tags");
  add_config_options(cmd_select, sel.config, false);

  EvalArgs eval;
  CLI::App* cmd_eval = app.add_subcommand(
      "eval", "Score predictions (span records or CoNLL) against a reference");
  cmd_eval->add_option("--pred", eval.pred, "prediction file (JSONL span records or "
                                            "2-column CoNLL)")->required();
  cmd_eval->add_option("--ref", eval.ref, "reference CoNLL file")->required();
  cmd_eval->add_flag("--ref-with-gold", eval.ref_has_gold,
                     "reference has observed + gold columns (needed for --tau-search)");
  cmd_eval->add_flag("--tau-search", eval.tau_search,
                     "grid-search the confidence threshold that best flags mislabeled "
                     "spans");
  cmd_eval->add_option("--out-dir", eval.out_dir, "output directory")->required();
  cmd_eval->add_flag("--no-repair", eval.no_repair, "reject orphan I- tags");

  AlignArgs align;
  CLI::App* cmd_align = app.add_subcommand(
      "align", "Map free-form (word, tag) tuples from a tagger response onto the "
               "original tokens");
  cmd_align->add_option("--outputs", align.outputs,
                        "JSONL of {sentence_id, payload} records")->required();
  cmd_align->add_option("--tokens", align.tokens, "token source file")->required();
  cmd_align->add_option("--out-dir", align.out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error(DISTNER_ERR_INVALID_ARGUMENT, e.what());
    return 2;
  }

  try {
    if (app.got_subcommand(cmd_audit)) {
      run_audit(audit);
    } else if (app.got_subcommand(cmd_mask)) {
      run_mask(mask);
    } else if (app.got_subcommand(cmd_train)) {
      if (!train.config.dump && train.out_dir.empty())
        usage_error("--out-dir is required");
      run_train(train);
    } else if (app.got_subcommand(cmd_select)) {
      if (!sel.config.dump && sel.out_dir.empty()) usage_error("--out-dir is required");
      run_select(sel);
    } else if (app.got_subcommand(cmd_eval)) {
      run_eval(eval);
    } else if (app.got_subcommand(cmd_align)) {
      run_align(align);
    }
  } catch (const ApiError& e) {
    print_error(e.status, e.message);
    return exit_code_of(e.status);
  } catch (const std::exception& e) {
    print_error(DISTNER_ERR_INTERNAL, e.what());
    return 1;
  }
  return 0;
}
