#include "distner/distner.h"

#include <cstdlib>
#include <cstring>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "core/common.hpp"
#include "core/config.hpp"
#include "core/corpus.hpp"
#include "core/io.hpp"
#include "core/llm_ingest.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"
#include "core/noise.hpp"
#include "core/selection.hpp"
#include "core/trainer.hpp"

using nlohmann::json;

struct distner_dataset {
  distner::Dataset ds;
};

struct distner_config {
  distner::TrainerConfig cfg;
};

struct distner_model {
  distner::Model model;
};

namespace {

thread_local std::string g_last_error;

distner_status status_of(distner::ErrorKind kind) {
  switch (kind) {
    case distner::ErrorKind::InvalidArgument: return DISTNER_ERR_INVALID_ARGUMENT;
    case distner::ErrorKind::Parse: return DISTNER_ERR_PARSE;
    case distner::ErrorKind::Io: return DISTNER_ERR_IO;
    case distner::ErrorKind::TrainingAbort: return DISTNER_ERR_TRAINING_ABORT;
    case distner::ErrorKind::Internal: return DISTNER_ERR_INTERNAL;
  }
  return DISTNER_ERR_INTERNAL;
}

template <typename Fn>
distner_status guarded(Fn&& fn) {
  try {
    fn();
    return DISTNER_OK;
  } catch (const distner::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DISTNER_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size() + 1);
  return p;
}

void require(bool ok, const char* what) {
  if (!ok) distner::fail(distner::ErrorKind::InvalidArgument, what);
}

json prf_json(const distner::Prf& p) {
  json j;
  j["precision"] = p.precision;
  j["recall"] = p.recall;
  j["f1"] = p.f1;
  j["tp"] = p.tp;
  j["fp"] = p.fp;
  j["fn"] = p.fn;
  return j;
}

std::vector<std::vector<distner::BioTag>> reference_column(const distner::Dataset& ds) {
  std::vector<std::vector<distner::BioTag>> out;
  out.reserve(ds.sentences.size());
  for (const auto& s : ds.sentences) out.push_back(s.gold ? *s.gold : s.observed);
  return out;
}

// Observed entity label of a span, for naming removed spans in reports.
std::string observed_label_name(const distner::Dataset& ds,
                                const distner::SpanKey& key) {
  for (const auto& s : ds.sentences) {
    if (s.id != key.sentence_id) continue;
    for (const auto& sp : distner::bio_to_spans(s.observed))
      if (sp.start == key.start && sp.end == key.end) return ds.labels.name(sp.label);
  }
  return "O";
}

distner::Exclusions parse_prune_jsonl(const std::string& text) {
  distner::Exclusions excl;
  std::string level = "span";
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      distner::fail_parse(line_no, std::string("bad prune record: ") + e.what());
    }
    if (j.contains("type") && j["type"] == "meta") {
      if (j.contains("level")) level = j["level"].get<std::string>();
      if (j.contains("removed_sentences"))
        for (const auto& sid : j["removed_sentences"])
          excl.sentences.insert(sid.get<int>());
      continue;
    }
    if (!j.contains("sentence_id") || !j.contains("start") || !j.contains("end"))
      distner::fail_parse(line_no, "prune record needs sentence_id, start and end");
    excl.spans.insert(distner::SpanKey{j["sentence_id"].get<int>(), j["start"].get<int>(),
                                       j["end"].get<int>()});
  }
  if (level == "sentence") excl.spans.clear();
  return excl;
}

json epoch_json(const distner::EpochReport& r) {
  json j;
  j["epoch"] = r.epoch;
  j["loss"] = r.loss;
  j["instances"] = r.instances;
  j["n_ce"] = r.n_ce;
  j["sampling_clamped"] = r.sampling_clamped;
  if (r.p_hat) {
    j["p_hat"] = *r.p_hat;
    json t = json::object();
    for (const auto& [name, value] : r.thresholds) t[name] = value;
    j["thresholds"] = t;
  }
  if (r.n_hat) j["n_hat"] = *r.n_hat;
  if (r.dev) j["dev"] = prf_json(*r.dev);
  if (r.fn_recall) j["fn_recall"] = *r.fn_recall;
  if (r.fn_precision) j["fn_precision"] = *r.fn_precision;
  return j;
}

}  // namespace

extern "C" {

const char* distner_last_error(void) { return g_last_error.c_str(); }

const char* distner_version(void) { return "1.0.0"; }

void distner_string_free(char* s) { std::free(s); }

/* ---- Datasets --------------------------------------------------------- */

distner_status distner_dataset_load(const char* path, int has_gold, int repair,
                                    distner_dataset** out) {
  return guarded([&] {
    require(path && out, "path and out must not be null");
    auto* h = new distner_dataset{
        distner::parse_conll(distner::read_file(path), has_gold != 0, repair != 0)};
    *out = h;
  });
}

distner_status distner_dataset_parse(const char* text, int has_gold, int repair,
                                     distner_dataset** out) {
  return guarded([&] {
    require(text && out, "text and out must not be null");
    *out = new distner_dataset{distner::parse_conll(text, has_gold != 0, repair != 0)};
  });
}

distner_status distner_dataset_load_tokens(const char* path, distner_dataset** out) {
  return guarded([&] {
    require(path && out, "path and out must not be null");
    *out = new distner_dataset{distner::parse_tokens_only(distner::read_file(path))};
  });
}

distner_status distner_dataset_serialize(const distner_dataset* ds, int write_gold,
                                         char** out_text) {
  return guarded([&] {
    require(ds && out_text, "dataset and out must not be null");
    *out_text = dup_string(distner::serialize_conll(ds->ds, write_gold != 0));
  });
}

distner_status distner_dataset_save(const distner_dataset* ds, const char* path,
                                    int write_gold) {
  return guarded([&] {
    require(ds && path, "dataset and path must not be null");
    distner::write_file(path, distner::serialize_conll(ds->ds, write_gold != 0));
  });
}

distner_status distner_dataset_attach_embeddings(distner_dataset* ds, const char* path) {
  return guarded([&] {
    require(ds && path, "dataset and path must not be null");
    ds->ds.embeddings = std::make_shared<const distner::FileEmbeddings>(
        distner::FileEmbeddings::load(path));
  });
}

distner_status distner_dataset_mask(const distner_dataset* ds, double p, uint64_t seed,
                                    distner_dataset** out) {
  return guarded([&] {
    require(ds && out, "dataset and out must not be null");
    *out = new distner_dataset{distner::mask_entities(ds->ds, p, seed)};
  });
}

distner_status distner_dataset_flip(const distner_dataset* ds, double q, uint64_t seed,
                                    distner_dataset** out) {
  return guarded([&] {
    require(ds && out, "dataset and out must not be null");
    *out = new distner_dataset{distner::flip_entity_labels(ds->ds, q, seed)};
  });
}

distner_status distner_dataset_with_reference(const distner_dataset* ds,
                                              const distner_dataset* reference,
                                              distner_dataset** out) {
  return guarded([&] {
    require(ds && reference && out, "datasets and out must not be null");
    *out = new distner_dataset{distner::with_reference(ds->ds, reference->ds)};
  });
}

int64_t distner_dataset_sentences(const distner_dataset* ds) {
  return ds ? static_cast<int64_t>(ds->ds.sentences.size()) : 0;
}

int64_t distner_dataset_repaired_tags(const distner_dataset* ds) {
  return ds ? ds->ds.repaired_tags : 0;
}

void distner_dataset_free(distner_dataset* ds) { delete ds; }

/* ---- Noise audit ------------------------------------------------------ */

distner_status distner_audit(const distner_dataset* ds, const char* granularity,
                             char** out_matrix_csv, char** out_report_json) {
  return guarded([&] {
    require(ds && granularity && out_matrix_csv && out_report_json,
            "dataset, granularity and outputs must not be null");
    require(ds->ds.has_gold(), "audit needs a dataset with a gold column");
    distner::Granularity g = distner::parse_granularity(granularity);
    distner::TransitionMatrix m = distner::transition_matrix(ds->ds, g);
    distner::NoiseAreas areas = distner::decompose_areas(m);

    std::vector<std::vector<distner::BioTag>> observed;
    observed.reserve(ds->ds.sentences.size());
    for (const auto& s : ds->ds.sentences) observed.push_back(s.observed);
    distner::Prf direct = distner::entity_f1(observed, reference_column(ds->ds));

    json report;
    report["granularity"] = granularity;
    report["sentences"] = ds->ds.sentences.size();
    report["areas"] = {{"correct", areas.correct},
                       {"missing", areas.missing},
                       {"wrong", areas.wrong},
                       {"total", areas.total()}};
    report["entity_prf"] = prf_json(direct);
    json zero = json::array();
    for (std::size_t i = 0; i < m.classes.size(); ++i)
      if (m.zero_row[i]) zero.push_back(m.classes[i]);
    report["zero_rows"] = zero;

    char* csv = dup_string(distner::matrix_to_csv(m));
    char* rep = nullptr;
    try {
      rep = dup_string(report.dump());
    } catch (...) {
      std::free(csv);
      throw;
    }
    *out_matrix_csv = csv;
    *out_report_json = rep;
  });
}

/* ---- Run configuration ------------------------------------------------ */

distner_status distner_config_create(distner_config** out) {
  return guarded([&] {
    require(out, "out must not be null");
    *out = new distner_config{};
  });
}

distner_status distner_config_set(distner_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg && key && value, "config, key and value must not be null");
    distner::set_config_key(cfg->cfg, key, value);
  });
}

distner_status distner_config_apply_file(distner_config* cfg, const char* path) {
  return guarded([&] {
    require(cfg && path, "config and path must not be null");
    distner::apply_config_text(cfg->cfg, distner::read_file(path));
  });
}

distner_status distner_config_dump(const distner_config* cfg, char** out_text) {
  return guarded([&] {
    require(cfg && out_text, "config and out must not be null");
    *out_text = dup_string(distner::dump_config(cfg->cfg));
  });
}

void distner_config_free(distner_config* cfg) { delete cfg; }

/* ---- Training --------------------------------------------------------- */

distner_status distner_train(const distner_dataset* train_set,
                             const distner_dataset* dev_set,
                             const distner_config* cfg, const char* prune_jsonl,
                             distner_model** out_model, char** out_report_json) {
  return guarded([&] {
    require(train_set && cfg && out_model && out_report_json,
            "training set, config and outputs must not be null");
    distner::Exclusions excl;
    bool have_excl = false;
    if (prune_jsonl) {
      excl = parse_prune_jsonl(prune_jsonl);
      have_excl = true;
    }
    distner::TrainResult r =
        distner::train(train_set->ds, dev_set ? &dev_set->ds : nullptr, cfg->cfg,
                       have_excl ? &excl : nullptr);

    json report;
    json epochs = json::array();
    for (const auto& e : r.reports) epochs.push_back(epoch_json(e));
    report["epochs"] = epochs;
    report["best_epoch"] = r.best_epoch;
    report["selection_basis"] = r.selection_basis;
    json dropped = json::array();
    for (const auto& p : r.npe_dropped) {
      json d;
      d["sentence_id"] = p.key.sentence_id;
      d["start"] = p.key.start;
      d["end"] = p.key.end;
      d["label"] = r.model.labels().name(p.label);
      d["score"] = p.confidence;
      dropped.push_back(d);
    }
    report["dropped_positives"] = dropped;

    char* rep = dup_string(report.dump());
    *out_model = new distner_model{std::move(r.model)};
    *out_report_json = rep;
  });
}

/* ---- Models ----------------------------------------------------------- */

distner_status distner_model_save(const distner_model* m, const char* path) {
  return guarded([&] {
    require(m && path, "model and path must not be null");
    m->model.save(path);
  });
}

distner_status distner_model_load(const char* path, distner_model** out) {
  return guarded([&] {
    require(path && out, "path and out must not be null");
    *out = new distner_model{distner::Model::load(path)};
  });
}

distner_status distner_model_predict(const distner_model* m, const distner_dataset* ds,
                                     int threads, char** out_spans_jsonl) {
  return guarded([&] {
    require(m && ds && out_spans_jsonl, "model, dataset and out must not be null");
    std::vector<std::vector<distner::SpanRecord>> rows(ds->ds.sentences.size());
    const distner::FileEmbeddings* file = ds->ds.embeddings.get();
    distner::parallel_for(
        ds->ds.sentences.size(), threads, [&](std::size_t begin, std::size_t end) {
          for (std::size_t i = begin; i < end; ++i) {
            const distner::Sentence& s = ds->ds.sentences[i];
            for (const auto& sp : distner::greedy_decode_scored(
                     distner::predict_entity_candidates(m->model, s, file))) {
              rows[i].push_back(distner::SpanRecord{
                  s.id, sp.span.start, sp.span.end,
                  m->model.labels().name(sp.span.label), sp.score, std::nullopt});
            }
          }
        });
    std::vector<distner::SpanRecord> flat;
    for (auto& r : rows)
      for (auto& rec : r) flat.push_back(std::move(rec));
    *out_spans_jsonl = dup_string(distner::span_records_to_jsonl(flat));
  });
}

distner_status distner_model_predict_bio(const distner_model* m, const distner_dataset* ds,
                                         int threads, char** out_conll) {
  return guarded([&] {
    require(m && ds && out_conll, "model, dataset and out must not be null");
    std::vector<std::vector<distner::BioTag>> bio =
        distner::predict_bio(m->model, ds->ds, threads);
    distner::Dataset out;
    out.labels = m->model.labels();
    for (std::size_t i = 0; i < ds->ds.sentences.size(); ++i) {
      distner::Sentence s;
      s.id = ds->ds.sentences[i].id;
      s.tokens = ds->ds.sentences[i].tokens;
      s.observed = std::move(bio[i]);
      out.sentences.push_back(std::move(s));
    }
    *out_conll = dup_string(distner::serialize_conll(out, false));
  });
}

distner_status distner_model_evaluate(const distner_model* m, const distner_dataset* ds,
                                      int threads, char** out_metrics_json) {
  return guarded([&] {
    require(m && ds && out_metrics_json, "model, dataset and out must not be null");
    json j;
    j["entity"] = prf_json(distner::evaluate_model(m->model, ds->ds, threads));
    j["token"] = prf_json(distner::evaluate_model_token_level(m->model, ds->ds, threads));
    j["sentences"] = ds->ds.sentences.size();
    *out_metrics_json = dup_string(j.dump());
  });
}

distner_status distner_model_positive_confidences(const distner_model* m,
                                                  const distner_dataset* ds, int threads,
                                                  char** out_jsonl) {
  return guarded([&] {
    require(m && ds && out_jsonl, "model, dataset and out must not be null");
    std::vector<distner::SpanRecord> records;
    for (const auto& p : distner::positive_confidences(m->model, ds->ds, threads)) {
      records.push_back(distner::SpanRecord{p.key.sentence_id, p.key.start, p.key.end,
                                            m->model.labels().name(p.label), p.confidence,
                                            std::nullopt});
    }
    *out_jsonl = dup_string(distner::span_records_to_jsonl(records));
  });
}

void distner_model_free(distner_model* m) { delete m; }

/* ---- Noisy-positive selection ----------------------------------------- */

distner_status distner_select(const distner_dataset* ds, const distner_config* cfg,
                              const char* strategy, const char* level,
                              char** out_decision_jsonl) {
  return guarded([&] {
    require(ds && cfg && strategy && level && out_decision_jsonl,
            "dataset, config, strategy, level and out must not be null");
    distner::RankStrategy strat = distner::parse_strategy(strategy);
    distner::PruneLevel lvl = distner::parse_level(level);

    std::vector<distner::JointExample> examples =
        distner::kfold_confidences(ds->ds, cfg->cfg, cfg->cfg.k_folds);
    const int num_classes = ds->ds.labels.num_classes();
    distner::ConfidentJoint joint =
        distner::confident_joint(examples, num_classes, false);
    distner::PruneDecision decision =
        distner::rank_and_prune(examples, joint, strat, lvl);

    json meta;
    meta["type"] = "meta";
    meta["strategy"] = strategy;
    meta["level"] = level;
    meta["k_folds"] = cfg->cfg.k_folds;
    meta["examples"] = examples.size();
    json classes = json::array();
    for (int c = 0; c < num_classes; ++c) classes.push_back(ds->ds.labels.name(c));
    meta["classes"] = classes;
    meta["counts"] = joint.counts;
    meta["q_hat"] = joint.q_hat;
    json th = json::array();
    for (const auto& t : joint.thresholds)
      th.push_back(t ? json(*t) : json(nullptr));
    meta["thresholds"] = th;
    meta["class_totals"] = joint.class_totals;
    meta["removed"] = decision.removed_spans.size();
    meta["removed_sentences"] = decision.removed_sentences;
    meta["budget_clamped"] = decision.budget_clamped;
    // The per-cell ranking orders label i examples by how strongly the model
    // prefers the suggested label j over the observed one.
    meta["margin"] = "p(suggested;x) - p(observed;x)";

    std::vector<distner::SpanRecord> records;
    for (const auto& key : decision.removed_spans) {
      records.push_back(distner::SpanRecord{key.sentence_id, key.start, key.end,
                                            observed_label_name(ds->ds, key),
                                            std::nullopt, std::string(strategy)});
    }
    std::string text = meta.dump() + "\n" + distner::span_records_to_jsonl(records);
    *out_decision_jsonl = dup_string(text);
  });
}

/* ---- Evaluation ------------------------------------------------------- */

distner_status distner_eval_bio(const distner_dataset* pred, const distner_dataset* ref,
                                char** out_metrics_json) {
  return guarded([&] {
    require(pred && ref && out_metrics_json, "datasets and out must not be null");
    distner::Dataset paired = distner::with_reference(pred->ds, ref->ds);
    std::vector<std::vector<distner::BioTag>> pred_col, ref_col;
    for (const auto& s : paired.sentences) {
      pred_col.push_back(s.observed);
      ref_col.push_back(*s.gold);
    }
    json j;
    j["entity"] = prf_json(distner::entity_f1(pred_col, ref_col));
    j["token"] = prf_json(distner::token_f1(pred_col, ref_col));
    j["sentences"] = paired.sentences.size();
    *out_metrics_json = dup_string(j.dump());
  });
}

distner_status distner_eval_spans(const char* spans_jsonl, const distner_dataset* ref,
                                  int tau_search, char** out_metrics_json) {
  return guarded([&] {
    require(spans_jsonl && ref && out_metrics_json,
            "spans, reference and out must not be null");
    std::vector<distner::SpanRecord> records =
        distner::parse_span_records_jsonl(spans_jsonl);

    distner::LabelSpace space = ref->ds.labels;
    const int n_sentences = static_cast<int>(ref->ds.sentences.size());
    std::vector<std::vector<distner::ScoredSpan>> candidates(
        static_cast<std::size_t>(n_sentences));
    for (const auto& rec : records) {
      if (rec.sentence_id < 0 || rec.sentence_id >= n_sentences)
        distner::fail(distner::ErrorKind::InvalidArgument,
                      "span record points at unknown sentence " +
                          std::to_string(rec.sentence_id));
      int label = space.add(rec.label);
      candidates[static_cast<std::size_t>(rec.sentence_id)].push_back(
          distner::ScoredSpan{distner::LabeledSpan{rec.start, rec.end, label},
                              rec.score.value_or(1.0)});
    }

    std::vector<std::vector<distner::BioTag>> pred_col, ref_col;
    for (int i = 0; i < n_sentences; ++i) {
      const distner::Sentence& s = ref->ds.sentences[static_cast<std::size_t>(i)];
      std::vector<distner::LabeledSpan> kept =
          distner::greedy_decode(candidates[static_cast<std::size_t>(i)]);
      pred_col.push_back(distner::spans_to_bio(kept, s.length()));
      ref_col.push_back(s.gold ? *s.gold : s.observed);
    }

    json j;
    j["entity"] = prf_json(distner::entity_f1(pred_col, ref_col));
    j["sentences"] = ref->ds.sentences.size();
    j["spans"] = records.size();

    if (tau_search) {
      require(ref->ds.has_gold(),
              "threshold search needs a reference with a gold column");
      std::vector<std::pair<double, bool>> conf;
      for (const auto& rec : records) {
        if (!rec.score)
          distner::fail(distner::ErrorKind::InvalidArgument,
                        "threshold search needs a score on every span record");
        const distner::Sentence& s =
            ref->ds.sentences[static_cast<std::size_t>(rec.sentence_id)];
        bool clean = false;
        for (const auto& g : distner::bio_to_spans(*s.gold)) {
          if (g.start == rec.start && g.end == rec.end &&
              ref->ds.labels.name(g.label) == rec.label) {
            clean = true;
            break;
          }
        }
        conf.emplace_back(*rec.score, !clean);
      }
      distner::TauSearchResult tau = distner::optimal_tau(conf);
      j["tau_search"] = {{"tau", tau.tau},
                        {"ne_recall", tau.ne_recall},
                        {"ne_precision", tau.ne_precision},
                        {"grid_step", tau.grid_step},
                        {"noisy_total", tau.noisy_total},
                        {"flagged", tau.flagged},
                        {"flagged_noisy", tau.flagged_noisy}};
    }
    *out_metrics_json = dup_string(j.dump());
  });
}

/* ---- Model-response ingestion ----------------------------------------- */

distner_status distner_align(const char* outputs_jsonl, const distner_dataset* tokens,
                             char** out_conll, char** out_report_jsonl) {
  return guarded([&] {
    require(outputs_jsonl && tokens && out_conll && out_report_jsonl,
            "outputs, tokens and outs must not be null");

    std::map<int, std::string> payloads;
    {
      std::istringstream in(outputs_jsonl);
      std::string line;
      int line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
          j = json::parse(line);
        } catch (const json::exception& e) {
          distner::fail_parse(line_no, std::string("bad output record: ") + e.what());
        }
        if (!j.contains("sentence_id") || !j.contains("payload"))
          distner::fail_parse(line_no, "output record needs sentence_id and payload");
        int sid = j["sentence_id"].get<int>();
        if (sid < 0 || sid >= static_cast<int>(tokens->ds.sentences.size()))
          distner::fail(distner::ErrorKind::InvalidArgument,
                        "output record points at unknown sentence " + std::to_string(sid));
        payloads[sid] = j["payload"].get<std::string>();
      }
    }

    distner::Dataset out;
    std::ostringstream report;
    std::int64_t exact = 0, repaired_count = 0, fallback = 0;
    std::int64_t matched_total = 0, token_total = 0, invalid_total = 0, promoted_total = 0;
    for (const auto& s : tokens->ds.sentences) {
      distner::TupleParse parsed;
      auto it = payloads.find(s.id);
      if (it != payloads.end()) parsed = distner::parse_tuples(it->second);
      distner::AlignmentResult aligned =
          distner::lcs_align(s.tokens, parsed.tuples, out.labels);

      distner::Sentence o;
      o.id = s.id;
      o.tokens = s.tokens;
      o.observed = aligned.bio;
      out.sentences.push_back(std::move(o));

      switch (aligned.status) {
        case distner::AlignStatus::Exact: ++exact; break;
        case distner::AlignStatus::LcsRepaired: ++repaired_count; break;
        case distner::AlignStatus::FallbackO: ++fallback; break;
      }
      matched_total += aligned.matched;
      token_total += s.length();
      invalid_total += parsed.invalid_tags;
      promoted_total += aligned.repaired;

      json rec;
      rec["sentence_id"] = s.id;
      rec["status"] = distner::align_status_name(aligned.status);
      rec["matched"] = aligned.matched;
      rec["tokens"] = s.length();
      rec["tuples"] = parsed.tuples.size();
      rec["invalid_tags"] = parsed.invalid_tags;
      rec["repaired"] = aligned.repaired;
      report << rec.dump() << '\n';
    }
    json summary;
    summary["type"] = "summary";
    summary["sentences"] = tokens->ds.sentences.size();
    summary["exact"] = exact;
    summary["lcs_repaired"] = repaired_count;
    summary["fallback_O"] = fallback;
    summary["matched_tokens"] = matched_total;
    summary["total_tokens"] = token_total;
    summary["invalid_tags"] = invalid_total;
    summary["repaired"] = promoted_total;
    report << summary.dump() << '\n';

    char* conll = dup_string(distner::serialize_conll(out, false));
    char* rep = nullptr;
    try {
      rep = dup_string(report.str());
    } catch (...) {
      std::free(conll);
      throw;
    }
    *out_conll = conll;
    *out_report_jsonl = rep;
  });
}

}  // extern "C"
