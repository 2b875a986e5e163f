/* Distant-supervision NER toolkit: C API.
 *
 * Every function returns a status code; DISTNER_OK means success. On failure
 * distner_last_error() holds a human-readable message for the calling thread.
 * Out-parameters are written only on success. Strings handed out by the
 * library are heap copies; release them with distner_string_free. Handles are
 * opaque and released with their matching _free function.
 */
#ifndef DISTNER_H
#define DISTNER_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum distner_status {
  DISTNER_OK = 0,
  DISTNER_ERR_INVALID_ARGUMENT = 1,
  DISTNER_ERR_PARSE = 2,
  DISTNER_ERR_IO = 3,
  DISTNER_ERR_TRAINING_ABORT = 4,
  DISTNER_ERR_INTERNAL = 5
} distner_status;

/* Message for the most recent failure on this thread; empty before any. */
const char* distner_last_error(void);

const char* distner_version(void);

void distner_string_free(char* s);

typedef struct distner_dataset distner_dataset;
typedef struct distner_config distner_config;
typedef struct distner_model distner_model;

/* ---- Datasets --------------------------------------------------------- */

/* CoNLL-style file: "token observed [gold]" per line, blank line between
 * sentences. has_gold selects the 3-column layout. With repair nonzero an
 * I- tag with no valid predecessor is promoted to B- and counted; with repair
 * zero it is a parse error. */
distner_status distner_dataset_load(const char* path, int has_gold, int repair,
                                    distner_dataset** out);
distner_status distner_dataset_parse(const char* text, int has_gold, int repair,
                                     distner_dataset** out);
/* First column only, all tags O: plain token lists. */
distner_status distner_dataset_load_tokens(const char* path, distner_dataset** out);

distner_status distner_dataset_serialize(const distner_dataset* ds, int write_gold,
                                         char** out_text);
distner_status distner_dataset_save(const distner_dataset* ds, const char* path,
                                    int write_gold);

/* Attaches precomputed token vectors ("sentence_id token_index v1..vd" per
 * line) for use with trainable_embeddings=false. */
distner_status distner_dataset_attach_embeddings(distner_dataset* ds, const char* path);

/* Synthetic noise. Masking hides each gold entity span with probability p
 * (all tokens to O); flipping retypes each entity with probability q to a
 * different uniformly chosen type. The input's observed column becomes the
 * output's gold column. Deterministic in the seed. */
distner_status distner_dataset_mask(const distner_dataset* ds, double p, uint64_t seed,
                                    distner_dataset** out);
distner_status distner_dataset_flip(const distner_dataset* ds, double q, uint64_t seed,
                                    distner_dataset** out);

/* Copy of `ds` whose gold column is the observed column of `reference`.
 * Sentences pair by position; token sequences must match. */
distner_status distner_dataset_with_reference(const distner_dataset* ds,
                                              const distner_dataset* reference,
                                              distner_dataset** out);

int64_t distner_dataset_sentences(const distner_dataset* ds);
int64_t distner_dataset_repaired_tags(const distner_dataset* ds);
void distner_dataset_free(distner_dataset* ds);

/* ---- Noise audit ------------------------------------------------------ */

/* Transition matrix of observed vs reference labels plus the areas breakdown
 * (correct / missing / wrong mass) and the direct span F1 of the observed
 * annotation against the reference. granularity is "token" or "span". The
 * dataset must carry a gold column. Outputs: a CSV rendering of the matrix
 * and a JSON report. */
distner_status distner_audit(const distner_dataset* ds, const char* granularity,
                             char** out_matrix_csv, char** out_report_json);

/* ---- Run configuration ------------------------------------------------ */

distner_status distner_config_create(distner_config** out);
/* Keys match the config file format: seed, lambda, epochs, warmup_epochs,
 * learning_rate, weight_decay, batch_size, ues, npe, min_npe_support,
 * k_folds, threads, dim, hidden, context_window, max_span_len, dropout,
 * o_logit_bias, trainable_embeddings. */
distner_status distner_config_set(distner_config* cfg, const char* key, const char* value);
distner_status distner_config_apply_file(distner_config* cfg, const char* path);
distner_status distner_config_dump(const distner_config* cfg, char** out_text);
void distner_config_free(distner_config* cfg);

/* ---- Training --------------------------------------------------------- */

/* Trains a span classifier on the dataset's observed annotation. dev may be
 * NULL; with it, the returned model is the best dev-F1 epoch snapshot.
 * prune_jsonl may be NULL or hold a prune decision (as produced by
 * distner_select) whose spans or sentences are excluded from training.
 * out_report_json receives one JSON object: per-epoch records (loss, sample
 * counts, thresholds, dev and false-negative diagnostics when available),
 * the chosen epoch, and the positives dropped by the last selection pass. */
distner_status distner_train(const distner_dataset* train_set,
                             const distner_dataset* dev_set,
                             const distner_config* cfg, const char* prune_jsonl,
                             distner_model** out_model, char** out_report_json);

/* ---- Models ----------------------------------------------------------- */

distner_status distner_model_save(const distner_model* m, const char* path);
distner_status distner_model_load(const char* path, distner_model** out);

/* Decoded entity predictions, one JSON record per span:
 * {sentence_id, start, end, label, score}. */
distner_status distner_model_predict(const distner_model* m, const distner_dataset* ds,
                                     int threads, char** out_spans_jsonl);
/* Predictions as a 2-column CoNLL file over the dataset's tokens. */
distner_status distner_model_predict_bio(const distner_model* m, const distner_dataset* ds,
                                         int threads, char** out_conll);
/* Span and token PRF of the model against the dataset's gold (observed when
 * no gold is present). */
distner_status distner_model_evaluate(const distner_model* m, const distner_dataset* ds,
                                      int threads, char** out_metrics_json);
/* Confidence of each observed positive span under its observed label:
 * {sentence_id, start, end, label, score} per line. */
distner_status distner_model_positive_confidences(const distner_model* m,
                                                  const distner_dataset* ds, int threads,
                                                  char** out_jsonl);
void distner_model_free(distner_model* m);

/* ---- Noisy-positive selection ----------------------------------------- */

/* K-fold out-of-sample confidences, confident-joint estimation, and the
 * rank-and-prune decision. strategy: "rbc", "rbnr" or "both"; level: "span"
 * or "sentence". The decision JSONL starts with a meta record (strategy,
 * level, joint matrix, budgets) followed by one record per removed span. */
distner_status distner_select(const distner_dataset* ds, const distner_config* cfg,
                              const char* strategy, const char* level,
                              char** out_decision_jsonl);

/* ---- Evaluation ------------------------------------------------------- */

/* Entity-level PRF of predicted BIO against reference BIO (token columns must
 * match). */
distner_status distner_eval_bio(const distner_dataset* pred, const distner_dataset* ref,
                                char** out_metrics_json);
/* Scored span records against a reference dataset. With tau_search nonzero
 * also runs the confidence-threshold grid search for flagging mislabeled
 * positives; requires the reference to distinguish noisy from clean spans
 * (observed vs gold). */
distner_status distner_eval_spans(const char* spans_jsonl, const distner_dataset* ref,
                                  int tau_search, char** out_metrics_json);

/* ---- Model-response ingestion ----------------------------------------- */

/* outputs_jsonl: {sentence_id, payload} records, payload being a raw model
 * response listing (word, tag) tuples. tokens: the dataset supplying the
 * original token sequences. Produces a 2-column CoNLL file with the aligned
 * tags and a JSONL report (per-sentence status plus a summary record). */
distner_status distner_align(const char* outputs_jsonl, const distner_dataset* tokens,
                             char** out_conll, char** out_report_jsonl);

#ifdef __cplusplus
}
#endif

#endif /* DISTNER_H */
