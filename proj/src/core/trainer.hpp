#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"
#include "core/selection.hpp"

namespace distner {

struct TrainerConfig {
  std::uint64_t seed = 0;
  bool seed_set = false;  // callers must give a seed explicitly; no clock fallback

  double lambda = 0.35;  // negatives sampled per sentence = ceil(lambda * length)
  int epochs = 8;
  int warmup_epochs = 1;
  double learning_rate = 0.05;
  double weight_decay = 0.0;
  int batch_size = 1;  // sentences per optimizer step
  bool ues = true;     // reliable warm-up negatives, then model-confirmed ones
  bool npe = true;     // keep positives above their label's mean confidence
  std::int64_t min_npe_support = 5;
  int k_folds = 5;
  int threads = 1;
  ModelConfig model;

  void validate() const;
};

struct EpochReport {
  int epoch = 0;  // 1-based
  double loss = 0.0;
  std::int64_t instances = 0;
  std::int64_t n_ce = 0;
  std::optional<std::int64_t> p_hat;  // set on epochs where positive selection ran
  std::optional<std::int64_t> n_hat;  // set on epochs where negative selection ran
  std::optional<Prf> dev;
  std::optional<double> fn_recall;
  std::optional<double> fn_precision;
  std::vector<std::pair<std::string, double>> thresholds;
  bool sampling_clamped = false;
};

struct TrainResult {
  Model model;
  std::vector<EpochReport> reports;
  int best_epoch = 0;            // 1-based; the epoch whose parameters were kept
  std::string selection_basis;   // "dev_f1" when a dev set picked the epoch, else "final"
  // Positives the final positive-selection pass dropped, for audit output.
  std::vector<PositiveConfidence> npe_dropped;
};

// Spans/sentences excluded from the positive training set, e.g. a prune
// decision. Negatives are still enumerated around the original boundaries, so
// an excluded span is trained as neither a positive nor a negative.
struct Exclusions {
  std::set<SpanKey> spans;
  std::set<int> sentences;
};

TrainResult train(const Dataset& train_ds, const Dataset* dev_ds,
                  const TrainerConfig& cfg, const Exclusions* exclusions = nullptr);

// Out-of-sample probability rows for every observed positive, from k models
// each trained with one fold held out. Needs at least k sentences; k equal to
// the sentence count gives leave-one-out.
std::vector<JointExample> kfold_confidences(const Dataset& ds, const TrainerConfig& cfg,
                                            int k);

TrainResult retrain_on_pruned(const Dataset& ds, const PruneDecision& decision,
                              const TrainerConfig& cfg, const Dataset* dev_ds);

// Entity candidates for one sentence: argmax over all spans up to the model's
// length cap, keeping non-O winners with their winning probability.
std::vector<ScoredSpan> predict_entity_candidates(const Model& m, const Sentence& s,
                                                  const FileEmbeddings* file);

// Overlap-free predictions for the whole dataset, as BIO rows in the model's
// label space.
std::vector<std::vector<BioTag>> predict_bio(const Model& m, const Dataset& ds,
                                             int threads);

// Exact-match span F1 of the model against the dataset's gold column (or the
// observed one when no gold is present).
Prf evaluate_model(const Model& m, const Dataset& ds, int threads);
Prf evaluate_model_token_level(const Model& m, const Dataset& ds, int threads);

// Confidence of the observed label for every observed positive span.
std::vector<PositiveConfidence> positive_confidences(const Model& m, const Dataset& ds,
                                                     int threads);

// Rewrites a dataset's tags into the target label space by name, extending the
// target with names it lacks.
Dataset remap_dataset(const Dataset& ds, LabelSpace& target);

}  // namespace distner
