#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "core/corpus.hpp"

namespace distner {

// Globally unique span address used for bookkeeping and tie-breaking.
struct SpanKey {
  int sentence_id = 0;
  int start = 0;
  int end = 0;

  auto operator<=>(const SpanKey&) const = default;
};

// All O-labeled candidate spans of a sentence: intervals up to max_len whose
// boundaries do not coincide with an observed positive. max_len <= 0 lifts
// the length cap.
std::vector<std::pair<int, int>> enumerate_negatives(
    int n_tokens, const std::vector<LabeledSpan>& positives, int max_len);

// Splits negatives into those overlapping at least one observed positive
// (cross-entity) and the rest (between-entity). Intervals are inclusive on
// both ends.
void partition_negatives(const std::vector<std::pair<int, int>>& negatives,
                         const std::vector<LabeledSpan>& positives,
                         std::vector<std::pair<int, int>>& cross,
                         std::vector<std::pair<int, int>>& between);

// Uniform sample of `count` items without replacement, deterministic in the
// seed. Asking for more than the pool holds returns the whole pool and
// reports the clamp. Output preserves pool order.
template <typename T>
std::vector<T> sample_uniform(const std::vector<T>& pool, std::size_t count,
                              std::uint64_t seed, bool* clamped = nullptr) {
  if (clamped) *clamped = false;
  if (count >= pool.size()) {
    if (clamped && count > pool.size()) *clamped = true;
    return pool;
  }
  std::vector<std::size_t> idx(pool.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  // Partial Fisher-Yates: after k swaps the first k slots are the sample.
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  std::vector<T> out;
  out.reserve(count);
  for (std::size_t i : idx) out.push_back(pool[i]);
  return out;
}

// Negatives the current model itself believes are O.
std::vector<std::pair<int, int>> confident_negatives(
    const std::vector<std::pair<int, int>>& negatives,
    const std::vector<int>& predicted_classes, int o_index);

// Observed positive span with the model's confidence in its observed label.
struct PositiveConfidence {
  SpanKey key;
  int label = 0;
  double confidence = 0.0;
};

struct LabelThresholds {
  std::vector<std::optional<double>> mean_confidence;  // per label, unset when unsupported
  std::vector<std::int64_t> support;
};

// Per-label mean confidence over the observed positives carrying that label.
LabelThresholds label_mean_thresholds(const std::vector<PositiveConfidence>& positives,
                                      int num_labels);

// Keeps spans strictly above their label's mean confidence. Labels with fewer
// than min_support observed spans are left untouched (no threshold applied).
std::vector<PositiveConfidence> confident_positives(
    const std::vector<PositiveConfidence>& positives, const LabelThresholds& thresholds,
    std::int64_t min_support = 0);

// Example fed to the confident-joint estimator: observed class plus the full
// out-of-sample probability row.
struct JointExample {
  SpanKey key;
  int observed = 0;
  std::vector<double> probs;
};

struct ConfidentJoint {
  std::vector<std::vector<std::int64_t>> counts;  // C[observed][suggested]
  std::vector<std::vector<double>> q_hat;         // calibrated joint, sums to 1
  std::vector<std::optional<double>> thresholds;
  std::vector<std::int64_t> class_totals;         // |X_{observed=i}|
};

// Counts an example into cell (i, j) when its probability for class j reaches
// the class-j mean threshold. The default counts every qualifying cell, per
// the literal counting rule; tie_break_argmax restricts each example to its
// single best qualifying class.
ConfidentJoint confident_joint(const std::vector<JointExample>& examples,
                               int num_classes, bool tie_break_argmax = false);

enum class RankStrategy { Rbc, Rbnr, Both };
enum class PruneLevel { Span, Sentence };
RankStrategy parse_strategy(const std::string& text);
PruneLevel parse_level(const std::string& text);

struct PruneDecision {
  RankStrategy strategy = RankStrategy::Both;
  PruneLevel level = PruneLevel::Span;
  std::vector<SpanKey> removed_spans;     // triggering spans, sorted
  std::vector<int> removed_sentences;     // filled at sentence level, sorted
  bool budget_clamped = false;
};

// Ranks examples against the calibrated joint and prunes the per-class (or
// per-cell) budgets: lowest self-confidence for count-based ranking, largest
// probability margin towards the suggested class for rule-based ranking, and
// the intersection of both sets for the combined strategy. Budgets floor and
// clamp to what exists; ties resolve by span address.
PruneDecision rank_and_prune(const std::vector<JointExample>& examples,
                             const ConfidentJoint& joint, RankStrategy strategy,
                             PruneLevel level);

// Negatives whose boundaries exactly match a gold entity: annotation misses.
std::vector<std::pair<int, int>> false_negative_spans(
    const std::vector<std::pair<int, int>>& negatives,
    const std::vector<LabeledSpan>& gold_spans);

}  // namespace distner
