#include "core/selection.hpp"

#include <algorithm>
#include <cmath>

namespace distner {

std::vector<std::pair<int, int>> enumerate_negatives(
    int n_tokens, const std::vector<LabeledSpan>& positives, int max_len) {
  std::set<std::pair<int, int>> taken;
  for (const auto& p : positives) taken.emplace(p.start, p.end);
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < n_tokens; ++i) {
    int j_max = max_len <= 0 ? n_tokens - 1 : std::min(n_tokens - 1, i + max_len - 1);
    for (int j = i; j <= j_max; ++j) {
      if (!taken.count({i, j})) out.emplace_back(i, j);
    }
  }
  return out;
}

void partition_negatives(const std::vector<std::pair<int, int>>& negatives,
                         const std::vector<LabeledSpan>& positives,
                         std::vector<std::pair<int, int>>& cross,
                         std::vector<std::pair<int, int>>& between) {
  cross.clear();
  between.clear();
  for (const auto& [i, j] : negatives) {
    bool overlaps = false;
    for (const auto& p : positives) {
      if (i <= p.end && p.start <= j) {
        overlaps = true;
        break;
      }
    }
    (overlaps ? cross : between).emplace_back(i, j);
  }
}

std::vector<std::pair<int, int>> confident_negatives(
    const std::vector<std::pair<int, int>>& negatives,
    const std::vector<int>& predicted_classes, int o_index) {
  if (negatives.size() != predicted_classes.size())
    fail(ErrorKind::InvalidArgument,
         "every negative span needs a prediction before confident filtering");
  std::vector<std::pair<int, int>> out;
  for (std::size_t k = 0; k < negatives.size(); ++k)
    if (predicted_classes[k] == o_index) out.push_back(negatives[k]);
  return out;
}

LabelThresholds label_mean_thresholds(const std::vector<PositiveConfidence>& positives,
                                      int num_labels) {
  LabelThresholds t;
  t.mean_confidence.assign(static_cast<std::size_t>(num_labels), std::nullopt);
  t.support.assign(static_cast<std::size_t>(num_labels), 0);
  std::vector<double> sums(static_cast<std::size_t>(num_labels), 0.0);
  for (const auto& p : positives) {
    if (p.label < 0 || p.label >= num_labels)
      fail(ErrorKind::InvalidArgument, "positive span carries an out-of-range label");
    sums[static_cast<std::size_t>(p.label)] += p.confidence;
    t.support[static_cast<std::size_t>(p.label)]++;
  }
  for (int l = 0; l < num_labels; ++l) {
    if (t.support[static_cast<std::size_t>(l)] > 0)
      t.mean_confidence[static_cast<std::size_t>(l)] =
          sums[static_cast<std::size_t>(l)] /
          static_cast<double>(t.support[static_cast<std::size_t>(l)]);
  }
  return t;
}

std::vector<PositiveConfidence> confident_positives(
    const std::vector<PositiveConfidence>& positives, const LabelThresholds& thresholds,
    std::int64_t min_support) {
  std::vector<PositiveConfidence> kept;
  for (const auto& p : positives) {
    std::size_t l = static_cast<std::size_t>(p.label);
    if (l >= thresholds.mean_confidence.size())
      fail(ErrorKind::InvalidArgument, "label missing from thresholds");
    if (min_support > 0 && thresholds.support[l] < min_support) {
      kept.push_back(p);  // too little evidence to trust a mean; keep the span
      continue;
    }
    if (!thresholds.mean_confidence[l].has_value()) {
      kept.push_back(p);
      continue;
    }
    if (p.confidence > *thresholds.mean_confidence[l]) kept.push_back(p);
  }
  return kept;
}

ConfidentJoint confident_joint(const std::vector<JointExample>& examples,
                               int num_classes, bool tie_break_argmax) {
  ConfidentJoint cj;
  std::size_t nc = static_cast<std::size_t>(num_classes);
  cj.counts.assign(nc, std::vector<std::int64_t>(nc, 0));
  cj.q_hat.assign(nc, std::vector<double>(nc, 0.0));
  cj.thresholds.assign(nc, std::nullopt);
  cj.class_totals.assign(nc, 0);

  for (const auto& x : examples) {
    if (x.observed < 0 || x.observed >= num_classes)
      fail(ErrorKind::InvalidArgument, "example observed class out of range");
    if (static_cast<int>(x.probs.size()) != num_classes)
      fail(ErrorKind::InvalidArgument, "example probability row has the wrong width");
    cj.class_totals[static_cast<std::size_t>(x.observed)]++;
  }
  for (std::size_t j = 0; j < nc; ++j) {
    if (cj.class_totals[j] > 0) {
      double sum_j = 0.0;
      for (const auto& x : examples)
        if (static_cast<std::size_t>(x.observed) == j) sum_j += x.probs[j];
      cj.thresholds[j] = sum_j / static_cast<double>(cj.class_totals[j]);
    }
  }

  for (const auto& x : examples) {
    std::size_t i = static_cast<std::size_t>(x.observed);
    if (!tie_break_argmax) {
      for (std::size_t j = 0; j < nc; ++j)
        if (cj.thresholds[j] && x.probs[j] >= *cj.thresholds[j]) cj.counts[i][j]++;
    } else {
      int best = -1;
      for (std::size_t j = 0; j < nc; ++j) {
        if (!cj.thresholds[j] || x.probs[j] < *cj.thresholds[j]) continue;
        if (best < 0 || x.probs[j] > x.probs[static_cast<std::size_t>(best)])
          best = static_cast<int>(j);
      }
      if (best >= 0) cj.counts[i][static_cast<std::size_t>(best)]++;
    }
  }

  // Calibrate: row-normalize the counts, scale rows back to the observed class
  // masses, then normalize the whole table to a distribution.
  double grand = 0.0;
  for (std::size_t i = 0; i < nc; ++i) {
    std::int64_t row_total = 0;
    for (std::int64_t c : cj.counts[i]) row_total += c;
    if (row_total == 0) continue;
    for (std::size_t j = 0; j < nc; ++j) {
      cj.q_hat[i][j] = static_cast<double>(cj.counts[i][j]) /
                       static_cast<double>(row_total) *
                       static_cast<double>(cj.class_totals[i]);
      grand += cj.q_hat[i][j];
    }
  }
  if (grand > 0.0)
    for (auto& row : cj.q_hat)
      for (double& v : row) v /= grand;
  return cj;
}

RankStrategy parse_strategy(const std::string& text) {
  if (text == "rbc") return RankStrategy::Rbc;
  if (text == "rbnr") return RankStrategy::Rbnr;
  if (text == "both") return RankStrategy::Both;
  fail(ErrorKind::InvalidArgument, "strategy must be rbc, rbnr or both, got '" + text + "'");
}

PruneLevel parse_level(const std::string& text) {
  if (text == "span") return PruneLevel::Span;
  if (text == "sentence") return PruneLevel::Sentence;
  fail(ErrorKind::InvalidArgument, "level must be span or sentence, got '" + text + "'");
}

namespace {

std::set<SpanKey> rank_rbc(const std::vector<JointExample>& examples,
                           const ConfidentJoint& joint, bool* clamped) {
  std::set<SpanKey> removed;
  std::size_t nc = joint.q_hat.size();
  double n_total = static_cast<double>(examples.size());
  for (std::size_t i = 0; i < nc; ++i) {
    double off_diag = 0.0;
    for (std::size_t j = 0; j < nc; ++j)
      if (j != i) off_diag += joint.q_hat[i][j];
    std::int64_t budget = static_cast<std::int64_t>(std::floor(n_total * off_diag));
    if (budget <= 0) continue;
    std::vector<const JointExample*> pool;
    for (const auto& x : examples)
      if (static_cast<std::size_t>(x.observed) == i) pool.push_back(&x);
    std::sort(pool.begin(), pool.end(), [i](const JointExample* a, const JointExample* b) {
      double ca = a->probs[i], cb = b->probs[i];
      if (ca != cb) return ca < cb;
      return a->key < b->key;
    });
    if (budget > static_cast<std::int64_t>(pool.size())) {
      budget = static_cast<std::int64_t>(pool.size());
      if (clamped) *clamped = true;
    }
    for (std::int64_t k = 0; k < budget; ++k) removed.insert(pool[static_cast<std::size_t>(k)]->key);
  }
  return removed;
}

std::set<SpanKey> rank_rbnr(const std::vector<JointExample>& examples,
                            const ConfidentJoint& joint, bool* clamped) {
  std::set<SpanKey> removed;
  std::size_t nc = joint.q_hat.size();
  double n_total = static_cast<double>(examples.size());
  for (std::size_t i = 0; i < nc; ++i) {
    std::vector<const JointExample*> pool;
    for (const auto& x : examples)
      if (static_cast<std::size_t>(x.observed) == i) pool.push_back(&x);
    if (pool.empty()) continue;
    for (std::size_t j = 0; j < nc; ++j) {
      if (j == i) continue;
      std::int64_t budget = static_cast<std::int64_t>(std::floor(n_total * joint.q_hat[i][j]));
      if (budget <= 0) continue;
      // Margin towards the suggested class: p(j;x) - p(i;x), largest first.
      std::sort(pool.begin(), pool.end(),
                [i, j](const JointExample* a, const JointExample* b) {
                  double ma = a->probs[j] - a->probs[i];
                  double mb = b->probs[j] - b->probs[i];
                  if (ma != mb) return ma > mb;
                  return a->key < b->key;
                });
      if (budget > static_cast<std::int64_t>(pool.size())) {
        budget = static_cast<std::int64_t>(pool.size());
        if (clamped) *clamped = true;
      }
      for (std::int64_t k = 0; k < budget; ++k)
        removed.insert(pool[static_cast<std::size_t>(k)]->key);
    }
  }
  return removed;
}

}  // namespace

PruneDecision rank_and_prune(const std::vector<JointExample>& examples,
                             const ConfidentJoint& joint, RankStrategy strategy,
                             PruneLevel level) {
  PruneDecision d;
  d.strategy = strategy;
  d.level = level;
  std::set<SpanKey> removed;
  switch (strategy) {
    case RankStrategy::Rbc:
      removed = rank_rbc(examples, joint, &d.budget_clamped);
      break;
    case RankStrategy::Rbnr:
      removed = rank_rbnr(examples, joint, &d.budget_clamped);
      break;
    case RankStrategy::Both: {
      std::set<SpanKey> a = rank_rbc(examples, joint, &d.budget_clamped);
      std::set<SpanKey> b = rank_rbnr(examples, joint, &d.budget_clamped);
      for (const SpanKey& k : a)
        if (b.count(k)) removed.insert(k);
      break;
    }
  }
  d.removed_spans.assign(removed.begin(), removed.end());
  if (level == PruneLevel::Sentence) {
    std::set<int> sids;
    for (const SpanKey& k : d.removed_spans) sids.insert(k.sentence_id);
    d.removed_sentences.assign(sids.begin(), sids.end());
  }
  return d;
}

std::vector<std::pair<int, int>> false_negative_spans(
    const std::vector<std::pair<int, int>>& negatives,
    const std::vector<LabeledSpan>& gold_spans) {
  std::set<std::pair<int, int>> gold_bounds;
  for (const auto& g : gold_spans) gold_bounds.emplace(g.start, g.end);
  std::vector<std::pair<int, int>> out;
  for (const auto& n : negatives)
    if (gold_bounds.count(n)) out.push_back(n);
  return out;
}

}  // namespace distner
