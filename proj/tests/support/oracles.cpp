#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>

namespace oracles {

using distner::BioTag;
using distner::JointExample;
using distner::LabeledSpan;
using distner::NegativeOutcome;
using distner::PositiveConfidence;
using distner::Prf;
using distner::ScoredSpan;
using distner::SpanKey;

bool valid_bio(const std::vector<BioTag>& tags) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i].kind != BioTag::I) continue;
    if (i == 0) return false;
    const BioTag& prev = tags[i - 1];
    if (prev.kind == BioTag::O || prev.type != tags[i].type) return false;
  }
  return true;
}

std::vector<LabeledSpan> bio_runs(const std::vector<BioTag>& tags) {
  std::vector<LabeledSpan> out;
  std::size_t i = 0;
  while (i < tags.size()) {
    if (tags[i].kind != BioTag::B) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < tags.size() && tags[j + 1].kind == BioTag::I &&
           tags[j + 1].type == tags[i].type)
      ++j;
    out.push_back({static_cast<int>(i), static_cast<int>(j), tags[i].type});
    i = j + 1;
  }
  return out;
}

std::vector<LabeledSpan> greedy(std::vector<ScoredSpan> candidates) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const ScoredSpan& a, const ScoredSpan& b) {
                     if (a.score != b.score) return a.score > b.score;
                     if (a.span.start != b.span.start) return a.span.start < b.span.start;
                     int la = a.span.end - a.span.start;
                     int lb = b.span.end - b.span.start;
                     if (la != lb) return la < lb;
                     return a.span.label < b.span.label;
                   });
  std::vector<LabeledSpan> kept;
  for (const ScoredSpan& c : candidates) {
    bool clash = false;
    for (const LabeledSpan& k : kept)
      if (distner::spans_overlap(c.span, k)) clash = true;
    if (!clash) kept.push_back(c.span);
  }
  std::sort(kept.begin(), kept.end(), [](const LabeledSpan& a, const LabeledSpan& b) {
    if (a.start != b.start) return a.start < b.start;
    return a.end < b.end;
  });
  return kept;
}

std::vector<std::pair<int, int>> negatives(int n_tokens,
                                           const std::vector<LabeledSpan>& positives,
                                           int max_len) {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < n_tokens; ++i) {
    for (int j = i; j < n_tokens; ++j) {
      if (max_len > 0 && j - i + 1 > max_len) continue;
      bool is_positive = false;
      for (const LabeledSpan& p : positives)
        if (p.start == i && p.end == j) is_positive = true;
      if (!is_positive) out.emplace_back(i, j);
    }
  }
  return out;
}

void split_cross_between(const std::vector<std::pair<int, int>>& negs,
                         const std::vector<LabeledSpan>& positives,
                         std::vector<std::pair<int, int>>& cross,
                         std::vector<std::pair<int, int>>& between) {
  cross.clear();
  between.clear();
  for (const auto& n : negs) {
    bool overlaps = false;
    for (const LabeledSpan& p : positives) {
      bool disjoint = n.second < p.start || p.end < n.first;
      if (!disjoint) overlaps = true;
    }
    (overlaps ? cross : between).push_back(n);
  }
}

std::vector<std::pair<int, int>> hidden_entities(
    const std::vector<std::pair<int, int>>& negs, const std::vector<LabeledSpan>& gold) {
  std::vector<std::pair<int, int>> out;
  for (const auto& n : negs)
    for (const LabeledSpan& g : gold)
      if (g.start == n.first && g.end == n.second) out.push_back(n);
  return out;
}

std::vector<std::optional<double>> label_means(
    const std::vector<PositiveConfidence>& positives, int num_labels) {
  std::vector<std::optional<double>> out(static_cast<std::size_t>(num_labels));
  for (int l = 0; l < num_labels; ++l) {
    double sum = 0.0;
    std::int64_t count = 0;
    for (const PositiveConfidence& p : positives) {
      if (p.label == l) {
        sum += p.confidence;
        ++count;
      }
    }
    if (count > 0) out[static_cast<std::size_t>(l)] = sum / static_cast<double>(count);
  }
  return out;
}

std::vector<PositiveConfidence> kept_positives(
    const std::vector<PositiveConfidence>& positives,
    const std::vector<std::optional<double>>& means, std::int64_t min_support) {
  std::vector<std::int64_t> support(means.size(), 0);
  for (const PositiveConfidence& p : positives)
    support[static_cast<std::size_t>(p.label)]++;
  std::vector<PositiveConfidence> out;
  for (const PositiveConfidence& p : positives) {
    std::size_t l = static_cast<std::size_t>(p.label);
    bool exempt = (min_support > 0 && support[l] < min_support) || !means[l].has_value();
    if (exempt || p.confidence > *means[l]) out.push_back(p);
  }
  return out;
}

JointCounts joint_counts(const std::vector<JointExample>& examples, int num_classes) {
  std::size_t nc = static_cast<std::size_t>(num_classes);
  JointCounts out;
  out.counts.assign(nc, std::vector<std::int64_t>(nc, 0));
  out.q_hat.assign(nc, std::vector<double>(nc, 0.0));

  // Column thresholds: the mean self-confidence of each observed class.
  std::vector<std::optional<double>> t(nc);
  for (std::size_t j = 0; j < nc; ++j) {
    double sum = 0.0;
    std::int64_t n = 0;
    for (const JointExample& x : examples) {
      if (static_cast<std::size_t>(x.observed) == j) {
        sum += x.probs[j];
        ++n;
      }
    }
    if (n > 0) t[j] = sum / static_cast<double>(n);
  }

  for (const JointExample& x : examples)
    for (std::size_t j = 0; j < nc; ++j)
      if (t[j].has_value() && x.probs[j] >= *t[j])
        out.counts[static_cast<std::size_t>(x.observed)][j]++;

  std::vector<std::int64_t> class_mass(nc, 0);
  for (const JointExample& x : examples)
    class_mass[static_cast<std::size_t>(x.observed)]++;

  double grand = 0.0;
  for (std::size_t i = 0; i < nc; ++i) {
    std::int64_t row = 0;
    for (std::int64_t c : out.counts[i]) row += c;
    if (row == 0) continue;
    for (std::size_t j = 0; j < nc; ++j) {
      out.q_hat[i][j] = static_cast<double>(out.counts[i][j]) / static_cast<double>(row) *
                        static_cast<double>(class_mass[i]);
      grand += out.q_hat[i][j];
    }
  }
  if (grand > 0.0)
    for (auto& row : out.q_hat)
      for (double& v : row) v /= grand;
  return out;
}

namespace {

bool key_less(const SpanKey& a, const SpanKey& b) {
  if (a.sentence_id != b.sentence_id) return a.sentence_id < b.sentence_id;
  if (a.start != b.start) return a.start < b.start;
  return a.end < b.end;
}

}  // namespace

std::set<SpanKey> prune_rbc(const std::vector<JointExample>& examples,
                            const std::vector<std::vector<double>>& q_hat) {
  std::set<SpanKey> removed;
  std::size_t nc = q_hat.size();
  double n = static_cast<double>(examples.size());
  for (std::size_t i = 0; i < nc; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < nc; ++j)
      if (j != i) off += q_hat[i][j];
    std::int64_t budget = static_cast<std::int64_t>(std::floor(n * off));
    std::vector<JointExample> pool;
    for (const JointExample& x : examples)
      if (static_cast<std::size_t>(x.observed) == i) pool.push_back(x);
    std::sort(pool.begin(), pool.end(), [i](const JointExample& a, const JointExample& b) {
      if (a.probs[i] != b.probs[i]) return a.probs[i] < b.probs[i];
      return key_less(a.key, b.key);
    });
    for (std::int64_t k = 0; k < budget && k < static_cast<std::int64_t>(pool.size()); ++k)
      removed.insert(pool[static_cast<std::size_t>(k)].key);
  }
  return removed;
}

std::set<SpanKey> prune_rbnr(const std::vector<JointExample>& examples,
                             const std::vector<std::vector<double>>& q_hat) {
  std::set<SpanKey> removed;
  std::size_t nc = q_hat.size();
  double n = static_cast<double>(examples.size());
  for (std::size_t i = 0; i < nc; ++i) {
    for (std::size_t j = 0; j < nc; ++j) {
      if (i == j) continue;
      std::int64_t budget = static_cast<std::int64_t>(std::floor(n * q_hat[i][j]));
      std::vector<JointExample> pool;
      for (const JointExample& x : examples)
        if (static_cast<std::size_t>(x.observed) == i) pool.push_back(x);
      std::sort(pool.begin(), pool.end(),
                [i, j](const JointExample& a, const JointExample& b) {
                  double ma = a.probs[j] - a.probs[i];
                  double mb = b.probs[j] - b.probs[i];
                  if (ma != mb) return ma > mb;
                  return key_less(a.key, b.key);
                });
      for (std::int64_t k = 0; k < budget && k < static_cast<std::int64_t>(pool.size()); ++k)
        removed.insert(pool[static_cast<std::size_t>(k)].key);
    }
  }
  return removed;
}

FnCounts fn_counts(const std::vector<NegativeOutcome>& outcomes) {
  FnCounts c;
  for (const NegativeOutcome& o : outcomes) {
    if (o.hidden_entity) ++c.hidden;
    if (o.predicted_entity) ++c.flagged;
    if (o.hidden_entity && o.predicted_entity) ++c.hidden_flagged;
  }
  return c;
}

TauScan tau_scan(const std::vector<std::pair<double, bool>>& confidence_is_noisy) {
  std::int64_t noisy = 0;
  for (const auto& [c, is_noisy] : confidence_is_noisy) {
    (void)c;
    if (is_noisy) ++noisy;
  }
  TauScan best;
  double best_h = -1.0;
  for (int k = 0; k <= 1000; ++k) {
    double tau = static_cast<double>(k) / 1000.0;
    std::int64_t fl = 0, fl_noisy = 0;
    for (const auto& [conf, is_noisy] : confidence_is_noisy) {
      if (conf < tau) {
        ++fl;
        if (is_noisy) ++fl_noisy;
      }
    }
    double r = noisy > 0 ? static_cast<double>(fl_noisy) / static_cast<double>(noisy) : 0.0;
    double p = fl > 0 ? static_cast<double>(fl_noisy) / static_cast<double>(fl) : 0.0;
    double h = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    if (h > best_h) {
      best_h = h;
      best = {tau, r, p};
    }
  }
  return best;
}

Prf entity_prf(const std::vector<std::vector<BioTag>>& pred,
               const std::vector<std::vector<BioTag>>& gold) {
  std::int64_t tp = 0, pred_total = 0, gold_total = 0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    std::vector<LabeledSpan> p = bio_runs(pred[s]);
    std::vector<LabeledSpan> g = bio_runs(gold[s]);
    pred_total += static_cast<std::int64_t>(p.size());
    gold_total += static_cast<std::int64_t>(g.size());
    for (const LabeledSpan& ps : p)
      for (const LabeledSpan& gs : g)
        if (ps == gs) ++tp;
  }
  return distner::prf_from_counts(tp, pred_total - tp, gold_total - tp);
}

int lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<int>> L(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      L[i][j] = a[i - 1] == b[j - 1] ? L[i - 1][j - 1] + 1
                                     : std::max(L[i - 1][j], L[i][j - 1]);
  return L[n][m];
}

std::vector<std::pair<int, int>> lcs_pairs(const std::vector<std::string>& a,
                                           const std::vector<std::string>& b) {
  std::size_t n = a.size(), m = b.size();
  // dp[i][j] = longest common subsequence of the suffixes a[i:], b[j:].
  std::vector<std::vector<int>> dp(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      dp[i][j] = a[i] == b[j] ? dp[i + 1][j + 1] + 1
                              : std::max(dp[i + 1][j], dp[i][j + 1]);
    }
  }
  // Leftmost walk: take a match whenever it still achieves the optimum,
  // otherwise advance on the token side first.
  std::vector<std::pair<int, int>> pairs;
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    if (a[i] == b[j] && dp[i][j] == dp[i + 1][j + 1] + 1) {
      pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
      ++i;
      ++j;
    } else if (dp[i + 1][j] >= dp[i][j + 1]) {
      ++i;
    } else {
      ++j;
    }
  }
  return pairs;
}

}  // namespace oracles
