#include "core/metrics.hpp"

#include <algorithm>
#include <map>

namespace distner {

Prf prf_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  Prf out;
  out.tp = tp;
  out.fp = fp;
  out.fn = fn;
  if (tp + fp == 0)
    out.precision_zero_denominator = true;
  else
    out.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn == 0)
    out.recall_zero_denominator = true;
  else
    out.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (out.precision + out.recall > 0.0)
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

Prf entity_f1(const std::vector<std::vector<BioTag>>& pred,
              const std::vector<std::vector<BioTag>>& gold) {
  if (pred.size() != gold.size())
    fail(ErrorKind::InvalidArgument, "prediction/gold sentence counts differ");
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    std::vector<LabeledSpan> p = bio_to_spans(pred[s]);
    std::vector<LabeledSpan> g = bio_to_spans(gold[s]);
    std::vector<bool> gold_used(g.size(), false);
    for (const LabeledSpan& ps : p) {
      bool hit = false;
      for (std::size_t k = 0; k < g.size(); ++k) {
        if (!gold_used[k] && g[k] == ps) {
          gold_used[k] = true;
          hit = true;
          break;
        }
      }
      hit ? ++tp : ++fp;
    }
    for (bool used : gold_used)
      if (!used) ++fn;
  }
  return prf_from_counts(tp, fp, fn);
}

Prf token_f1(const std::vector<std::vector<BioTag>>& pred,
             const std::vector<std::vector<BioTag>>& gold) {
  if (pred.size() != gold.size())
    fail(ErrorKind::InvalidArgument, "prediction/gold sentence counts differ");
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    if (pred[s].size() != gold[s].size())
      fail(ErrorKind::InvalidArgument, "prediction/gold token counts differ in sentence " +
                                           std::to_string(s));
    for (std::size_t i = 0; i < pred[s].size(); ++i) {
      bool p_ent = pred[s][i].kind != BioTag::O;
      bool g_ent = gold[s][i].kind != BioTag::O;
      if (p_ent && g_ent && pred[s][i].type == gold[s][i].type)
        ++tp;
      else {
        if (p_ent) ++fp;
        if (g_ent) ++fn;
      }
    }
  }
  return prf_from_counts(tp, fp, fn);
}

FnReport fn_metrics(const std::vector<NegativeOutcome>& negatives) {
  FnReport r;
  for (const NegativeOutcome& n : negatives) {
    if (n.hidden_entity) ++r.hidden_total;
    if (n.predicted_entity) {
      ++r.flagged_total;
      if (n.hidden_entity) ++r.hidden_flagged;
    }
  }
  if (r.hidden_total > 0)
    r.fn_recall = static_cast<double>(r.hidden_flagged) / static_cast<double>(r.hidden_total);
  if (r.flagged_total > 0)
    r.fn_precision =
        static_cast<double>(r.hidden_flagged) / static_cast<double>(r.flagged_total);
  return r;
}

TauSearchResult optimal_tau(const std::vector<std::pair<double, bool>>& confidence_is_noisy) {
  std::int64_t noisy_total = 0;
  for (const auto& [conf, noisy] : confidence_is_noisy) {
    (void)conf;
    if (noisy) ++noisy_total;
  }
  if (noisy_total == 0)
    fail(ErrorKind::InvalidArgument, "threshold search needs at least one noisy positive");

  TauSearchResult best;
  best.noisy_total = noisy_total;
  double best_score = -1.0;
  for (int k = 0; k <= 1000; ++k) {
    double tau = static_cast<double>(k) / 1000.0;
    std::int64_t flagged = 0, flagged_noisy = 0;
    for (const auto& [conf, noisy] : confidence_is_noisy) {
      if (conf < tau) {
        ++flagged;
        if (noisy) ++flagged_noisy;
      }
    }
    double recall = static_cast<double>(flagged_noisy) / static_cast<double>(noisy_total);
    double precision =
        flagged == 0 ? 0.0
                     : static_cast<double>(flagged_noisy) / static_cast<double>(flagged);
    double score =
        precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    if (score > best_score) {  // strict: ties keep the smallest tau
      best_score = score;
      best.tau = tau;
      best.ne_recall = recall;
      best.ne_precision = precision;
      best.flagged = flagged;
      best.flagged_noisy = flagged_noisy;
    }
  }
  return best;
}

}  // namespace distner
