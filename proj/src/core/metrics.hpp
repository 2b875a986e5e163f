#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "core/corpus.hpp"

namespace distner {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  bool precision_zero_denominator = false;
  bool recall_zero_denominator = false;
};

Prf prf_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn);

// Micro-averaged exact-match F1 over entity spans: a predicted span counts only
// when boundaries and type both agree with a gold span.
Prf entity_f1(const std::vector<std::vector<BioTag>>& pred,
              const std::vector<std::vector<BioTag>>& gold);

// Per-token type agreement on non-O tags. Looser than the span metric; kept as
// a secondary diagnostic because it rewards partial entity matches.
Prf token_f1(const std::vector<std::vector<BioTag>>& pred,
             const std::vector<std::vector<BioTag>>& gold);

// One negative span, as seen by the false-negative diagnostics: whether it is
// actually a hidden entity, and whether the model currently flags it as one.
struct NegativeOutcome {
  bool hidden_entity = false;
  bool predicted_entity = false;
};

struct FnReport {
  std::optional<double> fn_recall;     // unset when there are no hidden entities
  std::optional<double> fn_precision;  // unset when nothing was flagged
  std::int64_t hidden_total = 0;
  std::int64_t flagged_total = 0;
  std::int64_t hidden_flagged = 0;
};

FnReport fn_metrics(const std::vector<NegativeOutcome>& negatives);

struct TauSearchResult {
  double tau = 0.0;
  double ne_recall = 0.0;
  double ne_precision = 0.0;
  double grid_step = 0.001;
  std::int64_t noisy_total = 0;
  std::int64_t flagged = 0;
  std::int64_t flagged_noisy = 0;
};

// Scans tau over {0, 0.001, ..., 1} and keeps the smallest value maximizing
// the harmonic mean of noisy-entity recall and precision, where a positive is
// flagged when its confidence is strictly below tau. Requires at least one
// noisy positive.
TauSearchResult optimal_tau(const std::vector<std::pair<double, bool>>& confidence_is_noisy);

}  // namespace distner
