#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/corpus.hpp"

namespace distner {

// One span per line: {"sentence_id":..,"start":..,"end":..,"label":"..."} with
// optional "score" and "reason". Shared by predictions, confidence dumps and
// prune decisions.
struct SpanRecord {
  int sentence_id = 0;
  int start = 0;
  int end = 0;
  std::string label;
  std::optional<double> score;
  std::optional<std::string> reason;
};

std::string span_records_to_jsonl(const std::vector<SpanRecord>& records);
std::vector<SpanRecord> parse_span_records_jsonl(const std::string& text);

}  // namespace distner
