#include "core/io.hpp"

#include <sstream>

#include "json.hpp"

namespace distner {

std::string span_records_to_jsonl(const std::vector<SpanRecord>& records) {
  std::ostringstream out;
  for (const auto& r : records) {
    nlohmann::json j;
    j["sentence_id"] = r.sentence_id;
    j["start"] = r.start;
    j["end"] = r.end;
    j["label"] = r.label;
    if (r.score) j["score"] = *r.score;
    if (r.reason) j["reason"] = *r.reason;
    out << j.dump() << '\n';
  }
  return out.str();
}

std::vector<SpanRecord> parse_span_records_jsonl(const std::string& text) {
  std::vector<SpanRecord> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail_parse(line_no, std::string("bad JSON: ") + e.what());
    }
    // Lines carrying bookkeeping objects (e.g. {"type":"meta",...}) are not
    // span records; skip them so decision files round-trip.
    if (j.contains("type") && !j.contains("sentence_id")) continue;
    try {
      SpanRecord r;
      r.sentence_id = j.at("sentence_id").get<int>();
      r.start = j.at("start").get<int>();
      r.end = j.at("end").get<int>();
      r.label = j.value("label", std::string("O"));
      if (j.contains("score")) r.score = j.at("score").get<double>();
      if (j.contains("reason")) r.reason = j.at("reason").get<std::string>();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      fail_parse(line_no, std::string("span record missing field: ") + e.what());
    }
  }
  return out;
}

}  // namespace distner
