#pragma once

#include <string>
#include <vector>

#include "core/corpus.hpp"

namespace testutil {

// Builds a tag row from literal strings like {"B-PER", "I-PER", "O"},
// interning types into the label space as they appear.
inline std::vector<distner::BioTag> tags(distner::LabelSpace& labels,
                                         const std::vector<std::string>& names) {
  std::vector<distner::BioTag> out;
  for (const std::string& n : names) out.push_back(distner::parse_bio_tag(n, labels, 0));
  return out;
}

inline std::vector<std::string> tag_strings(const std::vector<distner::BioTag>& row,
                                            const distner::LabelSpace& labels) {
  std::vector<std::string> out;
  for (const auto& t : row) out.push_back(distner::bio_tag_string(t, labels));
  return out;
}

inline distner::Sentence sentence(int id, const std::vector<std::string>& tokens,
                                  const std::vector<distner::BioTag>& observed) {
  distner::Sentence s;
  s.id = id;
  s.tokens = tokens;
  s.observed = observed;
  return s;
}

inline std::vector<std::string> words(int n, const std::string& prefix = "w") {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

}  // namespace testutil
