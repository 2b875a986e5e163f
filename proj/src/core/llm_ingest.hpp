#pragma once

#include <string>
#include <vector>

#include "core/corpus.hpp"

namespace distner {

// One parsed (word, tag) pair from a model response.
struct WordTag {
  std::string word;
  std::string tag;
};

struct TupleParse {
  std::vector<WordTag> tuples;
  int invalid_tags = 0;  // tags that failed BIO syntax and were downgraded to O
};

// Pulls (word, tag) tuples out of a free-form model response. Tolerates
// single, double, back and curly quotes and any of ()/[]/{} around each pair;
// prose without tuple structure parses to an empty list. A tag that is not O
// or B-/I- followed by a type becomes O and is counted.
TupleParse parse_tuples(const std::string& payload);

enum class AlignStatus { Exact, LcsRepaired, FallbackO };

std::string align_status_name(AlignStatus status);

struct AlignmentResult {
  std::vector<BioTag> bio;  // always one tag per original token
  int matched = 0;          // tokens that took their tag from a tuple
  int repaired = 0;         // orphan I- promotions after transfer
  AlignStatus status = AlignStatus::FallbackO;
};

// Maps tuple tags onto the original tokens via a longest-common-subsequence
// match on exact word equality. Matched tokens take the tuple's tag, the rest
// get O, and the sequence is BIO-repaired. Entity types are interned into
// `labels`. An empty tuple list falls back to all-O.
AlignmentResult lcs_align(const std::vector<std::string>& tokens,
                          const std::vector<WordTag>& tuples, LabelSpace& labels);

}  // namespace distner
