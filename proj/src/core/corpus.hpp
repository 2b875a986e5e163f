#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/common.hpp"

namespace distner {

// Ordered set of entity type names. The outside-entity class O is not stored;
// it always sits at index size(), so classifier outputs are |L|+1 wide with O
// last.
class LabelSpace {
 public:
  int add(const std::string& name);            // returns index, existing or new
  int find(const std::string& name) const;     // -1 when unknown
  int require(const std::string& name) const;  // throws when unknown
  const std::string& name(int index) const;    // name(o_index()) == "O"
  int o_index() const { return static_cast<int>(names_.size()); }
  int size() const { return static_cast<int>(names_.size()); }
  int num_classes() const { return size() + 1; }
  const std::vector<std::string>& names() const { return names_; }
  bool operator==(const LabelSpace& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

struct BioTag {
  enum Kind : std::uint8_t { O = 0, B = 1, I = 2 };
  Kind kind = O;
  int type = -1;  // label index, -1 for O

  bool operator==(const BioTag&) const = default;
};

BioTag parse_bio_tag(const std::string& text, LabelSpace& labels, int line_no);
std::string bio_tag_string(const BioTag& tag, const LabelSpace& labels);

// Inclusive token interval [start, end] with a label index. For entity spans
// the label is a type index; O-labeled spans use the space's o_index.
struct LabeledSpan {
  int start = 0;
  int end = 0;
  int label = 0;

  bool same_boundaries(const LabeledSpan& other) const {
    return start == other.start && end == other.end;
  }
  bool operator==(const LabeledSpan&) const = default;
};

inline bool spans_overlap(const LabeledSpan& a, const LabeledSpan& b) {
  return a.start <= b.end && b.start <= a.end;
}

struct ScoredSpan {
  LabeledSpan span;
  double score = 0.0;
};

// Frozen, externally supplied token vectors keyed by (sentence id, token
// index). Used in place of the trainable lookup table when a dataset ships
// with precomputed embeddings.
class FileEmbeddings {
 public:
  static FileEmbeddings parse(const std::string& text);
  static FileEmbeddings load(const std::string& path);

  int dim() const { return dim_; }
  const std::vector<double>* find(int sentence_id, int token_index) const;
  const std::vector<double>& at(int sentence_id, int token_index) const;

 private:
  int dim_ = 0;
  std::unordered_map<std::uint64_t, std::vector<double>> vectors_;
};

struct Sentence {
  int id = 0;
  std::vector<std::string> tokens;
  std::vector<BioTag> observed;
  std::optional<std::vector<BioTag>> gold;

  int length() const { return static_cast<int>(tokens.size()); }
};

struct Dataset {
  LabelSpace labels;
  std::vector<Sentence> sentences;
  int repaired_tags = 0;  // orphan I-X promotions performed at parse time
  std::shared_ptr<const FileEmbeddings> embeddings;  // optional attachment

  bool has_gold() const;
};

// One token per line: "token observed [gold]", whitespace separated, blank
// line between sentences. Ragged rows and malformed tags are parse errors
// with line numbers. With repair on, an I-X with no valid predecessor is
// promoted to B-X and counted; with repair off it is an error.
Dataset parse_conll(const std::string& text, bool has_gold, bool repair);
std::string serialize_conll(const Dataset& ds, bool write_gold);

// First column only; every tag is O. Accepts one or more columns per line so
// plain token lists and already-tagged files both work as token sources.
Dataset parse_tokens_only(const std::string& text);

// Copy of `ds` with its gold column replaced by the observed column of
// `reference`. Sentences pair by position; counts and token sequences must
// match, mismatches are reported with sentence ids. Reference labels are
// interned into the result's space.
Dataset with_reference(const Dataset& ds, const Dataset& reference);

bool bio_is_valid(const std::vector<BioTag>& tags);
int repair_bio(std::vector<BioTag>& tags);  // returns number of promotions

std::vector<LabeledSpan> bio_to_spans(const std::vector<BioTag>& tags);
std::vector<BioTag> spans_to_bio(const std::vector<LabeledSpan>& spans, int n_tokens);

// Resolves overlaps among scored predictions: visit candidates by score
// descending, then start ascending, then shorter first, then label index, and
// keep each one that does not overlap anything already kept. The scored
// variant returns the winners with their scores; both orderings are by
// (start, end).
std::vector<ScoredSpan> greedy_decode_scored(std::vector<ScoredSpan> candidates);
std::vector<LabeledSpan> greedy_decode(std::vector<ScoredSpan> candidates);

}  // namespace distner
