#include "core/corpus.hpp"

#include <algorithm>
#include <sstream>

namespace distner {

int LabelSpace::add(const std::string& name) {
  auto it = index_.find(name);
  if (it != index_.end()) return it->second;
  int idx = static_cast<int>(names_.size());
  names_.push_back(name);
  index_.emplace(name, idx);
  return idx;
}

int LabelSpace::find(const std::string& name) const {
  if (name == "O") return o_index();
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

int LabelSpace::require(const std::string& name) const {
  int idx = find(name);
  if (idx < 0) fail(ErrorKind::InvalidArgument, "unknown label: " + name);
  return idx;
}

const std::string& LabelSpace::name(int index) const {
  static const std::string o = "O";
  if (index == o_index()) return o;
  if (index < 0 || index > o_index())
    fail(ErrorKind::Internal, "label index out of range: " + std::to_string(index));
  return names_[static_cast<std::size_t>(index)];
}

BioTag parse_bio_tag(const std::string& text, LabelSpace& labels, int line_no) {
  if (text == "O") return BioTag{BioTag::O, -1};
  if (text.size() < 3 || (text[0] != 'B' && text[0] != 'I') || text[1] != '-')
    fail_parse(line_no, "malformed tag '" + text + "' (expected O, B-TYPE or I-TYPE)");
  BioTag tag;
  tag.kind = text[0] == 'B' ? BioTag::B : BioTag::I;
  tag.type = labels.add(text.substr(2));
  return tag;
}

std::string bio_tag_string(const BioTag& tag, const LabelSpace& labels) {
  switch (tag.kind) {
    case BioTag::O:
      return "O";
    case BioTag::B:
      return "B-" + labels.name(tag.type);
    case BioTag::I:
      return "I-" + labels.name(tag.type);
  }
  fail(ErrorKind::Internal, "bad tag kind");
}

bool Dataset::has_gold() const {
  for (const auto& s : sentences)
    if (!s.gold.has_value()) return false;
  return !sentences.empty();
}

namespace {

// Shared skeleton for the strict parser and the tokens-only reader. Collects
// physical lines into sentences and reports 1-based line numbers on errors.
struct RawSentence {
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_nos;
};

std::vector<RawSentence> collect_sentences(const std::string& text) {
  std::vector<RawSentence> out;
  RawSentence current;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto flush = [&] {
    if (!current.rows.empty()) {
      out.push_back(std::move(current));
      current = RawSentence{};
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cols = split_whitespace(line);
    if (cols.empty()) {
      flush();
      continue;
    }
    current.rows.push_back(std::move(cols));
    current.line_nos.push_back(line_no);
  }
  flush();
  return out;
}

// Validates a column of tags in sentence order, promoting orphan I-X to B-X
// when repair is allowed. Returns the number of promotions.
int check_bio_column(std::vector<BioTag>& tags, const std::vector<int>& line_nos,
                     bool repair) {
  int repaired = 0;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i].kind != BioTag::I) continue;
    bool ok = i > 0 && tags[i - 1].kind != BioTag::O && tags[i - 1].type == tags[i].type;
    if (ok) continue;
    if (!repair)
      fail_parse(line_nos[i], "I- tag continues nothing (no matching B-/I- before it)");
    tags[i].kind = BioTag::B;
    ++repaired;
  }
  return repaired;
}

}  // namespace

Dataset parse_conll(const std::string& text, bool has_gold, bool repair) {
  Dataset ds;
  const std::size_t want_cols = has_gold ? 3 : 2;
  for (const RawSentence& raw : collect_sentences(text)) {
    Sentence s;
    s.id = static_cast<int>(ds.sentences.size());
    std::vector<BioTag> gold;
    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
      const auto& cols = raw.rows[r];
      if (cols.size() != want_cols)
        fail_parse(raw.line_nos[r], "expected " + std::to_string(want_cols) +
                                        " columns, got " + std::to_string(cols.size()));
      s.tokens.push_back(cols[0]);
      s.observed.push_back(parse_bio_tag(cols[1], ds.labels, raw.line_nos[r]));
      if (has_gold) gold.push_back(parse_bio_tag(cols[2], ds.labels, raw.line_nos[r]));
    }
    ds.repaired_tags += check_bio_column(s.observed, raw.line_nos, repair);
    if (has_gold) {
      ds.repaired_tags += check_bio_column(gold, raw.line_nos, repair);
      s.gold = std::move(gold);
    }
    ds.sentences.push_back(std::move(s));
  }
  return ds;
}

std::string serialize_conll(const Dataset& ds, bool write_gold) {
  std::ostringstream out;
  bool first = true;
  for (const auto& s : ds.sentences) {
    if (!first) out << '\n';
    first = false;
    for (int i = 0; i < s.length(); ++i) {
      out << s.tokens[static_cast<std::size_t>(i)] << ' '
          << bio_tag_string(s.observed[static_cast<std::size_t>(i)], ds.labels);
      if (write_gold) {
        if (!s.gold.has_value())
          fail(ErrorKind::InvalidArgument,
               "gold column requested but sentence " + std::to_string(s.id) +
                   " has no gold tags");
        out << ' ' << bio_tag_string((*s.gold)[static_cast<std::size_t>(i)], ds.labels);
      }
      out << '\n';
    }
  }
  return out.str();
}

Dataset parse_tokens_only(const std::string& text) {
  Dataset ds;
  for (const RawSentence& raw : collect_sentences(text)) {
    Sentence s;
    s.id = static_cast<int>(ds.sentences.size());
    for (const auto& cols : raw.rows) {
      s.tokens.push_back(cols[0]);
      s.observed.push_back(BioTag{BioTag::O, -1});
    }
    ds.sentences.push_back(std::move(s));
  }
  return ds;
}

Dataset with_reference(const Dataset& ds, const Dataset& reference) {
  if (ds.sentences.size() != reference.sentences.size())
    fail(ErrorKind::InvalidArgument,
         "sentence counts differ: " + std::to_string(ds.sentences.size()) + " vs " +
             std::to_string(reference.sentences.size()));
  Dataset out;
  out.labels = ds.labels;
  out.repaired_tags = ds.repaired_tags;
  out.embeddings = ds.embeddings;
  for (std::size_t i = 0; i < ds.sentences.size(); ++i) {
    const Sentence& a = ds.sentences[i];
    const Sentence& b = reference.sentences[i];
    if (a.tokens.size() != b.tokens.size())
      fail(ErrorKind::InvalidArgument,
           "sentence " + std::to_string(a.id) + ": lengths differ (" +
               std::to_string(a.tokens.size()) + " vs " + std::to_string(b.tokens.size()) +
               " tokens)");
    for (std::size_t t = 0; t < a.tokens.size(); ++t)
      if (a.tokens[t] != b.tokens[t])
        fail(ErrorKind::InvalidArgument,
             "sentence " + std::to_string(a.id) + ": token " + std::to_string(t) +
                 " differs ('" + a.tokens[t] + "' vs '" + b.tokens[t] + "')");
    Sentence s = a;
    std::vector<BioTag> gold = b.observed;
    for (BioTag& tag : gold)
      if (tag.kind != BioTag::O) tag.type = out.labels.add(reference.labels.name(tag.type));
    s.gold = std::move(gold);
    out.sentences.push_back(std::move(s));
  }
  return out;
}

bool bio_is_valid(const std::vector<BioTag>& tags) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i].kind != BioTag::I) continue;
    if (i == 0 || tags[i - 1].kind == BioTag::O || tags[i - 1].type != tags[i].type)
      return false;
  }
  return true;
}

int repair_bio(std::vector<BioTag>& tags) {
  int repaired = 0;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i].kind != BioTag::I) continue;
    if (i == 0 || tags[i - 1].kind == BioTag::O || tags[i - 1].type != tags[i].type) {
      tags[i].kind = BioTag::B;
      ++repaired;
    }
  }
  return repaired;
}

std::vector<LabeledSpan> bio_to_spans(const std::vector<BioTag>& tags) {
  std::vector<LabeledSpan> spans;
  int start = -1;
  int type = -1;
  auto close = [&](int end) {
    if (start >= 0) spans.push_back(LabeledSpan{start, end, type});
    start = -1;
    type = -1;
  };
  for (int i = 0; i < static_cast<int>(tags.size()); ++i) {
    const BioTag& t = tags[static_cast<std::size_t>(i)];
    switch (t.kind) {
      case BioTag::O:
        close(i - 1);
        break;
      case BioTag::B:
        close(i - 1);
        start = i;
        type = t.type;
        break;
      case BioTag::I:
        if (start < 0 || t.type != type)
          fail(ErrorKind::InvalidArgument, "invalid BIO sequence at token " +
                                               std::to_string(i) +
                                               " (run repair first)");
        break;
    }
  }
  close(static_cast<int>(tags.size()) - 1);
  return spans;
}

std::vector<BioTag> spans_to_bio(const std::vector<LabeledSpan>& spans, int n_tokens) {
  std::vector<BioTag> tags(static_cast<std::size_t>(n_tokens), BioTag{BioTag::O, -1});
  std::vector<LabeledSpan> sorted = spans;
  std::sort(sorted.begin(), sorted.end(), [](const LabeledSpan& a, const LabeledSpan& b) {
    return a.start != b.start ? a.start < b.start : a.end < b.end;
  });
  int prev_end = -1;
  for (const auto& sp : sorted) {
    if (sp.start < 0 || sp.end >= n_tokens || sp.start > sp.end)
      fail(ErrorKind::InvalidArgument,
           "span [" + std::to_string(sp.start) + "," + std::to_string(sp.end) +
               "] out of range for " + std::to_string(n_tokens) + " tokens");
    if (sp.start <= prev_end)
      fail(ErrorKind::InvalidArgument,
           "overlapping spans cannot be written as BIO tags");
    prev_end = sp.end;
    tags[static_cast<std::size_t>(sp.start)] = BioTag{BioTag::B, sp.label};
    for (int i = sp.start + 1; i <= sp.end; ++i)
      tags[static_cast<std::size_t>(i)] = BioTag{BioTag::I, sp.label};
  }
  return tags;
}

std::vector<ScoredSpan> greedy_decode_scored(std::vector<ScoredSpan> candidates) {
  std::sort(candidates.begin(), candidates.end(),
            [](const ScoredSpan& a, const ScoredSpan& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.span.start != b.span.start) return a.span.start < b.span.start;
              int len_a = a.span.end - a.span.start;
              int len_b = b.span.end - b.span.start;
              if (len_a != len_b) return len_a < len_b;
              return a.span.label < b.span.label;
            });
  std::vector<ScoredSpan> kept;
  for (const auto& c : candidates) {
    bool clash = false;
    for (const auto& k : kept) {
      if (spans_overlap(c.span, k.span)) {
        clash = true;
        break;
      }
    }
    if (!clash) kept.push_back(c);
  }
  std::sort(kept.begin(), kept.end(), [](const ScoredSpan& a, const ScoredSpan& b) {
    return a.span.start != b.span.start ? a.span.start < b.span.start
                                        : a.span.end < b.span.end;
  });
  return kept;
}

std::vector<LabeledSpan> greedy_decode(std::vector<ScoredSpan> candidates) {
  std::vector<ScoredSpan> kept = greedy_decode_scored(std::move(candidates));
  std::vector<LabeledSpan> out;
  out.reserve(kept.size());
  for (const auto& k : kept) out.push_back(k.span);
  return out;
}

const std::vector<double>* FileEmbeddings::find(int sentence_id, int token_index) const {
  std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(sentence_id)) << 32) |
                      static_cast<std::uint32_t>(token_index);
  auto it = vectors_.find(key);
  return it == vectors_.end() ? nullptr : &it->second;
}

const std::vector<double>& FileEmbeddings::at(int sentence_id, int token_index) const {
  const std::vector<double>* v = find(sentence_id, token_index);
  if (!v)
    fail(ErrorKind::InvalidArgument,
         "no embedding vector for sentence " + std::to_string(sentence_id) +
             " token " + std::to_string(token_index));
  return *v;
}

FileEmbeddings FileEmbeddings::parse(const std::string& text) {
  FileEmbeddings fe;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string> cols = split_whitespace(line);
    if (cols.empty()) continue;
    if (cols.size() < 3) fail_parse(line_no, "expected: sentence_id token_index v1 ... vd");
    int sid, tid;
    try {
      sid = std::stoi(cols[0]);
      tid = std::stoi(cols[1]);
    } catch (const std::exception&) {
      fail_parse(line_no, "bad sentence/token index");
    }
    std::vector<double> vec;
    vec.reserve(cols.size() - 2);
    for (std::size_t i = 2; i < cols.size(); ++i) {
      try {
        vec.push_back(std::stod(cols[i]));
      } catch (const std::exception&) {
        fail_parse(line_no, "bad vector component '" + cols[i] + "'");
      }
    }
    if (fe.dim_ == 0)
      fe.dim_ = static_cast<int>(vec.size());
    else if (static_cast<int>(vec.size()) != fe.dim_)
      fail_parse(line_no, "vector dimension changed mid-file");
    std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(sid)) << 32) |
                        static_cast<std::uint32_t>(tid);
    fe.vectors_[key] = std::move(vec);
  }
  if (fe.vectors_.empty()) fail(ErrorKind::Parse, "embedding file holds no vectors");
  return fe;
}

FileEmbeddings FileEmbeddings::load(const std::string& path) {
  return parse(read_file(path));
}

}  // namespace distner
