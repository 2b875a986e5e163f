#include "core/llm_ingest.hpp"

#include <algorithm>
#include <cctype>

namespace distner {

namespace {

// Quote recognition. Ids pair an opener with its closer: straight quotes close
// themselves, curly quotes close with their right-hand partner. Returns 0 when
// pos is not at a quote; otherwise the id, with *len set to the byte length.
int quote_at(const std::string& s, std::size_t pos, std::size_t* len) {
  char c = s[pos];
  *len = 1;
  if (c == '\'') return 1;
  if (c == '"') return 2;
  if (c == '`') return 3;
  if (pos + 2 < s.size() && static_cast<unsigned char>(c) == 0xE2 &&
      static_cast<unsigned char>(s[pos + 1]) == 0x80) {
    unsigned char third = static_cast<unsigned char>(s[pos + 2]);
    *len = 3;
    if (third == 0x9C) return 4;  // left double
    if (third == 0x9D) return 5;  // right double
    if (third == 0x98) return 6;  // left single
    if (third == 0x99) return 7;  // right single
  }
  return 0;
}

bool quote_opens(int id) { return id == 1 || id == 2 || id == 3 || id == 4 || id == 6; }

int closer_for(int id) {
  switch (id) {
    case 4: return 5;
    case 6: return 7;
    default: return id;  // straight quotes close themselves
  }
}

bool is_opener(char c) { return c == '(' || c == '[' || c == '{'; }
bool is_closer(char c) { return c == ')' || c == ']' || c == '}'; }

// Splits tuple content on commas outside quoted runs. An unclosed quote runs
// to the end of the content rather than failing.
std::vector<std::string> split_top_level(const std::string& content) {
  std::vector<std::string> parts;
  std::string cur;
  int open_quote = 0;
  std::size_t i = 0;
  while (i < content.size()) {
    std::size_t qlen = 0;
    int q = quote_at(content, i, &qlen);
    if (q != 0) {
      if (open_quote == 0 && quote_opens(q)) {
        open_quote = q;
      } else if (open_quote != 0 && q == closer_for(open_quote)) {
        open_quote = 0;
      }
      cur.append(content, i, qlen);
      i += qlen;
      continue;
    }
    if (open_quote == 0 && content[i] == ',') {
      parts.push_back(cur);
      cur.clear();
      ++i;
      continue;
    }
    cur.push_back(content[i]);
    ++i;
  }
  parts.push_back(cur);
  return parts;
}

std::string trim_element(std::string text) {
  auto issp = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!text.empty() && issp(text.front())) text.erase(text.begin());
  while (!text.empty() && issp(text.back())) text.pop_back();
  // Strip one layer of matching surrounding quotes.
  std::size_t open_len = 0;
  int open = text.empty() ? 0 : quote_at(text, 0, &open_len);
  if (open != 0 && quote_opens(open) && text.size() > open_len) {
    int want = closer_for(open);
    // Find the quote that ends the string, if any.
    std::size_t tail = text.size();
    std::size_t tail_len = 0;
    for (std::size_t back = 1; back <= 3 && back <= text.size() - open_len; ++back) {
      std::size_t cand_len = 0;
      int cand = quote_at(text, text.size() - back, &cand_len);
      if (cand == want && cand_len == back) {
        tail = text.size() - back;
        tail_len = back;
        break;
      }
    }
    if (tail_len != 0 && tail >= open_len)
      text = text.substr(open_len, tail - open_len);
  }
  return text;
}

bool tag_is_valid(const std::string& tag) {
  if (tag == "O") return true;
  if (tag.size() < 3) return false;
  if (tag[0] != 'B' && tag[0] != 'I') return false;
  if (tag[1] != '-') return false;
  for (std::size_t i = 2; i < tag.size(); ++i)
    if (std::isspace(static_cast<unsigned char>(tag[i]))) return false;
  return true;
}

}  // namespace

TupleParse parse_tuples(const std::string& payload) {
  TupleParse out;
  std::size_t i = 0;
  const std::size_t n = payload.size();
  while (i < n) {
    if (!is_opener(payload[i])) {
      ++i;
      continue;
    }
    // Scan for the end of this group; an inner opener first means this bracket
    // is a container (like the list around the tuples), so descend into it.
    std::size_t j = i + 1;
    int open_quote = 0;
    bool nested = false;
    while (j < n) {
      std::size_t qlen = 0;
      int q = quote_at(payload, j, &qlen);
      if (q != 0) {
        if (open_quote == 0 && quote_opens(q)) open_quote = q;
        else if (open_quote != 0 && q == closer_for(open_quote)) open_quote = 0;
        j += qlen;
        continue;
      }
      if (open_quote == 0 && is_opener(payload[j])) {
        nested = true;
        break;
      }
      if (open_quote == 0 && is_closer(payload[j])) break;
      ++j;
    }
    if (nested) {
      i = j;
      continue;
    }
    if (j >= n) break;  // unclosed group, nothing more to find
    std::vector<std::string> parts = split_top_level(payload.substr(i + 1, j - i - 1));
    if (parts.size() == 2) {
      std::string word = trim_element(parts[0]);
      std::string tag = trim_element(parts[1]);
      if (!word.empty() && !tag.empty()) {
        if (!tag_is_valid(tag)) {
          tag = "O";
          ++out.invalid_tags;
        }
        out.tuples.push_back(WordTag{std::move(word), std::move(tag)});
      }
    }
    i = j + 1;
  }
  return out;
}

std::string align_status_name(AlignStatus status) {
  switch (status) {
    case AlignStatus::Exact: return "exact";
    case AlignStatus::LcsRepaired: return "lcs_repaired";
    case AlignStatus::FallbackO: return "fallback_O";
  }
  return "fallback_O";
}

AlignmentResult lcs_align(const std::vector<std::string>& tokens,
                          const std::vector<WordTag>& tuples, LabelSpace& labels) {
  if (tokens.empty()) fail(ErrorKind::InvalidArgument, "cannot align an empty sentence");

  AlignmentResult result;
  result.bio.assign(tokens.size(), BioTag{});
  if (tuples.empty()) {
    result.status = AlignStatus::FallbackO;
    return result;
  }

  auto intern = [&labels](const std::string& tag) {
    if (tag == "O") return BioTag{};
    BioTag t;
    t.kind = tag[0] == 'B' ? BioTag::B : BioTag::I;
    t.type = labels.add(tag.substr(2));
    return t;
  };

  const std::size_t n = tokens.size();
  const std::size_t m = tuples.size();

  bool identical = n == m;
  for (std::size_t i = 0; identical && i < n; ++i)
    if (tokens[i] != tuples[i].word) identical = false;
  if (identical) {
    for (std::size_t i = 0; i < n; ++i) result.bio[i] = intern(tuples[i].tag);
    result.matched = static_cast<int>(n);
    result.repaired = repair_bio(result.bio);
    result.status = AlignStatus::Exact;
    return result;
  }

  // Suffix-table LCS. Walking from the front and taking the match branch first
  // yields the leftmost of the maximal alignments.
  std::vector<std::vector<int>> dp(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      if (tokens[i] == tuples[j].word)
        dp[i][j] = dp[i + 1][j + 1] + 1;
      else
        dp[i][j] = std::max(dp[i + 1][j], dp[i][j + 1]);
    }
  }
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    if (tokens[i] == tuples[j].word) {
      result.bio[i] = intern(tuples[j].tag);
      ++result.matched;
      ++i;
      ++j;
    } else if (dp[i + 1][j] >= dp[i][j + 1]) {
      ++i;
    } else {
      ++j;
    }
  }
  result.repaired = repair_bio(result.bio);
  result.status = AlignStatus::LcsRepaired;
  return result;
}

}  // namespace distner
