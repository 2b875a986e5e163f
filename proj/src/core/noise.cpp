#include "core/noise.hpp"

#include <cstdio>
#include <sstream>

namespace distner {

Granularity parse_granularity(const std::string& text) {
  if (text == "token") return Granularity::Token;
  if (text == "span") return Granularity::Span;
  fail(ErrorKind::InvalidArgument, "granularity must be 'token' or 'span', got '" + text + "'");
}

std::int64_t TransitionMatrix::total() const {
  std::int64_t t = 0;
  for (const auto& row : counts)
    for (std::int64_t c : row) t += c;
  return t;
}

namespace {

TransitionMatrix make_matrix(const LabelSpace& labels) {
  TransitionMatrix m;
  m.classes = labels.names();
  m.classes.push_back("O");
  std::size_t n = m.classes.size();
  m.counts.assign(n, std::vector<std::int64_t>(n, 0));
  m.row_probs.assign(n, std::vector<double>(n, 0.0));
  m.zero_row.assign(n, false);
  return m;
}

void normalize_rows(TransitionMatrix& m) {
  for (std::size_t i = 0; i < m.counts.size(); ++i) {
    std::int64_t row_total = 0;
    for (std::int64_t c : m.counts[i]) row_total += c;
    if (row_total == 0) {
      m.zero_row[i] = true;
      continue;
    }
    for (std::size_t j = 0; j < m.counts[i].size(); ++j)
      m.row_probs[i][j] =
          static_cast<double>(m.counts[i][j]) / static_cast<double>(row_total);
  }
}

int tag_class(const BioTag& t, int o_index) {
  return t.kind == BioTag::O ? o_index : t.type;
}

}  // namespace

TransitionMatrix transition_matrix(const Dataset& ds, Granularity granularity) {
  if (!ds.has_gold())
    fail(ErrorKind::InvalidArgument, "transition matrix needs a gold column on every sentence");
  TransitionMatrix m = make_matrix(ds.labels);
  const int o = ds.labels.o_index();

  for (const Sentence& s : ds.sentences) {
    if (granularity == Granularity::Token) {
      for (int i = 0; i < s.length(); ++i) {
        int obs = tag_class(s.observed[static_cast<std::size_t>(i)], o);
        int tru = tag_class((*s.gold)[static_cast<std::size_t>(i)], o);
        m.counts[static_cast<std::size_t>(obs)][static_cast<std::size_t>(tru)]++;
      }
      continue;
    }
    std::vector<LabeledSpan> obs_spans = bio_to_spans(s.observed);
    std::vector<LabeledSpan> gold_spans = bio_to_spans(*s.gold);
    std::vector<bool> obs_matched(obs_spans.size(), false);
    for (const LabeledSpan& g : gold_spans) {
      int obs_class = o;
      for (std::size_t k = 0; k < obs_spans.size(); ++k) {
        if (obs_spans[k].same_boundaries(g)) {
          obs_class = obs_spans[k].label;
          obs_matched[k] = true;
          break;
        }
      }
      m.counts[static_cast<std::size_t>(obs_class)][static_cast<std::size_t>(g.label)]++;
    }
    for (std::size_t k = 0; k < obs_spans.size(); ++k) {
      if (!obs_matched[k])
        m.counts[static_cast<std::size_t>(obs_spans[k].label)][static_cast<std::size_t>(o)]++;
    }
  }
  normalize_rows(m);
  return m;
}

NoiseAreas decompose_areas(const TransitionMatrix& m) {
  NoiseAreas a;
  std::size_t n = m.classes.size();
  std::size_t o = n - 1;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      std::int64_t c = m.counts[i][j];
      if (i == j)
        a.correct += c;
      else if (i == o)
        a.missing += c;
      else
        a.wrong += c;
    }
  }
  return a;
}

Dataset mask_entities(const Dataset& ds, double mask_prob, std::uint64_t seed) {
  if (mask_prob < 0.0 || mask_prob > 1.0)
    fail(ErrorKind::InvalidArgument, "mask probability must lie in [0, 1]");
  Dataset out = ds;
  for (Sentence& s : out.sentences) {
    Rng rng(derive_seed(seed, Stream::Mask, static_cast<std::uint64_t>(s.id)));
    s.gold = s.observed;
    for (const LabeledSpan& span : bio_to_spans(*s.gold)) {
      if (!rng.bernoulli(mask_prob)) continue;
      for (int i = span.start; i <= span.end; ++i)
        s.observed[static_cast<std::size_t>(i)] = BioTag{BioTag::O, -1};
    }
  }
  return out;
}

Dataset flip_entity_labels(const Dataset& ds, double flip_prob, std::uint64_t seed) {
  if (flip_prob < 0.0 || flip_prob > 1.0)
    fail(ErrorKind::InvalidArgument, "flip probability must lie in [0, 1]");
  if (ds.labels.size() < 2)
    fail(ErrorKind::InvalidArgument, "label flips need at least two entity types");
  Dataset out = ds;
  const std::uint64_t others = static_cast<std::uint64_t>(out.labels.size() - 1);
  for (Sentence& s : out.sentences) {
    Rng rng(derive_seed(seed, Stream::Flip, static_cast<std::uint64_t>(s.id)));
    s.gold = s.observed;
    for (const LabeledSpan& span : bio_to_spans(*s.gold)) {
      if (!rng.bernoulli(flip_prob)) continue;
      int pick = static_cast<int>(rng.below(others));
      int new_label = pick >= span.label ? pick + 1 : pick;
      for (int i = span.start; i <= span.end; ++i)
        s.observed[static_cast<std::size_t>(i)].type = new_label;
    }
  }
  return out;
}

std::string matrix_to_csv(const TransitionMatrix& m) {
  std::ostringstream out;
  out << "observed\\true";
  for (const auto& c : m.classes) out << ',' << c;
  out << ",zero_row\n";
  char cell[32];
  for (std::size_t i = 0; i < m.classes.size(); ++i) {
    out << m.classes[i];
    for (std::size_t j = 0; j < m.classes.size(); ++j) {
      std::snprintf(cell, sizeof cell, "%.2f", m.row_probs[i][j] * 100.0);
      out << ',' << cell;
    }
    out << ',' << (m.zero_row[i] ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace distner
