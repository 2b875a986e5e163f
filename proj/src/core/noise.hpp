#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/corpus.hpp"

namespace distner {

enum class Granularity { Token, Span };
Granularity parse_granularity(const std::string& text);

// Confusion counts between observed annotation and gold truth. Rows are the
// observed class, columns the true class, entity types first and O last.
struct TransitionMatrix {
  std::vector<std::string> classes;            // |L| + 1 names, O last
  std::vector<std::vector<std::int64_t>> counts;
  std::vector<std::vector<double>> row_probs;  // row-normalized, zero rows stay 0
  std::vector<bool> zero_row;

  std::int64_t total() const;
};

// Token granularity compares tag types position by position. Span granularity
// pairs each gold entity with an identical-boundary observed entity (O when
// none exists) and counts boundary-less observed entities as (type, O), so a
// partial overlap contributes one miss and one spurious hit.
TransitionMatrix transition_matrix(const Dataset& ds, Granularity granularity);

struct NoiseAreas {
  std::int64_t correct = 0;  // observed class equals true class
  std::int64_t missing = 0;  // true entity observed as O
  std::int64_t wrong = 0;    // observed entity with a different true class
  std::int64_t total() const { return correct + missing + wrong; }
};

NoiseAreas decompose_areas(const TransitionMatrix& m);

// Hides each gold entity independently with probability mask_prob, whole span
// at a time; the original annotation is kept as the gold column. Input tags in
// `observed` are treated as the truth.
Dataset mask_entities(const Dataset& ds, double mask_prob, std::uint64_t seed);

// Synthetic label corruptor: each entity keeps its boundaries but swaps its
// type for a uniformly chosen different one with probability flip_prob.
// Needs at least two entity types.
Dataset flip_entity_labels(const Dataset& ds, double flip_prob, std::uint64_t seed);

// Header row lists true classes; the lead column is the observed class; cells
// are row percentages with two decimals; the trailing flag column marks rows
// with no mass.
std::string matrix_to_csv(const TransitionMatrix& m);

}  // namespace distner
