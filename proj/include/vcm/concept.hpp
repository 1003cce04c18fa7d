#pragma once

// Greedy keep/blank selection and score-weighted segment merging (SM).

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "vcm/alignment.hpp"
#include "vcm/matrix.hpp"

namespace vcm {

struct SelectionMask {
  std::vector<std::uint8_t> mask;  // 1 = keep
  std::vector<double> scores;      // per-token weight, p_keep for greedy masks
};

// 1-based inclusive token range.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const Span&) const = default;
};

struct ConceptSegments {
  Matrix concepts;             // one row per run, K x d
  std::vector<Span> spans;
  std::vector<double> masses;  // score sum of each run

  std::size_t size() const noexcept { return concepts.rows(); }
  bool empty() const noexcept { return concepts.rows() == 0; }
};

// mask(t) = p_keep(t) > p_blank(t) (ties drop the token); scores = p_keep.
SelectionMask greedy_select(const EmissionSequence& emissions);

std::size_t count_mask_runs(const std::vector<std::uint8_t>& mask) noexcept;

// Score-weighted mean of each maximal kept run, computed from prefix sums of
// masked weighted features and masked scores. A run whose score sum is exactly
// zero divides by one instead.
ConceptSegments merge_segments(const Matrix& features, const SelectionMask& sel);

// Reference implementation: labels runs, then for every run scans every token
// and accumulates the members. O(runs * M * d).
ConceptSegments merge_segments_naive(const Matrix& features,
                                     const SelectionMask& sel);

using MergeInput = std::pair<Matrix, SelectionMask>;

std::vector<ConceptSegments> merge_batch(const std::vector<MergeInput>& batch);

std::vector<ConceptSegments> merge_batch_naive(
    const std::vector<MergeInput>& batch);

}  // namespace vcm
