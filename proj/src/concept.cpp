#include "vcm/concept.hpp"

#include <string>

#include "vcm/error.hpp"

namespace vcm {

namespace {

void check_dimensions(const Matrix& features, const SelectionMask& sel) {
  if (sel.mask.size() != sel.scores.size()) {
    throw DimensionMismatch("mask has " + std::to_string(sel.mask.size()) +
                            " entries but scores has " +
                            std::to_string(sel.scores.size()));
  }
  if (features.rows() != sel.mask.size()) {
    throw DimensionMismatch("features have " + std::to_string(features.rows()) +
                            " rows but mask has " +
                            std::to_string(sel.mask.size()) + " entries");
  }
}

}  // namespace

SelectionMask greedy_select(const EmissionSequence& emissions) {
  SelectionMask sel;
  sel.mask.resize(emissions.size());
  sel.scores.resize(emissions.size());
  for (std::size_t t = 0; t < emissions.size(); ++t) {
    sel.mask[t] = emissions[t].keep > emissions[t].blank ? 1 : 0;
    sel.scores[t] = emissions[t].keep;
  }
  return sel;
}

std::size_t count_mask_runs(const std::vector<std::uint8_t>& mask) noexcept {
  std::size_t runs = 0;
  std::uint8_t prev = 0;
  for (std::uint8_t m : mask) {
    if (m && !prev) ++runs;
    prev = m;
  }
  return runs;
}

ConceptSegments merge_segments(const Matrix& features, const SelectionMask& sel) {
  check_dimensions(features, sel);
  const std::size_t tokens = features.rows();
  const std::size_t width = features.cols();

  // Running sums over masked tokens only; a run's total is the difference of
  // the running sums at its end and just before its start.
  std::vector<double> cum_x(width, 0.0);
  double cum_score = 0.0;
  std::vector<double> run_base_x(width, 0.0);
  double run_base_score = 0.0;

  ConceptSegments out;
  out.concepts = Matrix(count_mask_runs(sel.mask), width);
  std::size_t run = 0;
  std::size_t run_start = 0;
  for (std::size_t t = 0; t < tokens; ++t) {
    if (!sel.mask[t]) continue;
    const bool opens = t == 0 || !sel.mask[t - 1];
    if (opens) {
      run_base_x = cum_x;
      run_base_score = cum_score;
      run_start = t;
    }
    const double w = sel.scores[t];
    auto f = features.row(t);
    for (std::size_t c = 0; c < width; ++c) cum_x[c] += w * f[c];
    cum_score += w;

    const bool closes = t + 1 == tokens || !sel.mask[t + 1];
    if (closes) {
      const double mass = cum_score - run_base_score;
      const double divisor = mass == 0.0 ? 1.0 : mass;
      auto merged = out.concepts.row(run++);
      for (std::size_t c = 0; c < width; ++c)
        merged[c] = (cum_x[c] - run_base_x[c]) / divisor;
      out.spans.push_back({run_start + 1, t + 1});
      out.masses.push_back(mass);
    }
  }
  return out;
}

ConceptSegments merge_segments_naive(const Matrix& features,
                                     const SelectionMask& sel) {
  check_dimensions(features, sel);
  const std::size_t tokens = features.rows();
  const std::size_t width = features.cols();

  // Segment id per token, -1 for dropped tokens.
  std::vector<long> segment(tokens, -1);
  std::vector<Span> spans;
  for (std::size_t t = 0; t < tokens; ++t) {
    if (!sel.mask[t]) continue;
    if (t == 0 || !sel.mask[t - 1]) spans.push_back({t + 1, t + 1});
    spans.back().end = t + 1;
    segment[t] = static_cast<long>(spans.size()) - 1;
  }

  ConceptSegments out;
  out.concepts = Matrix(spans.size(), width);
  for (std::size_t k = 0; k < spans.size(); ++k) {
    auto sum = out.concepts.row(k);
    double mass = 0.0;
    for (std::size_t t = 0; t < tokens; ++t) {
      if (segment[t] != static_cast<long>(k)) continue;
      for (std::size_t c = 0; c < width; ++c)
        sum[c] += sel.scores[t] * features(t, c);
      mass += sel.scores[t];
    }
    const double divisor = mass == 0.0 ? 1.0 : mass;
    for (double& v : sum) v /= divisor;
    out.spans.push_back(spans[k]);
    out.masses.push_back(mass);
  }
  return out;
}

std::vector<ConceptSegments> merge_batch(const std::vector<MergeInput>& batch) {
  std::vector<ConceptSegments> out;
  out.reserve(batch.size());
  for (const auto& [features, sel] : batch) out.push_back(merge_segments(features, sel));
  return out;
}

std::vector<ConceptSegments> merge_batch_naive(
    const std::vector<MergeInput>& batch) {
  std::vector<ConceptSegments> out;
  out.reserve(batch.size());
  for (const auto& [features, sel] : batch)
    out.push_back(merge_segments_naive(features, sel));
  return out;
}

}  // namespace vcm
