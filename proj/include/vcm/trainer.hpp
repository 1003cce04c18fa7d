#pragma once

// Plain gradient descent on a synthetic logit sequence using the analytic
// alignment gradient.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "vcm/alignment.hpp"
#include "vcm/concept.hpp"
#include "vcm/length_policy.hpp"

namespace vcm {

struct TrainConfig {
  std::size_t tokens = 64;         // M
  std::size_t concepts = 8;        // L
  double learning_rate = 0.1;      // eta
  std::size_t max_steps = 2000;
  std::uint64_t seed = 7;
  double plateau_tolerance = 1e-6;
  double init_scale = 0.1;         // stddev of the initial logits
  double gradient_weight = 1.0;    // multiplies every applied step
  std::size_t feature_width = 4;   // synthetic token features for the final merge

  void validate() const;
};

struct TrainTrace {
  std::vector<double> losses;          // loss before each applied update
  std::vector<Emission> final_logits;
  std::vector<std::uint8_t> final_mask;  // greedy keep mask of the final logits
  ConceptSegments final_concepts;
  std::size_t final_runs = 0;      // runs in the greedy mask
  std::size_t best_path_runs = 0;  // runs on the max-product path
  bool plateaued = false;          // stopped early on |dL| < tolerance
  bool converged = false;          // best_path_runs == L and loss decreased

  double initial_loss() const { return losses.front(); }
  double final_loss() const { return losses.back(); }
};

// logits <- logits - step * gradient
void apply_gradient_step(std::vector<Emission>& logits, const Matrix& gradient,
                         double step);

// Stops early once the decoded path has exactly L runs and the loss changed
// by less than plateau_tolerance, otherwise after max_steps. `converged`
// reports the success condition on the final logits either way.
TrainTrace train_logits(const TrainConfig& config);

struct CurriculumEntry {
  KeywordStats stats;
  long n_key = 0;
  std::size_t concepts = 0;
  double epsilon = 0.0;
  TrainTrace trace;
};

struct CurriculumResult {
  std::vector<CurriculumEntry> entries;
  // For every pair of stages with equal keyword counts, a larger mask ratio
  // never produced a shorter target length.
  bool length_monotone = true;
};

// For each stage: recompute L from the keyword stats, weight the applied
// gradient by epsilon(r) and train. Stage i uses seed base.seed + i.
CurriculumResult masked_curriculum(const TrainConfig& base,
                                   const std::vector<KeywordStats>& schedule,
                                   const LengthConfig& length = {},
                                   const CoefficientParams& coefficient = {});

}  // namespace vcm
