#pragma once

// Target concept length from keyword statistics, the mask-ratio coefficient
// schedule and the combined fine-tuning loss.

#include <cstddef>

namespace vcm {

struct KeywordStats {
  long n_instruction = 0;
  long n_response = 0;
  double mask_ratio = 0.0;  // r in [0, 1]
};

struct LengthConfig {
  double info_scale = 0.25;  // S in (0, 1/2]
  long n_key_max = 10;
  long n_key_min = -35;
  std::size_t min_length = 1;

  void validate() const;
};

struct CoefficientParams {
  double a = 0.2;
  double b = 1.2;
  double k = 5.0;

  void validate() const;
};

// round_half_up((1 - r) * n_instruction) - n_response, clamped to
// [n_key_min, n_key_max]. Instruction-minus-response: masking more
// instruction keywords never raises the difference.
long effective_keyword_diff(const KeywordStats& stats,
                            const LengthConfig& cfg = {});

// floor(M * S * (1 - (N_key - min) / (max - min))), clamped to
// [min_length, floor((M + 1) / 2)].
std::size_t estimate_length(std::size_t tokens, double n_key,
                            const LengthConfig& cfg = {});

// Unclamped formula value (may be 0).
std::size_t raw_length(std::size_t tokens, double n_key,
                       const LengthConfig& cfg = {});

// a + (b - a) * (1 + tanh(k * (2r - 1))) / 2
double epsilon(double mask_ratio, const CoefficientParams& params = {});

// ntp + epsilon(r) * vcm
double total_loss(double ntp_loss, double vcm_loss, double mask_ratio,
                  const CoefficientParams& params = {});

}  // namespace vcm
