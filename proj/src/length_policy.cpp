#include "vcm/length_policy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vcm/error.hpp"

namespace vcm {

namespace {

// Guards floor() against products such as 576 * (1/6) landing a few ulps
// below an exact integer.
constexpr double kFloorSlack = 1e-9;

void require_ratio(double r) {
  if (!(r >= 0.0 && r <= 1.0))
    throw InvalidArgument("mask ratio must lie in [0, 1], got " + std::to_string(r));
}

}  // namespace

void LengthConfig::validate() const {
  if (!(info_scale > 0.0 && info_scale <= 0.5))
    throw InvalidArgument("information scale S must lie in (0, 1/2], got " +
                          std::to_string(info_scale));
  if (n_key_max <= n_key_min)
    throw InvalidArgument("n_key_max must exceed n_key_min");
}

void CoefficientParams::validate() const {
  if (!(b > a)) throw InvalidArgument("coefficient bounds need b > a");
  if (!(k > 0.0)) throw InvalidArgument("coefficient growth rate k must be positive");
}

long effective_keyword_diff(const KeywordStats& stats, const LengthConfig& cfg) {
  require_ratio(stats.mask_ratio);
  if (stats.n_instruction < 0 || stats.n_response < 0)
    throw InvalidArgument("keyword counts must be nonnegative");
  const double kept = (1.0 - stats.mask_ratio) * static_cast<double>(stats.n_instruction);
  const long visible = static_cast<long>(std::floor(kept + 0.5));
  return std::clamp(visible - stats.n_response, cfg.n_key_min, cfg.n_key_max);
}

std::size_t raw_length(std::size_t tokens, double n_key, const LengthConfig& cfg) {
  cfg.validate();
  if (tokens == 0) throw InvalidArgument("token count M must be positive");
  const double span = static_cast<double>(cfg.n_key_max - cfg.n_key_min);
  const double headroom = static_cast<double>(cfg.n_key_max) - n_key;
  const double value =
      static_cast<double>(tokens) * cfg.info_scale * (headroom / span);
  return value <= 0.0 ? 0 : static_cast<std::size_t>(std::floor(value + kFloorSlack));
}

std::size_t estimate_length(std::size_t tokens, double n_key,
                            const LengthConfig& cfg) {
  const std::size_t ceiling = (tokens + 1) / 2;
  const std::size_t floor_len = std::min(cfg.min_length, ceiling);
  return std::clamp(raw_length(tokens, n_key, cfg), floor_len, ceiling);
}

double epsilon(double mask_ratio, const CoefficientParams& params) {
  require_ratio(mask_ratio);
  const double s = (1.0 + std::tanh(params.k * (2.0 * mask_ratio - 1.0))) / 2.0;
  return params.a + (params.b - params.a) * s;
}

double total_loss(double ntp_loss, double vcm_loss, double mask_ratio,
                  const CoefficientParams& params) {
  return ntp_loss + epsilon(mask_ratio, params) * vcm_loss;
}

}  // namespace vcm
