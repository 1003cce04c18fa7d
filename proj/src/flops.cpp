#include "vcm/flops.hpp"

#include "vcm/error.hpp"

namespace vcm {

FlopsProfile FlopsProfile::with_default_mean(double layers, double hidden) {
  FlopsProfile p;
  p.layers = layers;
  p.hidden = hidden;
  p.ffn = 4.0 * hidden;
  p.n_mean = hidden / 4.0;
  p.n_var = 0.0;
  p.scale = 1.0;
  return p;
}

FlopsProfile FlopsProfile::scaled() const {
  FlopsProfile p = *this;
  p.n_mean = scale * n_mean;
  p.n_var = scale * scale * n_var;
  p.scale = 1.0;
  return p;
}

void FlopsProfile::validate() const {
  if (!(layers > 0 && hidden > 0 && ffn > 0 && n_mean > 0))
    throw InvalidArgument("FLOPs profile needs positive layers, hidden, ffn and n_mean");
  if (!(n_var >= 0)) throw InvalidArgument("sequence-length variance must be >= 0");
  if (!(scale > 0 && scale <= 1)) throw InvalidArgument("scale must lie in (0, 1]");
}

double flops_exact(const FlopsProfile& profile, double n) {
  profile.validate();
  if (!(n > 0)) throw InvalidArgument("sequence length must be positive");
  const double d = profile.hidden;
  return profile.layers * (4 * n * d * d + 2 * n * n * d + 2 * n * d * profile.ffn);
}

double flops_expected(const FlopsProfile& profile) {
  profile.validate();
  const FlopsProfile s = profile.scaled();
  const double d = s.hidden;
  const double mean_sq = s.n_var + s.n_mean * s.n_mean;
  return s.layers * (12 * d * d * s.n_mean + 2 * d * mean_sq);
}

double reduction_ratio(const FlopsProfile& profile) {
  FlopsProfile base = profile;
  base.scale = 1.0;
  return flops_expected(profile) / flops_expected(base);
}

double expected_unscaled_closed_form(double layers, double hidden, double n_var) {
  const double d = hidden;
  return layers * (25 * d * d * d / 8 + 2 * d * n_var);
}

double expected_eighth_closed_form(double layers, double hidden, double n_var) {
  const double d = hidden;
  return layers * (3 * d * d * d / 8 + d * n_var / 32 + d * d * d / 512);
}

}  // namespace vcm
