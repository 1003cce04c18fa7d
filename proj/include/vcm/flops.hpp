#pragma once

// Decoder FLOPs as a function of sequence length, and the expected-cost ratio
// when the sequence is shortened by a constant factor. A multiply-accumulate
// counts as two FLOPs.

namespace vcm {

struct FlopsProfile {
  double layers = 32;       // T
  double hidden = 4096;     // d
  double ffn = 11008;       // m
  double n_mean = 1024;     // E[n]
  double n_var = 0;         // Var[n]
  double scale = 1.0;       // applied to n, in (0, 1]

  // Profile with E[n] = d / 4 and m = 4d.
  static FlopsProfile with_default_mean(double layers, double hidden);

  // Same profile with n replaced by scale * n.
  FlopsProfile scaled() const;

  void validate() const;
};

// T * (4 n d^2 + 2 n^2 d + 2 n d m)
double flops_exact(const FlopsProfile& profile, double n);

// T * (12 d^2 E[n'] + 2 d E[n'^2]) with n' = scale * n, using m = 4d.
double flops_expected(const FlopsProfile& profile);

// flops_expected(profile) / flops_expected(profile with scale 1).
double reduction_ratio(const FlopsProfile& profile);

// Closed forms for E[n] = d/4: unscaled, and scaled by 1/8.
double expected_unscaled_closed_form(double layers, double hidden, double n_var);
double expected_eighth_closed_form(double layers, double hidden, double n_var);

}  // namespace vcm
