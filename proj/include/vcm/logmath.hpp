#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace vcm {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) without overflow; either side may be -inf.
inline double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kLogZero) return a;
  return a + std::log1p(std::exp(b - a));
}

// log(p) with log(0) = -inf rather than a floating-point exception.
inline double safe_log(double p) { return p > 0.0 ? std::log(p) : kLogZero; }

}  // namespace vcm
