#pragma once

// Test-only reference computations. None of these share code paths with the
// dynamic programs they check: alignments are enumerated as explicit binary
// strings and derivatives come from central differences of the loss.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "vcm/alignment.hpp"
#include "vcm/matrix.hpp"
#include "vcm/random.hpp"

namespace vcm::testing {

struct Enumeration {
  double total = 0.0;
  Matrix gamma;                 // posterior over lattice states, per token
  std::vector<Symbol> best;     // max-weight string with L keep-runs
  double best_weight = -1.0;
};

// Token t of the string with `runs_so_far` runs opened (inclusive) sits in
// lattice state 2k-1 when kept and 2k when dropped.
inline Enumeration enumerate_alignments(const EmissionSequence& em, std::size_t concepts) {
  const std::size_t tokens = em.size();
  Enumeration out;
  out.gamma = Matrix(tokens, 2 * concepts + 1);
  std::vector<std::size_t> states(tokens);
  for (std::uint32_t bits = 0; bits < (std::uint32_t{1} << tokens); ++bits) {
    std::size_t runs = 0;
    double weight = 1.0;
    for (std::size_t t = 0; t < tokens; ++t) {
      const bool keep = (bits >> t) & 1U;
      const bool prev = t > 0 && ((bits >> (t - 1)) & 1U);
      if (keep && !prev) ++runs;
      if (runs > concepts) break;
      states[t] = keep ? 2 * runs - 1 : 2 * runs;
      weight *= keep ? em[t].keep : em[t].blank;
    }
    if (runs != concepts) continue;
    out.total += weight;
    for (std::size_t t = 0; t < tokens; ++t) out.gamma(t, states[t]) += weight;
    if (weight > out.best_weight) {
      out.best_weight = weight;
      out.best.resize(tokens);
      for (std::size_t t = 0; t < tokens; ++t)
        out.best[t] = ((bits >> t) & 1U) ? Symbol::Keep : Symbol::Blank;
    }
  }
  if (out.total > 0.0)
    for (double& g : out.gamma.data()) g /= out.total;
  return out;
}

inline Matrix finite_difference_gradient(const LogitSequence& logits,
                                         std::size_t concepts, double h = 1e-5) {
  Matrix grad(logits.size(), 2);
  for (std::size_t t = 0; t < logits.size(); ++t) {
    for (int c = 0; c < 2; ++c) {
      auto bumped = [&](double delta) {
        LogitSequence copy = logits;
        (c == 0 ? copy[t].blank : copy[t].keep) += delta;
        return vcm_loss(copy.softmax(), concepts, SpaceMode::Log);
      };
      grad(t, static_cast<std::size_t>(c)) = (bumped(h) - bumped(-h)) / (2.0 * h);
    }
  }
  return grad;
}

// |a - b| / max(|a|, |b|, floor)
inline double relative_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline EmissionSequence random_emissions(Rng& rng, std::size_t tokens) {
  std::vector<double> keep(tokens);
  for (double& k : keep) k = rng.uniform(0.01, 0.99);
  return EmissionSequence::from_keep_probs(keep);
}

inline LogitSequence random_logits(Rng& rng, std::size_t tokens, double scale = 1.0) {
  std::vector<Emission> logits(tokens);
  for (Emission& u : logits) u = {scale * rng.normal(), scale * rng.normal()};
  return LogitSequence(std::move(logits));
}

}  // namespace vcm::testing
