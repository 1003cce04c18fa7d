#pragma once

// Forward-backward alignment of M per-token keep/blank emissions against an
// extended target [blank, keep, blank, ..., keep, blank] of length 2L+1.
//
// Index conventions: time t and state l are 0-based in code. State l holds
// the keep symbol iff l is odd. A lattice path starts in state 0 or 1, moves
// by "stay" or "advance by one" only (no skip transitions), and ends in state
// 2L-1 or 2L. Every such path emits exactly L maximal runs of keep tokens, so
// the DP total equals the sum over binary strings with L keep-runs.
//
// Backward convention: beta(t, l) excludes the emission at time t, i.e.
//   beta(M-1, 2L-1) = beta(M-1, 2L) = 1
//   beta(t, l) = sum_{l' in {l, l+1}} p(z_l' | y_{t+1}) * beta(t+1, l')
// so that sum_l alpha(t,l) * beta(t,l) = p(Z|Y) for every t and the
// posterior gamma = alpha * beta / p has unit row sums.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "vcm/matrix.hpp"

namespace vcm {

enum class Symbol : std::uint8_t { Blank = 0, Keep = 1 };

enum class SpaceMode { Linear, Log };

// Probability (or logit) pair for one vision token.
struct Emission {
  double blank = 0.0;
  double keep = 0.0;

  double operator[](Symbol s) const noexcept {
    return s == Symbol::Keep ? keep : blank;
  }
  bool operator==(const Emission&) const = default;
};

// Per-token probabilities p(blank | y_t), p(keep | y_t). Construction
// validates that each pair lies in [0,1] and sums to one within 1e-9.
class EmissionSequence {
 public:
  explicit EmissionSequence(std::vector<Emission> probs);

  // Convenience: p_blank = 1 - p_keep for each entry.
  static EmissionSequence from_keep_probs(std::span<const double> keep);

  std::size_t size() const noexcept { return probs_.size(); }
  const Emission& operator[](std::size_t t) const noexcept { return probs_[t]; }
  std::span<const Emission> probs() const noexcept { return probs_; }

  double prob(std::size_t t, Symbol s) const noexcept { return probs_[t][s]; }
  double log_prob(std::size_t t, Symbol s) const noexcept {
    return log_probs_[t][s];
  }

 private:
  friend class LogitSequence;
  EmissionSequence(std::vector<Emission> probs, std::vector<Emission> log_probs)
      : probs_(std::move(probs)), log_probs_(std::move(log_probs)) {}

  std::vector<Emission> probs_;
  std::vector<Emission> log_probs_;
};

// Unconstrained per-token logits (u_blank, u_keep). The emission pair is the
// two-way softmax of the logits.
class LogitSequence {
 public:
  explicit LogitSequence(std::vector<Emission> logits);

  std::size_t size() const noexcept { return logits_.size(); }
  const Emission& operator[](std::size_t t) const noexcept { return logits_[t]; }
  Emission& operator[](std::size_t t) noexcept { return logits_[t]; }
  std::span<const Emission> logits() const noexcept { return logits_; }

  // Softmax per pair; log-probabilities are computed with log-softmax so
  // saturated logits keep full precision in log space.
  EmissionSequence softmax() const;

 private:
  std::vector<Emission> logits_;
};

class ExtendedTarget {
 public:
  explicit ExtendedTarget(std::size_t concepts);

  std::size_t concepts() const noexcept { return concepts_; }
  std::size_t size() const noexcept { return 2 * concepts_ + 1; }
  Symbol operator[](std::size_t l) const noexcept {
    return (l % 2 == 1) ? Symbol::Keep : Symbol::Blank;
  }
  std::vector<Symbol> symbols() const;

 private:
  std::size_t concepts_;
};

ExtendedTarget extend_target(std::size_t concepts);

// True iff M >= 2L - 1, i.e. at least one lattice path exists.
bool is_feasible(std::size_t tokens, std::size_t concepts) noexcept;

// Throws InfeasibleLength when !is_feasible.
void require_feasible(std::size_t tokens, std::size_t concepts);

// The three routes to p(Z|Y), expressed in the lattice's space (log values in
// Log mode, probabilities in Linear mode).
struct TotalRoutes {
  double alpha_terminal = 0.0;  // alpha(M,2L) + alpha(M,2L+1)
  double beta_initial = 0.0;    // sum_{l in {1,2}} p(z_l|y_1) * beta(1,l)
  std::vector<double> slices;   // sum_l alpha(t,l) * beta(t,l), one per t
};

struct AlignmentLattice {
  SpaceMode mode = SpaceMode::Log;
  std::size_t concepts = 0;
  Matrix alpha;  // M x (2L+1), log values in Log mode
  Matrix beta;   // M x (2L+1), log values in Log mode
  Matrix gamma;  // M x (2L+1) probabilities; empty when the total is zero
  TotalRoutes routes;
  double log_total = 0.0;  // log p(Z|Y), -inf when the total is zero

  std::size_t tokens() const noexcept { return alpha.rows(); }
  std::size_t states() const noexcept { return alpha.cols(); }
};

Matrix forward_pass(const EmissionSequence& emissions,
                    const ExtendedTarget& target,
                    SpaceMode mode = SpaceMode::Linear);

Matrix backward_pass(const EmissionSequence& emissions,
                     const ExtendedTarget& target,
                     SpaceMode mode = SpaceMode::Linear);

// Runs forward and backward passes and derives the totals and posterior.
AlignmentLattice compute_lattice(const EmissionSequence& emissions,
                                 std::size_t concepts,
                                 SpaceMode mode = SpaceMode::Log);

// p(Z|Y). Throws DegenerateProbability if it is (or underflows to) zero.
double sequence_probability(const AlignmentLattice& lattice);

double log_sequence_probability(const AlignmentLattice& lattice) noexcept;

// -log p(Z|Y). Log mode returns +inf for an exactly-zero total; Linear mode
// throws DegenerateProbability when the product underflows.
double vcm_loss(const EmissionSequence& emissions, std::size_t concepts,
                SpaceMode mode = SpaceMode::Log);

// gamma(t,l) = alpha(t,l) * beta(t,l) / p(Z|Y). Throws DegenerateProbability.
Matrix posterior(const AlignmentLattice& lattice);

struct LossAndGradient {
  double loss = 0.0;
  Matrix gradient;  // M x 2, columns (blank, keep)
};

// d loss / d u_c(t) = p(c|y_t) - sum_{l : z_l = c} gamma(t,l).
LossAndGradient vcm_loss_and_gradient(const LogitSequence& logits,
                                      std::size_t concepts,
                                      SpaceMode mode = SpaceMode::Log);

Matrix vcm_gradient(const LogitSequence& logits, std::size_t concepts,
                    SpaceMode mode = SpaceMode::Log);

inline constexpr std::size_t kOracleMaxTokens = 20;

// Exhaustive sum over all 2^M keep/blank strings with exactly L keep-runs.
// O(2^M * M); throws OracleTooLarge when M > kOracleMaxTokens.
double brute_force_probability(const EmissionSequence& emissions,
                               std::size_t concepts);

struct BestPath {
  std::vector<std::size_t> states;  // lattice state per token
  std::vector<Symbol> symbols;      // emitted symbol per token
  double log_prob = 0.0;
};

// Max-product decode with backtracking. Ties prefer the advance transition and,
// at the end, the final blank state.
BestPath best_path_decode(const EmissionSequence& emissions,
                          std::size_t concepts);

std::size_t count_keep_runs(std::span<const Symbol> symbols) noexcept;

}  // namespace vcm
