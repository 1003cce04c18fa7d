#include "vcm/alignment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "vcm/error.hpp"
#include "vcm/logmath.hpp"

namespace vcm {

namespace {

constexpr double kSumTolerance = 1e-9;

// Probability semiring in linear space.
struct LinearSpace {
  static constexpr double zero() { return 0.0; }
  static constexpr double one() { return 1.0; }
  static double add(double a, double b) { return a + b; }
  static double mul(double a, double b) { return a * b; }
  static double emit(const EmissionSequence& e, std::size_t t, Symbol s) {
    return e.prob(t, s);
  }
};

// Same semiring over log-probabilities.
struct LogSpace {
  static constexpr double zero() { return kLogZero; }
  static constexpr double one() { return 0.0; }
  static double add(double a, double b) { return log_add(a, b); }
  static double mul(double a, double b) { return a + b; }
  static double emit(const EmissionSequence& e, std::size_t t, Symbol s) {
    return e.log_prob(t, s);
  }
};

template <typename Space>
Matrix forward_impl(const EmissionSequence& em, const ExtendedTarget& target) {
  const std::size_t tokens = em.size();
  const std::size_t states = target.size();
  Matrix alpha(tokens, states, Space::zero());

  alpha(0, 0) = Space::emit(em, 0, target[0]);
  if (states > 1) alpha(0, 1) = Space::emit(em, 0, target[1]);

  for (std::size_t t = 1; t < tokens; ++t) {
    auto prev = alpha.row(t - 1);
    auto cur = alpha.row(t);
    cur[0] = Space::mul(Space::emit(em, t, target[0]), prev[0]);
    for (std::size_t l = 1; l < states; ++l) {
      cur[l] = Space::mul(Space::emit(em, t, target[l]),
                          Space::add(prev[l], prev[l - 1]));
    }
  }
  return alpha;
}

template <typename Space>
Matrix backward_impl(const EmissionSequence& em, const ExtendedTarget& target) {
  const std::size_t tokens = em.size();
  const std::size_t states = target.size();
  Matrix beta(tokens, states, Space::zero());

  beta(tokens - 1, states - 1) = Space::one();
  if (states > 1) beta(tokens - 1, states - 2) = Space::one();

  for (std::size_t t = tokens - 1; t-- > 0;) {
    auto next = beta.row(t + 1);
    auto cur = beta.row(t);
    for (std::size_t l = 0; l < states; ++l) {
      double acc = Space::mul(Space::emit(em, t + 1, target[l]), next[l]);
      if (l + 1 < states) {
        acc = Space::add(
            acc, Space::mul(Space::emit(em, t + 1, target[l + 1]), next[l + 1]));
      }
      cur[l] = acc;
    }
  }
  return beta;
}

template <typename Space>
TotalRoutes routes_impl(const EmissionSequence& em, const ExtendedTarget& target,
                        const Matrix& alpha, const Matrix& beta) {
  const std::size_t tokens = em.size();
  const std::size_t states = target.size();
  TotalRoutes routes;

  routes.alpha_terminal = alpha(tokens - 1, states - 1);
  if (states > 1)
    routes.alpha_terminal =
        Space::add(routes.alpha_terminal, alpha(tokens - 1, states - 2));

  routes.beta_initial = Space::mul(Space::emit(em, 0, target[0]), beta(0, 0));
  if (states > 1) {
    routes.beta_initial = Space::add(
        routes.beta_initial, Space::mul(Space::emit(em, 0, target[1]), beta(0, 1)));
  }

  routes.slices.resize(tokens);
  for (std::size_t t = 0; t < tokens; ++t) {
    double acc = Space::zero();
    for (std::size_t l = 0; l < states; ++l)
      acc = Space::add(acc, Space::mul(alpha(t, l), beta(t, l)));
    routes.slices[t] = acc;
  }
  return routes;
}

}  // namespace

EmissionSequence::EmissionSequence(std::vector<Emission> probs)
    : probs_(std::move(probs)) {
  if (probs_.empty()) throw InvalidArgument("emission sequence must have M >= 1");
  log_probs_.reserve(probs_.size());
  for (std::size_t t = 0; t < probs_.size(); ++t) {
    const Emission& e = probs_[t];
    const bool in_range = e.blank >= 0.0 && e.blank <= 1.0 && e.keep >= 0.0 &&
                          e.keep <= 1.0;
    if (!in_range || std::abs(e.blank + e.keep - 1.0) > kSumTolerance) {
      throw InvalidArgument("emission " + std::to_string(t) +
                            " is not a probability pair: (" +
                            std::to_string(e.blank) + ", " +
                            std::to_string(e.keep) + ")");
    }
    log_probs_.push_back({safe_log(e.blank), safe_log(e.keep)});
  }
}

EmissionSequence EmissionSequence::from_keep_probs(std::span<const double> keep) {
  std::vector<Emission> probs;
  probs.reserve(keep.size());
  for (double k : keep) probs.push_back({1.0 - k, k});
  return EmissionSequence(std::move(probs));
}

LogitSequence::LogitSequence(std::vector<Emission> logits)
    : logits_(std::move(logits)) {
  if (logits_.empty()) throw InvalidArgument("logit sequence must have M >= 1");
  for (std::size_t t = 0; t < logits_.size(); ++t) {
    if (!std::isfinite(logits_[t].blank) || !std::isfinite(logits_[t].keep))
      throw InvalidArgument("logit " + std::to_string(t) + " is not finite");
  }
}

EmissionSequence LogitSequence::softmax() const {
  std::vector<Emission> probs;
  std::vector<Emission> log_probs;
  probs.reserve(logits_.size());
  log_probs.reserve(logits_.size());
  for (const Emission& u : logits_) {
    const double top = std::max(u.blank, u.keep);
    const double log_norm =
        top + std::log(std::exp(u.blank - top) + std::exp(u.keep - top));
    const Emission lp{u.blank - log_norm, u.keep - log_norm};
    log_probs.push_back(lp);
    probs.push_back({std::exp(lp.blank), std::exp(lp.keep)});
  }
  return EmissionSequence(std::move(probs), std::move(log_probs));
}

ExtendedTarget::ExtendedTarget(std::size_t concepts) : concepts_(concepts) {}

std::vector<Symbol> ExtendedTarget::symbols() const {
  std::vector<Symbol> out(size());
  for (std::size_t l = 0; l < out.size(); ++l) out[l] = (*this)[l];
  return out;
}

ExtendedTarget extend_target(std::size_t concepts) {
  return ExtendedTarget(concepts);
}

bool is_feasible(std::size_t tokens, std::size_t concepts) noexcept {
  return concepts == 0 || tokens + 1 >= 2 * concepts;
}

void require_feasible(std::size_t tokens, std::size_t concepts) {
  if (!is_feasible(tokens, concepts)) {
    throw InfeasibleLength("M = " + std::to_string(tokens) +
                           " tokens cannot hold L = " + std::to_string(concepts) +
                           " concepts (need M >= 2L - 1)");
  }
}

Matrix forward_pass(const EmissionSequence& emissions,
                    const ExtendedTarget& target, SpaceMode mode) {
  require_feasible(emissions.size(), target.concepts());
  return mode == SpaceMode::Log ? forward_impl<LogSpace>(emissions, target)
                                : forward_impl<LinearSpace>(emissions, target);
}

Matrix backward_pass(const EmissionSequence& emissions,
                     const ExtendedTarget& target, SpaceMode mode) {
  require_feasible(emissions.size(), target.concepts());
  return mode == SpaceMode::Log ? backward_impl<LogSpace>(emissions, target)
                                : backward_impl<LinearSpace>(emissions, target);
}

AlignmentLattice compute_lattice(const EmissionSequence& emissions,
                                 std::size_t concepts, SpaceMode mode) {
  const ExtendedTarget target(concepts);
  AlignmentLattice lat;
  lat.mode = mode;
  lat.concepts = concepts;
  lat.alpha = forward_pass(emissions, target, mode);
  lat.beta = backward_pass(emissions, target, mode);

  const std::size_t tokens = emissions.size();
  const std::size_t states = target.size();

  if (mode == SpaceMode::Log) {
    lat.routes = routes_impl<LogSpace>(emissions, target, lat.alpha, lat.beta);
    lat.log_total = lat.routes.alpha_terminal;
    if (lat.log_total == kLogZero) return lat;
    lat.gamma = Matrix(tokens, states);
    for (std::size_t t = 0; t < tokens; ++t)
      for (std::size_t l = 0; l < states; ++l)
        lat.gamma(t, l) = std::exp(lat.alpha(t, l) + lat.beta(t, l) - lat.log_total);
  } else {
    lat.routes = routes_impl<LinearSpace>(emissions, target, lat.alpha, lat.beta);
    const double total = lat.routes.alpha_terminal;
    lat.log_total = safe_log(total);
    if (total <= 0.0) return lat;
    lat.gamma = Matrix(tokens, states);
    for (std::size_t t = 0; t < tokens; ++t)
      for (std::size_t l = 0; l < states; ++l)
        lat.gamma(t, l) = lat.alpha(t, l) * lat.beta(t, l) / total;
  }
  return lat;
}

double sequence_probability(const AlignmentLattice& lattice) {
  const double p = lattice.mode == SpaceMode::Log
                       ? std::exp(lattice.log_total)
                       : lattice.routes.alpha_terminal;
  if (!(p > 0.0)) {
    throw DegenerateProbability(
        lattice.mode == SpaceMode::Linear
            ? "path probability underflowed to zero in linear space; use log mode"
            : "path probability is zero or below the double range");
  }
  return p;
}

double log_sequence_probability(const AlignmentLattice& lattice) noexcept {
  return lattice.log_total;
}

double vcm_loss(const EmissionSequence& emissions, std::size_t concepts,
                SpaceMode mode) {
  const AlignmentLattice lat = compute_lattice(emissions, concepts, mode);
  if (mode == SpaceMode::Linear) return -std::log(sequence_probability(lat));
  return -lat.log_total;
}

Matrix posterior(const AlignmentLattice& lattice) {
  if (lattice.gamma.empty()) {
    throw DegenerateProbability("posterior undefined: total path probability is zero");
  }
  return lattice.gamma;
}

LossAndGradient vcm_loss_and_gradient(const LogitSequence& logits,
                                      std::size_t concepts, SpaceMode mode) {
  const EmissionSequence em = logits.softmax();
  const AlignmentLattice lat = compute_lattice(em, concepts, mode);
  const Matrix gamma = posterior(lat);

  LossAndGradient out;
  out.loss = -lat.log_total;
  out.gradient = Matrix(em.size(), 2);
  for (std::size_t t = 0; t < em.size(); ++t) {
    double blank_mass = 0.0;
    double keep_mass = 0.0;
    for (std::size_t l = 0; l < lat.states(); ++l)
      (l % 2 == 1 ? keep_mass : blank_mass) += gamma(t, l);
    out.gradient(t, 0) = em[t].blank - blank_mass;
    out.gradient(t, 1) = em[t].keep - keep_mass;
  }
  return out;
}

Matrix vcm_gradient(const LogitSequence& logits, std::size_t concepts,
                    SpaceMode mode) {
  return vcm_loss_and_gradient(logits, concepts, mode).gradient;
}

double brute_force_probability(const EmissionSequence& emissions,
                               std::size_t concepts) {
  const std::size_t tokens = emissions.size();
  if (tokens > kOracleMaxTokens) {
    throw OracleTooLarge("brute-force enumeration limited to M <= " +
                         std::to_string(kOracleMaxTokens) + ", got M = " +
                         std::to_string(tokens));
  }
  double total = 0.0;
  const std::uint32_t count = std::uint32_t{1} << tokens;
  for (std::uint32_t bits = 0; bits < count; ++bits) {
    // Bit t set means token t is kept. Runs start where a set bit follows a
    // clear bit (or the sequence start).
    const std::uint32_t starts = bits & ~(bits << 1);
    if (static_cast<std::size_t>(std::popcount(starts)) != concepts) continue;
    double weight = 1.0;
    for (std::size_t t = 0; t < tokens; ++t)
      weight *= ((bits >> t) & 1U) ? emissions[t].keep : emissions[t].blank;
    total += weight;
  }
  return total;
}

BestPath best_path_decode(const EmissionSequence& emissions,
                          std::size_t concepts) {
  const std::size_t tokens = emissions.size();
  require_feasible(tokens, concepts);
  const ExtendedTarget target(concepts);
  const std::size_t states = target.size();
  const std::size_t last = states - 1;

  // A state is usable at time t iff it is reachable from the start
  // (l <= t + 1) and can still reach a final state (l + remaining >= last - 1).
  auto usable = [&](std::size_t t, std::size_t l) {
    const std::size_t remaining = tokens - 1 - t;
    const std::size_t final_low = last == 0 ? 0 : last - 1;
    return l <= t + 1 && l + remaining >= final_low;
  };

  Matrix score(tokens, states, kLogZero);
  std::vector<std::uint8_t> advanced(tokens * states, 0);

  for (std::size_t l = 0; l < std::min<std::size_t>(2, states); ++l)
    if (usable(0, l)) score(0, l) = emissions.log_prob(0, target[l]);

  for (std::size_t t = 1; t < tokens; ++t) {
    for (std::size_t l = 0; l < states; ++l) {
      if (!usable(t, l)) continue;
      const bool can_stay = usable(t - 1, l);
      const bool can_advance = l > 0 && usable(t - 1, l - 1);
      double best = kLogZero;
      bool adv = false;
      if (can_advance) {
        best = score(t - 1, l - 1);
        adv = true;
      }
      if (can_stay && (!can_advance || score(t - 1, l) > best)) {
        best = score(t - 1, l);
        adv = false;
      }
      score(t, l) = best + emissions.log_prob(t, target[l]);
      advanced[t * states + l] = adv ? 1 : 0;
    }
  }

  std::size_t state = last;
  if (states > 1 && usable(tokens - 1, last - 1) &&
      (!usable(tokens - 1, last) ||
       score(tokens - 1, last - 1) > score(tokens - 1, last))) {
    state = last - 1;
  }

  BestPath path;
  path.log_prob = score(tokens - 1, state);
  path.states.resize(tokens);
  path.symbols.resize(tokens);
  for (std::size_t t = tokens; t-- > 0;) {
    path.states[t] = state;
    path.symbols[t] = target[state];
    if (t > 0 && advanced[t * states + state]) --state;
  }
  return path;
}

std::size_t count_keep_runs(std::span<const Symbol> symbols) noexcept {
  std::size_t runs = 0;
  Symbol prev = Symbol::Blank;
  for (Symbol s : symbols) {
    if (s == Symbol::Keep && prev == Symbol::Blank) ++runs;
    prev = s;
  }
  return runs;
}

}  // namespace vcm
