// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff all
// criteria pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "vcm/alignment.hpp"
#include "vcm/concept.hpp"
#include "vcm/flops.hpp"
#include "vcm/length_policy.hpp"
#include "vcm/random.hpp"
#include "vcm/table5.hpp"
#include "vcm/trainer.hpp"

using namespace vcm;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename F>
double time_best_of(int repeats, F&& f) {
  double best = 1e300;
  for (int i = 0; i < repeats; ++i) {
    const auto start = Clock::now();
    f();
    best = std::min(best, seconds_since(start));
  }
  return best;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, value);
  return buf;
}

Outcome table5_reproduction() {
  const auto start = Clock::now();
  const table5::Comparison cmp = table5::compare();
  const double elapsed = seconds_since(start);
  const bool total_ok = std::abs(cmp.total - 0.715) <= 0.001;
  return {cmp.mismatches == 0 && total_ok && elapsed < 1e-3,
          std::to_string(40 - cmp.mismatches) + "/40 cells, p=" + fmt("%.6f", cmp.total) +
              ", " + fmt("%.3f", elapsed * 1e3) + " ms"};
}

Outcome oracle_equivalence() {
  Rng rng(2);
  double worst = 0.0;
  std::size_t cases = 0;
  const auto start = Clock::now();
  for (std::size_t m = 1; m <= 12; ++m) {
    for (std::size_t l = 0; is_feasible(m, l); ++l) {
      for (int i = 0; i < 100; ++i) {
        const EmissionSequence em = testing::random_emissions(rng, m);
        const double dp = std::exp(log_sequence_probability(compute_lattice(em, l)));
        const double bf = brute_force_probability(em, l);
        worst = std::max(worst, std::abs(dp - bf) / bf);
        ++cases;
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-9 && elapsed < 30.0,
          std::to_string(cases) + " cases, max rel err " + fmt("%.2e", worst) + ", " +
              fmt("%.2f", elapsed) + " s"};
}

Outcome gradient_verification() {
  Rng rng(3);
  double worst = 0.0;
  const auto start = Clock::now();
  for (int i = 0; i < 50; ++i) {
    const std::size_t m = 1 + rng.below(10);
    const std::size_t l = rng.below((m + 1) / 2 + 1);
    const LogitSequence logits = testing::random_logits(rng, m, 1.0);
    const Matrix analytic = vcm_gradient(logits, l);
    const Matrix numeric = testing::finite_difference_gradient(logits, l, 1e-5);
    for (std::size_t k = 0; k < analytic.data().size(); ++k)
      worst = std::max(worst, testing::relative_error(analytic.data()[k], numeric.data()[k]));
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-4 && elapsed < 10.0,
          "50 instances, max rel err " + fmt("%.2e", worst) + ", " + fmt("%.3f", elapsed) + " s"};
}

Outcome total_identities() {
  Rng rng(4);
  double worst_route = 0.0;
  double worst_row = 0.0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t m = 1 + rng.below(64);
    const std::size_t l = rng.below((m + 1) / 2 + 1);
    const EmissionSequence em = testing::random_emissions(rng, m);
    for (SpaceMode mode : {SpaceMode::Linear, SpaceMode::Log}) {
      const AlignmentLattice lat = compute_lattice(em, l, mode);
      const TotalRoutes& r = lat.routes;
      // Log-space routes differ by log-ratios; exp(d) - 1 is the relative gap.
      auto gap = [&](double a, double b) {
        return mode == SpaceMode::Log ? std::abs(std::expm1(a - b))
                                      : std::abs(a - b) / std::abs(b);
      };
      worst_route = std::max(worst_route, gap(r.beta_initial, r.alpha_terminal));
      for (double s : r.slices) worst_route = std::max(worst_route, gap(s, r.alpha_terminal));
      for (std::size_t t = 0; t < lat.gamma.rows(); ++t) {
        double sum = 0.0;
        for (double g : lat.gamma.row(t)) sum += g;
        worst_row = std::max(worst_row, std::abs(sum - 1.0));
      }
    }
  }
  return {worst_route <= 1e-9 && worst_row <= 1e-9,
          "200 instances x 2 modes, route gap " + fmt("%.2e", worst_route) + ", row-sum gap " +
              fmt("%.2e", worst_row)};
}

MergeInput random_merge_input(Rng& rng, std::size_t tokens, std::size_t width) {
  Matrix f(tokens, width);
  for (double& x : f.data()) x = rng.normal();
  std::vector<double> keep(tokens);
  for (double& k : keep) k = rng.uniform();
  return {std::move(f), greedy_select(EmissionSequence::from_keep_probs(keep))};
}

Outcome segment_merge() {
  const ConceptSegments hand = merge_segments(Matrix::from_rows({{2}, {4}, {6}, {8}}),
                                              {{1, 1, 0, 1}, {0.25, 0.75, 0.5, 1.0}});
  const bool hand_ok = hand.concepts == Matrix::from_rows({{3.5}, {8.0}}) &&
                       hand.spans == std::vector<Span>{{1, 2}, {4, 4}};

  Rng rng(5);
  double worst = 0.0;
  bool spans_ok = true;
  for (int i = 0; i < 1000; ++i) {
    const auto [f, sel] = random_merge_input(rng, 1 + rng.below(128), 1 + rng.below(16));
    const ConceptSegments a = merge_segments(f, sel);
    const ConceptSegments b = merge_segments_naive(f, sel);
    spans_ok = spans_ok && a.spans == b.spans;
    for (std::size_t k = 0; k < a.size() && k < b.size(); ++k)
      for (std::size_t c = 0; c < a.concepts.cols(); ++c)
        worst = std::max(worst, std::abs(a.concepts(k, c) - b.concepts(k, c)));
  }

  std::vector<MergeInput> batch;
  for (int b = 0; b < 32; ++b) batch.push_back(random_merge_input(rng, 4096, 64));
  std::size_t sink = 0;
  const double fast = time_best_of(3, [&] { sink += merge_batch(batch).size(); });
  const double naive = time_best_of(3, [&] { sink += merge_batch_naive(batch).size(); });
  const double speedup = naive / fast;
  return {hand_ok && spans_ok && worst <= 1e-12 && speedup >= 10.0 && sink > 0,
          std::string("hand ") + (hand_ok ? "exact" : "WRONG") + ", 1000 random max diff " +
              fmt("%.2e", worst) + ", speedup " + fmt("%.1f", speedup) + "x (" +
              fmt("%.1f", fast * 1e3) + " ms vs " + fmt("%.1f", naive * 1e3) + " ms)"};
}

Outcome length_and_coefficient() {
  const std::size_t l = estimate_length(576, -35);
  const double e0 = epsilon(0.0), e5 = epsilon(0.5), e1 = epsilon(1.0);
  const bool pass = l == 144 && std::abs(e0 - 0.2000454) <= 1e-6 && e5 == 0.7 &&
                    std::abs(e1 - 1.1999546) <= 1e-6;
  return {pass, "L=" + std::to_string(l) + ", eps(0)=" + fmt("%.7f", e0) + ", eps(0.5)=" +
                    fmt("%.7f", e5) + ", eps(1)=" + fmt("%.7f", e1)};
}

Outcome flops_ratio() {
  FlopsProfile p = FlopsProfile::with_default_mean(32, 4096);
  p.scale = 0.125;
  const double r = reduction_ratio(p);
  const double closed = (3.0 / 8 + 1.0 / 512) / (25.0 / 8);
  return {std::abs(r - closed) <= 1e-9 && 1.0 - r >= 0.85,
          "R=" + fmt("%.9f", r) + ", closed form " + fmt("%.9f", closed) + ", reduction " +
              fmt("%.2f", 100 * (1 - r)) + "%"};
}

Outcome training_demo() {
  int converged = 0;
  int greedy_match = 0;
  const auto start = Clock::now();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TrainConfig cfg;
    cfg.seed = seed;
    const TrainTrace trace = train_logits(cfg);
    converged += trace.converged && trace.best_path_runs == 8 &&
                 trace.final_loss() < trace.initial_loss();
    greedy_match += trace.final_runs == 8;
  }
  const double elapsed = seconds_since(start);
  return {converged >= 9 && elapsed < 30.0,
          std::to_string(converged) + "/10 converged (decoded runs 8, loss decreased); " +
              "greedy mask at 8 runs in " + std::to_string(greedy_match) + "/10; " +
              fmt("%.2f", elapsed) + " s"};
}

Outcome performance() {
  Rng rng(9);
  auto lattice_seconds = [&](std::size_t m) {
    std::vector<double> keep(m);
    for (double& k : keep) k = rng.uniform(0.01, 0.99);
    const EmissionSequence em = EmissionSequence::from_keep_probs(keep);
    return time_best_of(3, [&] { compute_lattice(em, m / 8, SpaceMode::Log); });
  };
  const double big = lattice_seconds(4096);
  std::vector<double> per_cell;
  for (std::size_t m : {512, 1024, 2048, 4096}) {
    const double cells = static_cast<double>(m) * static_cast<double>(2 * (m / 8) + 1);
    per_cell.push_back(lattice_seconds(m) / cells);
  }
  const auto [lo, hi] = std::minmax_element(per_cell.begin(), per_cell.end());
  const double spread = *hi / *lo;
  return {big < 1.0 && spread <= 2.5,
          "M=4096 L=512 in " + fmt("%.1f", big * 1e3) + " ms, per-cell spread " +
              fmt("%.2f", spread) + "x over M=512..4096"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"Table 5 forward reproduction", table5_reproduction},
      {"oracle equivalence", oracle_equivalence},
      {"gradient verification", gradient_verification},
      {"total-probability identities", total_identities},
      {"segment merge", segment_merge},
      {"length and coefficient formulas", length_and_coefficient},
      {"FLOPs ratio", flops_ratio},
      {"training demo", training_demo},
      {"performance", performance},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const Outcome o = criteria[i].second();
    failed += !o.pass;
    std::printf("AC%zu %s: %s (%s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
