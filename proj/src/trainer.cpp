#include "vcm/trainer.hpp"

#include <cmath>
#include <string>

#include "vcm/error.hpp"
#include "vcm/random.hpp"

namespace vcm {

void TrainConfig::validate() const {
  if (tokens == 0) throw InvalidArgument("training needs M >= 1");
  require_feasible(tokens, concepts);
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (max_steps == 0) throw InvalidArgument("max_steps must be positive");
}

void apply_gradient_step(std::vector<Emission>& logits, const Matrix& gradient,
                         double step) {
  if (gradient.rows() != logits.size() || gradient.cols() != 2)
    throw DimensionMismatch("gradient shape does not match the logits");
  for (std::size_t t = 0; t < logits.size(); ++t) {
    logits[t].blank -= step * gradient(t, 0);
    logits[t].keep -= step * gradient(t, 1);
  }
}

TrainTrace train_logits(const TrainConfig& config) {
  config.validate();
  Rng rng(config.seed);
  std::vector<Emission> logits(config.tokens);
  for (Emission& u : logits) {
    u.blank = config.init_scale * rng.normal();
    u.keep = config.init_scale * rng.normal();
  }
  Matrix features(config.tokens, config.feature_width);
  for (double& x : features.data()) x = rng.normal();

  TrainTrace trace;
  const double step = config.learning_rate * config.gradient_weight;
  for (std::size_t i = 0; i < config.max_steps; ++i) {
    const LogitSequence current(logits);
    const LossAndGradient lg = vcm_loss_and_gradient(current, config.concepts);
    trace.losses.push_back(lg.loss);

    if (i > 0 && std::abs(trace.losses[i - 1] - lg.loss) < config.plateau_tolerance &&
        count_keep_runs(best_path_decode(current.softmax(), config.concepts).symbols) ==
            config.concepts) {
      trace.plateaued = true;
      break;
    }
    if (i + 1 == config.max_steps) break;
    apply_gradient_step(logits, lg.gradient, step);
  }

  const EmissionSequence final_em = LogitSequence(logits).softmax();
  const SelectionMask sel = greedy_select(final_em);
  trace.final_logits = std::move(logits);
  trace.final_mask = sel.mask;
  trace.final_runs = count_mask_runs(sel.mask);
  trace.best_path_runs = count_keep_runs(best_path_decode(final_em, config.concepts).symbols);
  trace.converged = trace.best_path_runs == config.concepts &&
                    trace.final_loss() < trace.initial_loss();
  trace.final_concepts = merge_segments(features, sel);
  return trace;
}

CurriculumResult masked_curriculum(const TrainConfig& base,
                                   const std::vector<KeywordStats>& schedule,
                                   const LengthConfig& length,
                                   const CoefficientParams& coefficient) {
  CurriculumResult result;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    CurriculumEntry entry;
    entry.stats = schedule[i];
    entry.n_key = effective_keyword_diff(entry.stats, length);
    entry.concepts =
        estimate_length(base.tokens, static_cast<double>(entry.n_key), length);
    entry.epsilon = epsilon(entry.stats.mask_ratio, coefficient);

    TrainConfig cfg = base;
    cfg.concepts = entry.concepts;
    cfg.gradient_weight = base.gradient_weight * entry.epsilon;
    cfg.seed = base.seed + i;
    entry.trace = train_logits(cfg);
    result.entries.push_back(std::move(entry));
  }

  for (const auto& a : result.entries) {
    for (const auto& b : result.entries) {
      const bool same_counts = a.stats.n_instruction == b.stats.n_instruction &&
                               a.stats.n_response == b.stats.n_response;
      if (same_counts && a.stats.mask_ratio <= b.stats.mask_ratio &&
          a.concepts > b.concepts)
        result.length_monotone = false;
    }
  }
  return result;
}

}  // namespace vcm
