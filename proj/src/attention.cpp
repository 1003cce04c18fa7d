#include "vcm/attention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "vcm/alignment.hpp"
#include "vcm/error.hpp"

namespace vcm {

namespace {

void require_width(const Matrix& m, std::size_t width, const char* what) {
  if (m.cols() != width) {
    throw DimensionMismatch(std::string(what) + " has width " +
                            std::to_string(m.cols()) + ", expected " +
                            std::to_string(width));
  }
}

Matrix add_broadcast(const Matrix& m, std::span<const double> v) {
  Matrix out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += v[c];
  }
  return out;
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
  if (top.rows() == 0) return bottom;
  if (bottom.rows() == 0) return top;
  require_width(bottom, top.cols(), "stacked block");
  Matrix out(top.rows() + bottom.rows(), top.cols());
  for (std::size_t r = 0; r < top.rows(); ++r)
    std::copy(top.row(r).begin(), top.row(r).end(), out.row(r).begin());
  for (std::size_t r = 0; r < bottom.rows(); ++r)
    std::copy(bottom.row(r).begin(), bottom.row(r).end(),
              out.row(top.rows() + r).begin());
  return out;
}

}  // namespace

void TokenMatrix::validate(bool allow_empty) const {
  if (rows.rows() == 0 && !allow_empty)
    throw InvalidArgument("token matrix must have at least one row");
  for (double x : rows.data())
    if (!std::isfinite(x)) throw InvalidArgument("token matrix has a non-finite entry");
}

Matrix seeded_gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  const double scale = rows > 0 ? 1.0 / std::sqrt(static_cast<double>(rows)) : 0.0;
  for (double& x : m.data()) x = scale * rng.normal();
  return m;
}

AttentionParams AttentionParams::seeded(std::size_t width, std::size_t heads,
                                        Rng& rng) {
  if (heads == 0 || width % heads != 0) {
    throw DimensionMismatch("width " + std::to_string(width) +
                            " is not divisible by " + std::to_string(heads) +
                            " heads");
  }
  AttentionParams p;
  p.width = width;
  p.heads = heads;
  p.query = seeded_gaussian(width, width, rng);
  p.key = seeded_gaussian(width, width, rng);
  p.value = seeded_gaussian(width, width, rng);
  p.output = seeded_gaussian(width, width, rng);
  return p;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double top = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double& x : out) {
    x = std::exp(x - top);
    sum += x;
  }
  for (double& x : out) x /= sum;
  return out;
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log(x);
  return h;
}

AttentionResult mhca(const Matrix& query, const Matrix& context,
                     const AttentionParams& params) {
  require_width(query, params.width, "query");
  require_width(context, params.width, "context");
  if (context.rows() == 0) throw DimensionMismatch("attention context is empty");

  const Matrix q = matmul(query, params.query);
  const Matrix k = matmul(context, params.key);
  const Matrix v = matmul(context, params.value);
  const std::size_t head_width = params.width / params.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_width));

  AttentionResult result;
  Matrix concat(query.rows(), params.width);
  std::vector<double> logits(context.rows());
  for (std::size_t h = 0; h < params.heads; ++h) {
    const std::size_t off = h * head_width;
    Matrix weights(query.rows(), context.rows());
    for (std::size_t i = 0; i < query.rows(); ++i) {
      for (std::size_t j = 0; j < context.rows(); ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < head_width; ++c) dot += q(i, off + c) * k(j, off + c);
        logits[j] = dot * inv_sqrt;
      }
      const std::vector<double> row = softmax(logits);
      std::copy(row.begin(), row.end(), weights.row(i).begin());
      for (std::size_t j = 0; j < context.rows(); ++j)
        for (std::size_t c = 0; c < head_width; ++c)
          concat(i, off + c) += row[j] * v(j, off + c);
    }
    result.weights.push_back(std::move(weights));
  }
  result.output = matmul(concat, params.output);
  return result;
}

AttentionResult mhsa(const Matrix& tokens, const AttentionParams& params) {
  return mhca(tokens, tokens, params);
}

std::vector<double> keyword_scores(const Matrix& instr_resp,
                                   std::span<const double> g_vision,
                                   const AttentionParams& params) {
  if (g_vision.size() != params.width)
    throw DimensionMismatch("pooled vision feature has the wrong width");
  const AttentionResult attended = mhsa(instr_resp, params);
  return softmax(matvec(attended.output, g_vision));
}

std::vector<std::size_t> select_keywords(std::span<const double> scores) {
  std::vector<std::size_t> picked;
  if (scores.empty()) return picked;
  const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) /
                      static_cast<double>(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i] > mean) picked.push_back(i);
  return picked;
}

double semantic_alignment_loss(std::span<const double> g_llm,
                               std::span<const double> g_vision,
                               std::span<const double> g_text,
                               const Matrix& lm_head) {
  if (lm_head.cols() < 2) throw InvalidArgument("vocabulary size must be >= 2");
  if (g_llm.size() != lm_head.rows() || g_vision.size() != lm_head.rows() ||
      g_text.size() != lm_head.rows())
    throw DimensionMismatch("global features do not match the LM head width");

  const std::vector<double> p_llm = softmax(vecmat(g_llm, lm_head));
  // Log-softmax directly so tiny probabilities do not round to log(0).
  auto log_softmax = [&](std::span<const double> g) {
    std::vector<double> z = vecmat(g, lm_head);
    const double top = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double x : z) sum += std::exp(x - top);
    const double norm = top + std::log(sum);
    for (double& x : z) x -= norm;
    return z;
  };
  const std::vector<double> log_vision = log_softmax(g_vision);
  const std::vector<double> log_text = log_softmax(g_text);

  double loss = 0.0;
  for (std::size_t v = 0; v < p_llm.size(); ++v)
    loss -= p_llm[v] * (log_vision[v] + log_text[v]);
  return loss;
}

PipelineResult pipeline_forward(const TokenMatrix& vision,
                                const TokenMatrix& instruction,
                                const TokenMatrix& response,
                                const PipelineConfig& config) {
  vision.validate();
  instruction.validate();
  response.validate(/*allow_empty=*/true);
  const std::size_t width = vision.rows.cols();
  require_width(instruction.rows, width, "instruction tokens");
  if (response.rows.rows() > 0) require_width(response.rows, width, "response tokens");

  Rng rng(config.seed);
  const AttentionParams selector = AttentionParams::seeded(width, config.heads, rng);
  const AttentionParams projector = AttentionParams::seeded(width, config.heads, rng);
  const Matrix vision_to_text = seeded_gaussian(width, width, rng);
  const Matrix text_to_vision = seeded_gaussian(width, width, rng);
  const Matrix classifier = seeded_gaussian(width, 2, rng);
  const Matrix lm_head = seeded_gaussian(width, config.vocab, rng);

  PipelineResult result;
  PipelineDiagnostics& diag = result.diagnostics;
  const std::size_t tokens = vision.rows.rows();
  diag.tokens = tokens;

  // Global features.
  result.globals.g_vision = vecmat(mean_rows(vision.rows), vision_to_text);
  const Matrix text = vstack(instruction.rows, response.rows);
  result.globals.g_text = mean_rows(text);
  result.globals.g_llm_text = mean_rows(mhsa(text, selector).output);

  // Keywords and target length.
  const std::vector<double> scores = keyword_scores(text, result.globals.g_vision, selector);
  diag.keywords = select_keywords(scores);
  const std::size_t n_instr_rows = instruction.rows.rows();
  for (std::size_t idx : diag.keywords)
    (idx < n_instr_rows ? diag.n_instruction : diag.n_response) += 1;
  diag.n_key = effective_keyword_diff(
      {diag.n_instruction, diag.n_response, config.mask_ratio}, config.length);
  diag.concept_length =
      estimate_length(tokens, static_cast<double>(diag.n_key), config.length);

  // Text prior: pooled instruction minus pooled response, after the selector.
  std::vector<double> prior = mean_rows(mhsa(instruction.rows, selector).output);
  if (response.rows.rows() > 0) {
    const std::vector<double> pooled = mean_rows(mhsa(response.rows, selector).output);
    for (std::size_t c = 0; c < width; ++c) prior[c] -= pooled[c];
  }
  const std::vector<double> prior_v = vecmat(prior, text_to_vision);

  // Aligned vision tokens and their keep/blank emissions.
  const Matrix queries = add_broadcast(vision.rows, prior_v);
  const Matrix aligned =
      matmul(mhca(queries, vision.rows, projector).output, vision_to_text);
  const Matrix logit_rows = matmul(aligned, classifier);
  std::vector<Emission> logits(tokens);
  for (std::size_t t = 0; t < tokens; ++t) logits[t] = {logit_rows(t, 0), logit_rows(t, 1)};
  const EmissionSequence emissions = LogitSequence(std::move(logits)).softmax();

  diag.vcm_loss = vcm_loss(emissions, diag.concept_length, SpaceMode::Log);
  const SelectionMask sel = greedy_select(emissions);
  diag.selected_runs = count_mask_runs(sel.mask);
  diag.best_path_runs =
      count_keep_runs(best_path_decode(emissions, diag.concept_length).symbols);
  diag.runs_match_length = diag.selected_runs == diag.concept_length;
  diag.sa_loss = semantic_alignment_loss(result.globals.g_llm_text,
                                         result.globals.g_vision,
                                         result.globals.g_text, lm_head);
  diag.epsilon = epsilon(config.mask_ratio, config.coefficient);
  diag.weighted_vcm_loss = diag.epsilon * diag.vcm_loss;

  result.concepts = merge_segments(aligned, sel);
  return result;
}

}  // namespace vcm
