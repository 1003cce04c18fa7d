#pragma once

// Toy-scale, forward-only attention plumbing: multi-head self/cross attention,
// keyword scoring against a pooled vision feature, keyword selection and the
// semantic-alignment loss value. Weights are seeded Gaussians with scale
// 1/sqrt(d); nothing here is trained.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vcm/concept.hpp"
#include "vcm/length_policy.hpp"
#include "vcm/matrix.hpp"
#include "vcm/random.hpp"

namespace vcm {

enum class TokenRole { Instruction, Response, Vision, Concat };

struct TokenMatrix {
  Matrix rows;  // N x d
  TokenRole role = TokenRole::Concat;

  // Finite entries; N >= 1 unless `allow_empty`.
  void validate(bool allow_empty = false) const;
};

struct AttentionParams {
  std::size_t width = 0;
  std::size_t heads = 16;
  Matrix query;   // d x d
  Matrix key;     // d x d
  Matrix value;   // d x d
  Matrix output;  // d x d

  static AttentionParams seeded(std::size_t width, std::size_t heads, Rng& rng);
};

struct AttentionResult {
  Matrix output;                // Nq x d
  std::vector<Matrix> weights;  // one Nq x Nc row-stochastic matrix per head
};

// Seeded N(0, 1/rows) matrix.
Matrix seeded_gaussian(std::size_t rows, std::size_t cols, Rng& rng);

std::vector<double> softmax(std::span<const double> logits);

double entropy(std::span<const double> p);

AttentionResult mhca(const Matrix& query, const Matrix& context,
                     const AttentionParams& params);

AttentionResult mhsa(const Matrix& tokens, const AttentionParams& params);

// K = softmax(MHSA([H_I; H_R]) g_vision) over the N text rows.
std::vector<double> keyword_scores(const Matrix& instr_resp,
                                   std::span<const double> g_vision,
                                   const AttentionParams& params);

// 0-based indices with k_i > mean(K).
std::vector<std::size_t> select_keywords(std::span<const double> scores);

// With p(g) = softmax(g * lmh) over the vocabulary:
//   -sum p_llm log p_vision - sum p_llm log p_text
double semantic_alignment_loss(std::span<const double> g_llm,
                               std::span<const double> g_vision,
                               std::span<const double> g_text,
                               const Matrix& lm_head);

struct GlobalFeatures {
  std::vector<double> g_text;
  std::vector<double> g_vision;
  std::vector<double> g_llm_text;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::size_t heads = 16;
  std::size_t vocab = 64;
  double mask_ratio = 0.0;
  LengthConfig length;
  CoefficientParams coefficient;
};

struct PipelineDiagnostics {
  std::size_t tokens = 0;
  std::vector<std::size_t> keywords;
  long n_instruction = 0;
  long n_response = 0;
  long n_key = 0;
  std::size_t concept_length = 0;     // L
  std::size_t selected_runs = 0;      // runs in the greedy mask
  std::size_t best_path_runs = 0;     // runs on the max-product path
  bool runs_match_length = false;
  double vcm_loss = 0.0;
  double sa_loss = 0.0;
  double epsilon = 0.0;
  double weighted_vcm_loss = 0.0;     // epsilon(r) * vcm_loss
};

struct PipelineResult {
  ConceptSegments concepts;
  GlobalFeatures globals;
  PipelineDiagnostics diagnostics;
};

PipelineResult pipeline_forward(const TokenMatrix& vision,
                                const TokenMatrix& instruction,
                                const TokenMatrix& response,
                                const PipelineConfig& config);

}  // namespace vcm
