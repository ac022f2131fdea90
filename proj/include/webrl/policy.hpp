#pragma once

// Log-linear autoregressive policy over a closed vocabulary.
//
//   logit(v) = sum_k W[row_k][v] + sum_{r in rel(v)} (U[state][r] + H[rel_row][r])
//
// rows/rel_row/rel come from FeatureCursor. All parameters start at zero, so
// a fresh policy is uniform over the vocabulary.

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "webrl/dataprep.hpp"
#include "webrl/features.hpp"
#include "webrl/vocab.hpp"

namespace webrl {

inline constexpr std::size_t kMaxResponseTokens = 256;
inline constexpr std::size_t kMaxParameters = 1000000;

struct PolicyParams {
  std::shared_ptr<const Vocab> vocab;
  std::size_t rows = 0;
  std::size_t rel_rows = 0;
  std::vector<double> theta;
  // Number of optimizer updates applied since initialization.
  std::uint64_t version = 0;

  std::size_t vocab_size() const { return vocab->size(); }
  std::size_t w_index(std::size_t row, TokenId v) const { return row * vocab->size() + v; }
  std::size_t u_index(int state, int r) const { return rows * vocab->size() + state * kNumRelations + r; }
  std::size_t h_index(std::size_t rel_row, int r) const {
    return rows * vocab->size() + kNumStates * kNumRelations + rel_row * kNumRelations + r;
  }
};

// rows = 0 picks the largest hashed table that keeps the total under kMaxParameters.
PolicyParams init_policy(std::shared_ptr<const Vocab> vocab, std::size_t rows = 0, std::size_t rel_rows = 512);

// Words of the suite pools and of the corpus reasoning/action texts.
Vocab corpus_vocab(const TaskSuite& suite, const std::vector<SftExample>& corpus);

struct Candidate {
  std::string text;
  std::vector<TokenId> tokens;
  std::vector<double> token_logprobs;  // temperature 1
  std::size_t length() const { return tokens.size(); }
  double logprob() const;
};

// Per-position features of a fixed token sequence; depends only on the prompt
// and the prefix, so it is reused across parameter values.
struct Trace {
  std::vector<TokenId> tokens;
  std::vector<StepFeatures> steps;
};

Trace trace_tokens(const PolicyParams& p, const PromptContext& ctx, const std::vector<TokenId>& tokens);

// Logits of one position.
void logits(const PolicyParams& p, const StepFeatures& f, std::vector<double>& z);
// In-place log-softmax of z / temperature.
void log_softmax(std::vector<double>& z, double temperature = 1.0);

// Accumulates coeff * d(logit_v)/d(theta) * dz[v] over v into grad.
void accumulate_logit_grad(const PolicyParams& p, const StepFeatures& f, const std::vector<double>& dz, double coeff,
                           std::vector<double>& grad);

// Throws kOovToken when the response does not tokenize.
double logprob(const PolicyParams& p, std::string_view prompt, std::string_view response);
double sequence_logprob(const PolicyParams& p, const Trace& trace, std::vector<double>* per_token = nullptr);

std::vector<double> next_token_distribution(const PolicyParams& p, std::string_view prompt,
                                            const std::vector<TokenId>& prefix);

// Temperature must be positive. Log-probs are reported at temperature 1.
Candidate sample(const PolicyParams& p, const PromptContext& ctx, double temperature, std::uint64_t seed,
                 Trace* trace = nullptr, std::size_t max_len = kMaxResponseTokens);
Candidate sample(const PolicyParams& p, std::string_view prompt, double temperature, std::uint64_t seed);

// Argmax decoding with lowest-index tie breaking.
Candidate greedy_decode(const PolicyParams& p, const PromptContext& ctx, std::size_t max_len = kMaxResponseTokens);
Candidate greedy_decode(const PolicyParams& p, std::string_view prompt);

struct SftItem {
  Trace trace;  // tokenized y followed by EOS
};

SftItem make_sft_item(const PolicyParams& p, const SftExample& e);

// Mean over items of summed token cross-entropy; adds its gradient to *grad when given.
double sft_loss(const PolicyParams& p, const std::vector<const SftItem*>& batch, std::vector<double>* grad = nullptr);

// One gradient-descent step; returns the pre-update loss. Throws
// kNonFiniteGradient (params untouched) when the gradient is not finite.
double sft_step(PolicyParams& p, const std::vector<const SftItem*>& batch, double lr);

// Binary checkpoint: magic, JSON header (vocab, dims, version), raw doubles.
void save_checkpoint(const PolicyParams& p, const std::string& path);
PolicyParams load_checkpoint(const std::string& path);

bool all_finite(const std::vector<double>& v);

}  // namespace webrl
