#pragma once

// GRPO and PPO over single-step samples.
//
// Per sample, candidates are drawn from the batch-start policy and graded
// against the sample label. Each candidate contributes the token-averaged
//
//   min(r_t A, clip(r_t, 1-eps, 1+eps) A) - beta KL_t(pi_theta || pi_ref)
//
// where r_t is the per-token probability ratio against the rollout policy and
// KL_t the exact categorical KL of the next-token distributions. The objective
// is averaged over candidates and samples and climbed with one SGD step.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "webrl/dataprep.hpp"
#include "webrl/evalharness.hpp"
#include "webrl/policy.hpp"
#include "webrl/reward.hpp"

namespace webrl {

enum class Algorithm { kGrpo, kPpo };

std::string_view to_string(Algorithm a);
Algorithm algorithm_from_string(std::string_view s);

// The paper-style learning rates target billion-parameter models; the toy
// policy runs them multiplied by these factors.
inline constexpr double kSftLrScale = 3000.0;
inline constexpr double kRlLrScale = 1000000.0;

struct SftConfig {
  std::size_t samples = 1000;  // capped at the corpus size
  int epochs = 1;
  int batch_size = 32;
  double lr = 1e-4;
  double lr_scale = kSftLrScale;
  std::uint64_t seed = 0;

  double effective_lr() const { return lr * lr_scale; }
  void validate() const;
};

nlohmann::json to_json(const SftConfig& c);

struct SftResult {
  PolicyParams params;
  std::vector<double> losses;  // pre-update loss of every step
  std::size_t used_samples = 0;
};

// Seeded subset of the corpus, reshuffled each epoch, one sft_step per batch.
SftResult run_sft(PolicyParams init, const std::vector<SftExample>& corpus, const SftConfig& cfg);

struct TrainerConfig {
  Algorithm algorithm = Algorithm::kGrpo;
  int group_size = 8;
  double clip_eps = 0.2;
  double kl_beta = 1e-3;
  double lr = 1e-5;
  double lr_scale = kRlLrScale;
  double value_lr = 0.05;
  int batch_size = 128;
  double temperature = 0.6;
  RewardScheme scheme;
  int steps = 200;
  int eval_every = 0;  // 0 disables periodic validation
  std::uint64_t seed = 0;
  int workers = 1;

  double effective_lr() const { return lr * lr_scale; }
  // Throws kInvalidConfig.
  void validate() const;
};

nlohmann::json to_json(const TrainerConfig& c);

struct GroupStats {
  std::vector<double> rewards;
  std::vector<double> advantages;
  double mean = 0.0;
  double std = 0.0;
};

// A_i = (R_i - mean) / (std + 1e-8) with the population std.
GroupStats compute_advantages(const std::vector<double>& rewards);

struct RolloutCandidate {
  Trace trace;
  std::vector<double> old_logprobs;
  RewardBreakdown reward;
  double advantage = 0.0;
  std::string text;
};

struct RolloutGroup {
  const PromptContext* ctx = nullptr;
  std::vector<RolloutCandidate> candidates;
};

struct SurrogateStats {
  double objective = 0.0;
  double kl = 0.0;         // mean per-token KL
  double clip_frac = 0.0;  // share of tokens on the clipped branch
};

// Objective value at p over frozen rollouts; adds dJ/dtheta to *grad when given.
SurrogateStats surrogate_objective(const PolicyParams& p, const PolicyParams& ref,
                                   const std::vector<RolloutGroup>& groups, double clip_eps, double kl_beta,
                                   std::vector<double>* grad = nullptr);

struct MetricsRow {
  int step = 0;
  double avg_reward = 0.0;
  double avg_len = 0.0;
  std::optional<double> val_sr;
  double kl = 0.0;
  double clip_frac = 0.0;
  double modal_frac = 0.0;  // share of candidates emitting the step's most common action text
  double value_loss = 0.0;  // ppo only
};

nlohmann::json to_json(const MetricsRow& m);
MetricsRow metrics_row_from_json(const nlohmann::json& j);

// Linear value baseline over hashed prompt features.
struct ValueHead {
  static constexpr std::size_t kDims = 256;
  std::vector<double> w = std::vector<double>(kDims, 0.0);

  double predict(const PromptContext& ctx) const;
  std::vector<std::uint32_t> features(const PromptContext& ctx) const;
};

struct TrainSample {
  PromptContext ctx;
  Action label;
  std::size_t id = 0;  // stable index used to derive rollout seeds
};

std::vector<TrainSample> make_train_samples(const PolicyParams& p, const std::vector<StepSample>& samples,
                                            const ActionSpace& space);

// Draws and grades candidates (G for grpo, 1 for ppo) for each sample.
std::vector<RolloutGroup> rollout(const PolicyParams& p, const std::vector<const TrainSample*>& batch,
                                  const TrainerConfig& cfg, int step, const ActionSpace& space);

// One optimizer step. Both throw kNonFiniteGradient and leave params untouched.
MetricsRow grpo_step(PolicyParams& p, const PolicyParams& ref, const std::vector<const TrainSample*>& batch,
                     const TrainerConfig& cfg, int step, const ActionSpace& space);
MetricsRow ppo_step(PolicyParams& p, ValueHead& value, const PolicyParams& ref,
                    const std::vector<const TrainSample*>& batch, const TrainerConfig& cfg, int step,
                    const ActionSpace& space);

struct TrainRun {
  const TaskSuite* suite = nullptr;
  std::vector<StepSample> dataset;
  TrainerConfig cfg;
  std::optional<PolicyParams> warm_start;
  // Needed for a cold start; ignored when warm_start is set.
  std::shared_ptr<const Vocab> vocab;
  // When set, metrics.jsonl, last.ckpt and best.ckpt are written here.
  std::string out_dir;
  EvalOptions validation;
  std::function<void(const MetricsRow&)> on_step;
};

struct TrainResult {
  PolicyParams last;
  PolicyParams best;
  std::vector<MetricsRow> metrics;
};

TrainResult train(const TrainRun& run);

}  // namespace webrl
