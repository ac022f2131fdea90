#pragma once

// Oracle trajectories, single-step decomposition, config perturbation and
// the SFT corpus.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "webrl/prompt_template.hpp"
#include "webrl/suite.hpp"

namespace webrl {

struct Trajectory {
  TaskConfig config;
  std::vector<Action> actions;
  // observations[0] precedes actions[0]; observations[t+1] follows actions[t].
  std::vector<std::string> observations;
};

struct StepSample {
  TaskType type = TaskType::kForm;
  std::uint64_t seed = 0;
  int t = 0;
  std::string goal;
  std::vector<Action> history;
  std::string observation;
  Action label;

  friend bool operator==(const StepSample&, const StepSample&) = default;
};

struct SftExample {
  std::string x;
  std::string y;

  friend bool operator==(const SftExample&, const SftExample&) = default;
};

using OracleFn = std::function<std::vector<Action>(const TaskConfig&)>;

struct CollectResult {
  std::vector<Trajectory> trajectories;
  int dropped = 0;
};

// Replays each config's oracle; trajectories that throw, fail replay or do
// not end in success are dropped and counted. Output order follows `configs`
// for any worker count.
CollectResult collect_trajectories(const std::vector<TaskConfig>& configs, const OracleFn& oracle = oracle_trajectory,
                                   int workers = 1);

// True when feeding the actions into a fresh session reproduces every stored
// observation and ends in success.
bool replay_valid(const Trajectory& traj);

enum class StepIndexing {
  kIncludeInitial,  // t = 0..T-1, the first action is a label too
  kSkipInitial,     // t = 1..T-1, the first action only ever appears as history
};

std::vector<StepSample> decompose(const Trajectory& traj, StepIndexing mode = StepIndexing::kIncludeInitial);

// One resampled config per input, hash-distinct from every input and from each other.
std::vector<TaskConfig> perturb_configs(const std::vector<TaskConfig>& configs, const TaskSuite& suite,
                                        std::uint64_t seed);

PromptBundle prompt_for(const StepSample& s, const ActionSpace& space);
std::string rationale_for(const StepSample& s);
SftExample make_sft_example(const StepSample& s, const ActionSpace& space);
std::vector<SftExample> build_sft_corpus(const std::vector<StepSample>& samples, const ActionSpace& space);

// Seeded subset of min(n, size) indices in ascending order.
std::vector<size_t> select_subset(size_t size, size_t n, std::uint64_t seed);

// The full data pipeline over a suite's train split: oracle trajectories of
// the train configs, `perturb_rounds` resampled copies of them, their step
// samples and the SFT corpus.
struct Dataset {
  std::vector<Trajectory> base;
  std::vector<Trajectory> perturbed;
  std::vector<StepSample> samples;
  std::vector<SftExample> sft;
  int dropped = 0;
};

Dataset generate_dataset(const TaskSuite& suite, std::uint64_t seed, int perturb_rounds,
                         StepIndexing mode = StepIndexing::kIncludeInitial, int workers = 1);

// Line-delimited dataset files: a header line {"schema": kind, "version": N}
// followed by one record per line.
inline constexpr int kDatasetSchemaVersion = 1;

nlohmann::json to_json(const Action& a);
Action action_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Trajectory& t);
Trajectory trajectory_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StepSample& s);
StepSample step_sample_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SftExample& e);
SftExample sft_example_from_json(const nlohmann::json& j);

// Throws kIo on file errors, kInvalidConfig on schema mismatch.
void write_jsonl(const std::string& path, const std::string& kind, const std::vector<nlohmann::json>& records);
std::vector<nlohmann::json> read_jsonl(const std::string& path, const std::string& kind);

std::vector<StepSample> read_step_samples(const std::string& path);

}  // namespace webrl
