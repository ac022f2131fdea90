#include "webrl/dataprep.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <unordered_set>

#include "webrl/axtree.hpp"
#include "webrl/util.hpp"

namespace webrl {

using nlohmann::json;

namespace {

std::optional<Trajectory> run_oracle(const TaskConfig& config, const OracleFn& oracle) {
  try {
    Trajectory traj;
    traj.config = config;
    traj.actions = oracle(config);
    auto [session, obs] = reset(config);
    traj.observations.push_back(obs.text);
    for (const auto& a : traj.actions) {
      if (session.done()) return std::nullopt;
      traj.observations.push_back(step(session, a).text);
    }
    if (traj.actions.empty() || check_success(session) != 1) return std::nullopt;
    return traj;
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

CollectResult collect_trajectories(const std::vector<TaskConfig>& configs, const OracleFn& oracle, int workers) {
  std::vector<std::optional<Trajectory>> slots(configs.size());
  parallel_for(configs.size(), workers, [&](size_t i) { slots[i] = run_oracle(configs[i], oracle); });
  CollectResult out;
  for (auto& s : slots) {
    if (s) {
      out.trajectories.push_back(std::move(*s));
    } else {
      ++out.dropped;
    }
  }
  return out;
}

bool replay_valid(const Trajectory& traj) {
  if (traj.observations.size() != traj.actions.size() + 1) return false;
  try {
    auto [session, obs] = reset(traj.config);
    if (obs.text != traj.observations[0]) return false;
    for (size_t t = 0; t < traj.actions.size(); ++t) {
      if (session.done()) return false;
      if (step(session, traj.actions[t]).text != traj.observations[t + 1]) return false;
    }
    return check_success(session) == 1;
  } catch (const Error&) {
    return false;
  }
}

std::vector<StepSample> decompose(const Trajectory& traj, StepIndexing mode) {
  std::vector<StepSample> out;
  size_t first = mode == StepIndexing::kIncludeInitial ? 0 : 1;
  for (size_t t = first; t < traj.actions.size(); ++t) {
    StepSample s;
    s.type = traj.config.type;
    s.seed = traj.config.seed;
    s.t = static_cast<int>(t);
    s.goal = traj.config.goal;
    s.history.assign(traj.actions.begin(), traj.actions.begin() + static_cast<std::ptrdiff_t>(t));
    s.observation = traj.observations[t];
    s.label = traj.actions[t];
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TaskConfig> perturb_configs(const std::vector<TaskConfig>& configs, const TaskSuite& suite,
                                        std::uint64_t seed) {
  std::unordered_set<std::uint64_t> seen;
  for (const auto& c : configs) seen.insert(config_hash(c));
  std::vector<TaskConfig> out;
  for (size_t i = 0; i < configs.size(); ++i) {
    const CategorySpec& cat = suite.category(configs[i].type);
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (attempt == 64) {
        throw Error(ErrorCode::kInvalidConfig, "could not perturb config " + std::to_string(i) + " into a new one");
      }
      TaskConfig c = resample_config(configs[i], cat, mix64(mix64(seed, i), attempt));
      if (seen.insert(config_hash(c)).second) {
        out.push_back(std::move(c));
        break;
      }
    }
  }
  return out;
}

PromptBundle prompt_for(const StepSample& s, const ActionSpace& space) {
  return PromptBundle{s.goal, s.history, s.observation, space.describe()};
}

std::string rationale_for(const StepSample& s) {
  auto lines = parse_axtree(s.observation);
  const AxLine* target = nullptr;
  std::string value;
  const ActionSpace space = ActionSpace::standard();
  const ActionSpec* spec = space.find(s.label.name);
  for (size_t i = 0; spec && i < spec->args.size() && i < s.label.params.size(); ++i) {
    if (spec->args[i] == ArgKind::kElementId && !target) {
      target = find_line(lines, s.label.params[i]);
    } else if (spec->args[i] != ArgKind::kElementId) {
      value = s.label.params[i];
    }
  }
  if (!target && !value.empty()) {
    // A reported answer names the element it was read from, when there is one.
    for (const auto& l : lines) {
      if (!l.bid.empty() && l.text == value) {
        target = &l;
        break;
      }
    }
  }
  std::string r = " goal " + std::string(to_string(s.type)) + " .";
  if (target) {
    r += " target " + target->role;
    if (!target->text.empty()) r += " " + target->text;
  } else {
    r += " target page";
  }
  r += " . op " + s.label.name;
  if (!value.empty()) r += " . value " + value;
  return r + " .";
}

SftExample make_sft_example(const StepSample& s, const ActionSpace& space) {
  SftExample e;
  e.x = render_prompt(prompt_for(s, space));
  e.y = std::string(kThinkOpen) + rationale_for(s) + std::string(kThinkClose) + std::string(kActionOpen) +
        serialize_action(s.label) + std::string(kActionClose);
  return e;
}

std::vector<SftExample> build_sft_corpus(const std::vector<StepSample>& samples, const ActionSpace& space) {
  std::vector<SftExample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(make_sft_example(s, space));
  return out;
}

std::vector<size_t> select_subset(size_t size, size_t n, std::uint64_t seed) {
  std::vector<size_t> idx(size);
  for (size_t i = 0; i < size; ++i) idx[i] = i;
  Rng rng(mix64(seed, 0xD5A7));
  rng.shuffle(idx);
  idx.resize(std::min(n, size));
  std::sort(idx.begin(), idx.end());
  return idx;
}

Dataset generate_dataset(const TaskSuite& suite, std::uint64_t seed, int perturb_rounds, StepIndexing mode,
                         int workers) {
  Dataset d;
  const auto train = suite.configs(Split::kTrain);
  auto base = collect_trajectories(train, oracle_trajectory, workers);
  d.base = std::move(base.trajectories);
  d.dropped = base.dropped;
  std::vector<TaskConfig> extra;
  for (int r = 1; r <= perturb_rounds; ++r) {
    auto p = perturb_configs(train, suite, mix64(seed, static_cast<std::uint64_t>(r)));
    extra.insert(extra.end(), p.begin(), p.end());
  }
  auto pert = collect_trajectories(extra, oracle_trajectory, workers);
  d.perturbed = std::move(pert.trajectories);
  d.dropped += pert.dropped;
  for (const auto* set : {&d.base, &d.perturbed}) {
    for (const auto& t : *set) {
      auto s = decompose(t, mode);
      d.samples.insert(d.samples.end(), s.begin(), s.end());
    }
  }
  d.sft = build_sft_corpus(d.samples, suite.action_space);
  return d;
}

json to_json(const Action& a) { return {{"name", a.name}, {"params", a.params}}; }

Action action_from_json(const json& j) { return Action{j.at("name").get<std::string>(), j.at("params").get<std::vector<std::string>>()}; }

namespace {

json actions_json(const std::vector<Action>& v) {
  json out = json::array();
  for (const auto& a : v) out.push_back(to_json(a));
  return out;
}

std::vector<Action> actions_from(const json& j) {
  std::vector<Action> out;
  for (const auto& a : j) out.push_back(action_from_json(a));
  return out;
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("malformed ") + what + " record: " + e.what());
  }
}

}  // namespace

json to_json(const Trajectory& t) {
  return {{"config", to_json(t.config)}, {"actions", actions_json(t.actions)}, {"observations", t.observations}};
}

Trajectory trajectory_from_json(const json& j) {
  return guarded("trajectory", [&] {
    Trajectory t;
    t.config = task_config_from_json(j.at("config"));
    t.actions = actions_from(j.at("actions"));
    t.observations = j.at("observations").get<std::vector<std::string>>();
    return t;
  });
}

json to_json(const StepSample& s) {
  return {{"task_type", to_string(s.type)}, {"seed", s.seed},       {"t", s.t},
          {"goal", s.goal},                 {"history", actions_json(s.history)},
          {"observation", s.observation},   {"label", to_json(s.label)}};
}

StepSample step_sample_from_json(const json& j) {
  return guarded("step sample", [&] {
    StepSample s;
    s.type = task_type_from_string(j.at("task_type").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
    s.t = j.at("t").get<int>();
    s.goal = j.at("goal").get<std::string>();
    s.history = actions_from(j.at("history"));
    s.observation = j.at("observation").get<std::string>();
    s.label = action_from_json(j.at("label"));
    return s;
  });
}

json to_json(const SftExample& e) { return {{"x", e.x}, {"y", e.y}}; }

SftExample sft_example_from_json(const json& j) {
  return guarded("sft", [&] { return SftExample{j.at("x").get<std::string>(), j.at("y").get<std::string>()}; });
}

void write_jsonl(const std::string& path, const std::string& kind, const std::vector<json>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  out << json{{"schema", kind}, {"version", kDatasetSchemaVersion}}.dump() << '\n';
  for (const auto& r : records) out << r.dump() << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path + "'");
}

std::vector<json> read_jsonl(const std::string& path, const std::string& kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kInvalidConfig, "'" + path + "' is empty");
  json header = guarded("header", [&] { return json::parse(line); });
  if (header.value("schema", "") != kind || header.value("version", 0) != kDatasetSchemaVersion) {
    throw Error(ErrorCode::kInvalidConfig, "'" + path + "' is not a " + kind + " v" +
                                               std::to_string(kDatasetSchemaVersion) + " file");
  }
  std::vector<json> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(guarded(kind.c_str(), [&] { return json::parse(line); }));
  }
  return out;
}

std::vector<StepSample> read_step_samples(const std::string& path) {
  std::vector<StepSample> out;
  for (const auto& j : read_jsonl(path, "step_sample")) out.push_back(step_sample_from_json(j));
  return out;
}

}  // namespace webrl
