#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "fixtures.hpp"
#include "webrl/dataprep.hpp"
#include "webrl/reward.hpp"

using namespace webrl;
using webrl_test::dataset;
using webrl_test::space;
using webrl_test::suite;

TEST(Collect, TrainSplitHasNoDrops) {
  CollectResult r = collect_trajectories(suite().configs(Split::kTrain));
  EXPECT_EQ(r.trajectories.size(), 70u);
  EXPECT_EQ(r.dropped, 0);
  for (const auto& t : r.trajectories) {
    EXPECT_EQ(t.observations.size(), t.actions.size() + 1);
    EXPECT_TRUE(replay_valid(t));
  }
}

TEST(Collect, CorruptedOracleIsDropped) {
  auto configs = suite().configs(Split::kTrain);
  const std::uint64_t bad = config_hash(configs[17]);
  OracleFn oracle = [&](const TaskConfig& c) {
    auto acts = oracle_trajectory(c);
    if (config_hash(c) == bad) acts[0] = Action{"click", {"zz404"}};
    return acts;
  };
  CollectResult r = collect_trajectories(configs, oracle);
  EXPECT_EQ(r.dropped, 1);
  EXPECT_EQ(r.trajectories.size(), 69u);

  // A sequence that executes but never succeeds is dropped too.
  OracleFn lazy = [](const TaskConfig&) { return std::vector<Action>{{"scroll", {"down"}}}; };
  EXPECT_EQ(collect_trajectories({configs[0], configs[1]}, lazy).dropped, 2);
}

TEST(Collect, EmptyInput) {
  CollectResult r = collect_trajectories({});
  EXPECT_TRUE(r.trajectories.empty());
  EXPECT_EQ(r.dropped, 0);
}

TEST(Collect, WorkerCountDoesNotChangeOutput) {
  auto configs = suite().configs(Split::kTest);
  auto a = collect_trajectories(configs, oracle_trajectory, 1);
  auto b = collect_trajectories(configs, oracle_trajectory, 3);
  ASSERT_EQ(a.trajectories.size(), b.trajectories.size());
  for (std::size_t i = 0; i < a.trajectories.size(); ++i) {
    EXPECT_EQ(to_json(a.trajectories[i]), to_json(b.trajectories[i]));
  }
}

TEST(ReplayValid, DetectsTampering) {
  Trajectory t = collect_trajectories({suite().configs(Split::kTrain)[0]}).trajectories.at(0);
  ASSERT_TRUE(replay_valid(t));
  t.observations[1] += " ";
  EXPECT_FALSE(replay_valid(t));
}

TEST(Decompose, HistoryLengthsAndPrefix) {
  for (const Trajectory& t : dataset().base) {
    auto samples = decompose(t);
    ASSERT_EQ(samples.size(), t.actions.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const StepSample& s = samples[i];
      EXPECT_EQ(s.t, static_cast<int>(i));
      EXPECT_EQ(s.history.size(), i);
      EXPECT_EQ(s.observation, t.observations[i]);
      EXPECT_EQ(s.label, t.actions[i]);
      std::vector<Action> prefix = s.history;
      prefix.push_back(s.label);
      EXPECT_TRUE(std::equal(prefix.begin(), prefix.end(), t.actions.begin()));
    }
  }
}

TEST(Decompose, FourActionTrajectory) {
  for (const Trajectory& t : dataset().base) {
    if (t.actions.size() != 4) continue;
    auto samples = decompose(t);
    std::vector<std::size_t> lens;
    for (const auto& s : samples) lens.push_back(s.history.size());
    EXPECT_EQ(lens, (std::vector<std::size_t>{0, 1, 2, 3}));
    return;
  }
  FAIL() << "no four-action trajectory in the base set";
}

TEST(Decompose, SkipInitialMode) {
  const auto& base = dataset().base;
  auto it = std::find_if(base.begin(), base.end(), [](const Trajectory& x) { return x.actions.size() >= 2; });
  ASSERT_NE(it, base.end());
  const Trajectory& t = *it;
  auto samples = decompose(t, StepIndexing::kSkipInitial);
  ASSERT_EQ(samples.size(), t.actions.size() - 1);
  EXPECT_EQ(samples.front().t, 1);
  EXPECT_EQ(samples.front().label, t.actions[1]);
}

TEST(Perturb, DisjointAndDeterministic) {
  auto configs = suite().configs(Split::kTrain);
  auto p = perturb_configs(configs, suite(), 5);
  ASSERT_EQ(p.size(), configs.size());
  std::set<std::uint64_t> orig, pert;
  for (const auto& c : configs) orig.insert(config_hash(c));
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(p[i].type, configs[i].type);
    EXPECT_FALSE(orig.count(config_hash(p[i])));
    pert.insert(config_hash(p[i]));
  }
  EXPECT_EQ(pert.size(), p.size());
  EXPECT_EQ(perturb_configs(configs, suite(), 5), p);
  EXPECT_NE(perturb_configs(configs, suite(), 6), p);
}

TEST(SftCorpus, TargetsAreRewardPerfect) {
  const auto& d = dataset();
  ASSERT_EQ(d.sft.size(), d.samples.size());
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const SftExample& e = d.sft[i];
    ParsedResponse r = parse_response(e.y);
    ASSERT_TRUE(r.format_ok) << e.y;
    EXPECT_EQ(parse_action(r.action_text, space()), d.samples[i].label);
    EXPECT_DOUBLE_EQ(grade(e.y, d.samples[i].label, space(), RewardScheme::sparse()).total, 1.1);
    EXPECT_EQ(e.x, render_prompt(prompt_for(d.samples[i], space())));
  }
}

TEST(SftCorpus, RationaleNamesTarget) {
  const StepSample& s = dataset().samples.front();
  std::string why = rationale_for(s);
  EXPECT_NE(why.find("goal"), std::string::npos);
  EXPECT_NE(why.find("op " + s.label.name), std::string::npos);
}

TEST(Dataset, Counts) {
  const auto& d = dataset();
  EXPECT_EQ(d.base.size(), 70u);
  EXPECT_EQ(d.perturbed.size(), 280u);
  EXPECT_EQ(d.dropped, 0);
  std::size_t actions = 0;
  for (const auto* set : {&d.base, &d.perturbed}) {
    for (const auto& t : *set) actions += t.actions.size();
  }
  EXPECT_EQ(d.samples.size(), actions);
  EXPECT_GE(d.samples.size(), 1000u);
}

TEST(Dataset, WorkersAndReruns) {
  Dataset a = generate_dataset(suite(), 3, 1, StepIndexing::kIncludeInitial, 1);
  Dataset b = generate_dataset(suite(), 3, 1, StepIndexing::kIncludeInitial, 2);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.sft, b.sft);
}

TEST(SelectSubset, ReproducibleSortedDistinct) {
  auto a = select_subset(1080, 1000, 9);
  EXPECT_EQ(a, select_subset(1080, 1000, 9));
  EXPECT_NE(a, select_subset(1080, 1000, 10));
  EXPECT_EQ(a.size(), 1000u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), a.size());
  EXPECT_EQ(select_subset(10, 1000, 9).size(), 10u);
}

TEST(Jsonl, RoundTripAndSchemaChecks) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "webrl_dataprep_test";
  fs::create_directories(dir);
  std::vector<nlohmann::json> recs;
  for (std::size_t i = 0; i < 20; ++i) recs.push_back(to_json(dataset().samples[i]));
  const std::string path = (dir / "samples.jsonl").string();
  write_jsonl(path, "step_sample", recs);
  auto back = read_step_samples(path);
  ASSERT_EQ(back.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(back[i], dataset().samples[i]);

  try {
    read_jsonl(path, "sft_example");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
  }
  try {
    read_jsonl((dir / "missing.jsonl").string(), "step_sample");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
  const Trajectory& t = dataset().base[3];
  Trajectory tb = trajectory_from_json(to_json(t));
  EXPECT_EQ(tb.config, t.config);
  EXPECT_EQ(tb.actions, t.actions);
  EXPECT_EQ(tb.observations, t.observations);
  fs::remove_all(dir);
}
