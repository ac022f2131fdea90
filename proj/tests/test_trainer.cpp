#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "webrl/trainer.hpp"
#include "webrl/util.hpp"

using namespace webrl;
using webrl_test::dataset;
using webrl_test::space;
using webrl_test::suite;
using webrl_test::vocab;
using webrl_test::warm_policy;

namespace {

const std::vector<TrainSample>& train_samples() {
  static const auto s = make_train_samples(warm_policy(), dataset().samples, space());
  return s;
}

std::vector<const TrainSample*> pick(std::initializer_list<std::size_t> ids) {
  std::vector<const TrainSample*> out;
  for (std::size_t i : ids) out.push_back(&train_samples().at(i));
  return out;
}

TrainerConfig small_cfg() {
  TrainerConfig c;
  c.group_size = 4;
  c.batch_size = 4;
  c.steps = 3;
  c.seed = 12;
  return c;
}

// A one-token candidate whose rollout log-prob is shifted so the ratio is r.
RolloutGroup single_token_group(const PolicyParams& p, const PromptContext& ctx, double r, double advantage) {
  RolloutGroup g;
  g.ctx = &ctx;
  RolloutCandidate c;
  const TokenId tok = static_cast<TokenId>(vocab()->find("<think>"));
  c.trace = trace_tokens(p, ctx, {tok});
  const double lp = sequence_logprob(p, c.trace);
  c.old_logprobs = {lp - std::log(r)};
  c.advantage = advantage;
  g.candidates.push_back(c);
  return g;
}

}  // namespace

TEST(Advantages, HandExample) {
  GroupStats g = compute_advantages({1.1, 0.1, 0.1, 0.1});
  EXPECT_NEAR(g.mean, 0.35, 1e-12);
  EXPECT_NEAR(g.std, std::sqrt(0.1875), 1e-12);
  const std::vector<double> want = {1.7320508, -0.5773503, -0.5773503, -0.5773503};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(g.advantages[i], want[i], 1e-6);
  auto ref = webrl_test::reference_advantages(g.rewards);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(g.advantages[i], ref[i], 1e-12);
}

TEST(Advantages, ZeroVarianceGroup) {
  for (double v : {0.0, 1.1, -0.9}) {
    GroupStats g = compute_advantages({v, v, v, v});
    for (double a : g.advantages) EXPECT_EQ(a, 0.0);
  }
  // Constants whose rounded mean is not exactly the constant.
  Rng rng(3);
  for (int k = 0; k < 2000; ++k) {
    const std::vector<double> r(2 + rng.index(15), rng.normal() * 3.0);
    for (double a : compute_advantages(r).advantages) ASSERT_EQ(a, 0.0) << r[0] << " x" << r.size();
  }
}

TEST(Advantages, RandomGroupProperties) {
  Rng rng(8);
  const std::vector<double> levels = {-0.9, -0.8, -0.7, 0.0, 0.1, 0.2, 1.0, 1.1};
  for (int n = 0; n < 10000; ++n) {
    const std::size_t g = 2 + rng.index(15);
    std::vector<double> r(g);
    for (double& x : r) x = rng.index(2) ? levels[rng.index(levels.size())] : rng.uniform() * 2 - 0.9;
    GroupStats a = compute_advantages(r);
    ASSERT_LT(std::abs(std::accumulate(a.advantages.begin(), a.advantages.end(), 0.0)), 1e-9);
    const double c = rng.uniform() * 10 - 5;
    std::vector<double> shifted = r;
    for (double& x : shifted) x += c;
    GroupStats b = compute_advantages(shifted);
    for (std::size_t i = 0; i < g; ++i) ASSERT_NEAR(a.advantages[i], b.advantages[i], 1e-9);

    // Raising one reward never lowers its own advantage.
    const std::size_t k = rng.index(g);
    std::vector<double> up = r;
    up[k] += rng.uniform() * 2;
    ASSERT_GE(compute_advantages(up).advantages[k], a.advantages[k] - 1e-12);
  }
}

TEST(Surrogate, ClipArithmetic) {
  const PolicyParams& p = warm_policy();
  const PromptContext& ctx = train_samples()[0].ctx;
  SurrogateStats up = surrogate_objective(p, p, {single_token_group(p, ctx, 1.5, 1.0)}, 0.2, 0.0);
  EXPECT_NEAR(up.objective, 1.2, 1e-12);
  EXPECT_EQ(up.clip_frac, 1.0);
  SurrogateStats down = surrogate_objective(p, p, {single_token_group(p, ctx, 1.5, -1.0)}, 0.2, 0.0);
  EXPECT_NEAR(down.objective, -1.5, 1e-12);
  EXPECT_EQ(down.clip_frac, 0.0);
  SurrogateStats low = surrogate_objective(p, p, {single_token_group(p, ctx, 0.5, -2.0)}, 0.2, 0.0);
  EXPECT_NEAR(low.objective, -1.6, 1e-12);
}

TEST(Surrogate, ClippedFactorStaysInBounds) {
  const PolicyParams& p = warm_policy();
  const PromptContext& ctx = train_samples()[3].ctx;
  Rng rng(31);
  for (int n = 0; n < 500; ++n) {
    const double eps = 0.05 + 0.5 * rng.uniform();
    const double r = std::exp(rng.normal());
    const double a = rng.normal();
    if (std::abs(a) < 1e-3) continue;
    SurrogateStats st = surrogate_objective(p, p, {single_token_group(p, ctx, r, a)}, eps, 0.0);
    if (st.clip_frac > 0) {
      const double factor = st.objective / a;
      EXPECT_GE(factor, 1 - eps - 1e-9);
      EXPECT_LE(factor, 1 + eps + 1e-9);
    } else {
      EXPECT_NEAR(st.objective, r * a, 1e-9 * std::max(1.0, std::abs(r * a)));
    }
  }
}

TEST(Surrogate, KlZeroForIdenticalPolicies) {
  const PolicyParams& p = warm_policy();
  TrainerConfig cfg = small_cfg();
  auto groups = rollout(p, pick({0, 1, 2}), cfg, 1, space());
  for (double beta : {0.0, 1e-3, 1.0}) {
    SurrogateStats st = surrogate_objective(p, p, groups, 0.2, beta);
    EXPECT_EQ(st.kl, 0.0);
  }
}

TEST(Surrogate, KlNonNegative) {
  const PolicyParams& ref = warm_policy();
  PolicyParams p = ref;
  Rng rng(2);
  for (double& x : p.theta) x += 0.05 * rng.normal();
  auto groups = rollout(ref, pick({4, 5}), small_cfg(), 1, space());
  SurrogateStats st = surrogate_objective(p, ref, groups, 0.2, 1.0);
  EXPECT_GT(st.kl, 0.0);
}

// At theta = theta_old with beta = 0 the gradient is the token-averaged
// policy gradient sum_i A_i / (G L_i) grad log pi(c_i), which sft_loss
// computes independently for each candidate.
TEST(Surrogate, RatioOneIdentity) {
  const PolicyParams& p = warm_policy();
  TrainerConfig cfg = small_cfg();
  auto groups = rollout(p, pick({10}), cfg, 1, space());
  auto& cands = groups[0].candidates;
  std::vector<double> rewards;
  for (const auto& c : cands) rewards.push_back(c.reward.total);
  // Guarantee a non-degenerate group.
  rewards[0] += 1.0;
  GroupStats gs = compute_advantages(rewards);
  for (std::size_t i = 0; i < cands.size(); ++i) cands[i].advantage = gs.advantages[i];

  std::vector<double> grad(p.theta.size(), 0.0);
  SurrogateStats st = surrogate_objective(p, p, groups, 0.2, 0.0, &grad);
  EXPECT_EQ(st.clip_frac, 0.0);

  std::vector<double> expected(p.theta.size(), 0.0);
  for (const auto& c : cands) {
    SftItem item{c.trace};
    std::vector<double> g(p.theta.size(), 0.0);
    sft_loss(p, {&item}, &g);
    const double w = -c.advantage / (static_cast<double>(cands.size()) * static_cast<double>(c.trace.tokens.size()));
    for (std::size_t k = 0; k < g.size(); ++k) expected[k] += w * g[k];
  }
  for (std::size_t k = 0; k < grad.size(); ++k) ASSERT_NEAR(grad[k], expected[k], 1e-10) << k;
}

TEST(Surrogate, GradientMatchesFiniteDifferences) {
  const PolicyParams& old = warm_policy();
  TrainerConfig cfg = small_cfg();
  auto groups = rollout(old, pick({20, 200, 700}), cfg, 2, space());
  Rng rng(13);
  for (auto& g : groups) {
    std::vector<double> r;
    for (const auto& c : g.candidates) r.push_back(c.reward.total + 0.3 * rng.normal());
    GroupStats gs = compute_advantages(r);
    for (std::size_t i = 0; i < g.candidates.size(); ++i) g.candidates[i].advantage = gs.advantages[i];
  }
  // Move away from theta_old so ratios differ from 1 and some tokens clip.
  PolicyParams p = old;
  for (double& x : p.theta) x += 0.2 * rng.normal();
  PolicyParams ref = old;
  for (double& x : ref.theta) x -= 0.1 * rng.normal();

  std::vector<double> grad(p.theta.size(), 0.0);
  SurrogateStats st = surrogate_objective(p, ref, groups, 0.2, 0.05, &grad);
  EXPECT_GT(st.clip_frac, 0.0);
  EXPECT_LT(st.clip_frac, 1.0);

  std::vector<std::size_t> coords;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (grad[i] != 0.0) coords.push_back(i);
  }
  ASSERT_GE(coords.size(), 1000u);
  rng.shuffle(coords);
  coords.resize(1000);
  double worst = 0;
  for (std::size_t i : coords) {
    const double num = webrl_test::central_difference(
        p.theta, i, 1e-5, [&] { return surrogate_objective(p, ref, groups, 0.2, 0.05).objective; });
    worst = std::max(worst, webrl_test::relative_error(grad[i], num));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(GrpoStep, FirstStepHasNoClipOrKl) {
  PolicyParams p = warm_policy();
  const PolicyParams ref = p;
  MetricsRow m = grpo_step(p, ref, pick({0, 1, 2, 3}), small_cfg(), 1, space());
  EXPECT_EQ(m.clip_frac, 0.0);
  EXPECT_EQ(m.kl, 0.0);
  EXPECT_EQ(p.version, ref.version + 1);
  EXPECT_GT(m.avg_len, 0.0);
  EXPECT_GT(m.modal_frac, 0.0);
  EXPECT_LE(m.modal_frac, 1.0);
}

TEST(GrpoStep, NonFiniteGradientLeavesParams) {
  PolicyParams p = warm_policy();
  const PolicyParams ref = warm_policy();
  for (std::size_t r = 0; r < p.rows; ++r) p.theta[p.w_index(r, 3)] = std::numeric_limits<double>::infinity();
  const auto version = p.version;
  try {
    grpo_step(p, ref, pick({0}), small_cfg(), 1, space());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFiniteGradient);
  }
  EXPECT_EQ(p.version, version);
}

TEST(PpoStep, ValueEqualToRewardGivesNoPolicyUpdate) {
  PolicyParams p = warm_policy();
  const PolicyParams ref = p;
  TrainerConfig cfg = small_cfg();
  cfg.algorithm = Algorithm::kPpo;
  cfg.kl_beta = 0.0;
  auto batch = pick({30});
  const double reward = rollout(p, batch, cfg, 1, space())[0].candidates[0].reward.total;
  ValueHead v;
  auto f = v.features(batch[0]->ctx);
  v.w[f[0]] = reward / static_cast<double>(std::count(f.begin(), f.end(), f[0]));
  ASSERT_DOUBLE_EQ(v.predict(batch[0]->ctx), reward);
  MetricsRow m = ppo_step(p, v, ref, batch, cfg, 1, space());
  EXPECT_EQ(m.value_loss, 0.0);
  EXPECT_EQ(p.theta, ref.theta);
}

TEST(PpoStep, ValueLossFallsOnFixedBatch) {
  PolicyParams p = warm_policy();
  const PolicyParams ref = p;
  TrainerConfig cfg = small_cfg();
  cfg.algorithm = Algorithm::kPpo;
  auto batch = pick({0, 40, 80, 120, 160, 200, 240, 280});
  ValueHead v;
  std::vector<double> losses;
  for (int step = 1; step <= 50; ++step) losses.push_back(ppo_step(p, v, ref, batch, cfg, step, space()).value_loss);
  const double head = std::accumulate(losses.begin(), losses.begin() + 5, 0.0);
  const double tail = std::accumulate(losses.end() - 5, losses.end(), 0.0);
  EXPECT_LT(tail, 0.5 * head);
}

TEST(TrainerConfigTest, Validation) {
  TrainerConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_DOUBLE_EQ(c.effective_lr(), 10.0);
  auto bad = [](auto mutate) {
    TrainerConfig x;
    mutate(x);
    EXPECT_THROW(x.validate(), Error);
  };
  bad([](TrainerConfig& x) { x.group_size = 1; });
  bad([](TrainerConfig& x) { x.clip_eps = 1.0; });
  bad([](TrainerConfig& x) { x.kl_beta = -1; });
  bad([](TrainerConfig& x) { x.temperature = 0; });
  TrainerConfig ppo;
  ppo.algorithm = Algorithm::kPpo;
  ppo.group_size = 1;
  EXPECT_NO_THROW(ppo.validate());
  EXPECT_EQ(algorithm_from_string("ppo"), Algorithm::kPpo);
  EXPECT_THROW(algorithm_from_string("a2c"), Error);
}

TEST(Metrics, JsonRoundTrip) {
  MetricsRow m;
  m.step = 4;
  m.avg_reward = 0.7;
  m.val_sr = 42.5;
  MetricsRow back = metrics_row_from_json(to_json(m));
  EXPECT_EQ(to_json(back), to_json(m));
  m.val_sr.reset();
  EXPECT_FALSE(metrics_row_from_json(to_json(m)).val_sr);
}

TEST(Train, DeterministicAcrossRunsAndWorkers) {
  auto run_once = [](int workers) {
    TrainRun run;
    run.suite = &suite();
    run.dataset = dataset().samples;
    run.cfg = small_cfg();
    run.cfg.workers = workers;
    run.warm_start = warm_policy();
    return train(run);
  };
  TrainResult a = run_once(1), b = run_once(1), c = run_once(3);
  ASSERT_EQ(a.metrics.size(), 3u);
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    EXPECT_EQ(to_json(a.metrics[i]), to_json(b.metrics[i]));
    EXPECT_EQ(to_json(a.metrics[i]), to_json(c.metrics[i]));
  }
  EXPECT_EQ(a.last.theta, c.last.theta);
  EXPECT_NE(a.last.theta, warm_policy().theta);
}

TEST(Train, WritesArtifacts) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "webrl_train_test";
  fs::remove_all(dir);
  TrainRun run;
  run.suite = &suite();
  run.dataset = std::vector<StepSample>(dataset().samples.begin(), dataset().samples.begin() + 40);
  run.cfg = small_cfg();
  run.cfg.steps = 2;
  run.cfg.eval_every = 1;
  run.warm_start = warm_policy();
  run.out_dir = dir.string();
  run.validation.split = Split::kTest;
  int calls = 0;
  run.on_step = [&](const MetricsRow&) { ++calls; };
  TrainResult r = train(run);
  EXPECT_EQ(calls, 2);
  for (const char* f : {"metrics.jsonl", "last.ckpt", "best.ckpt"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  auto rows = read_jsonl((dir / "metrics.jsonl").string(), "metrics");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(metrics_row_from_json(rows[1]).val_sr.has_value());
  EXPECT_EQ(load_checkpoint((dir / "last.ckpt").string()).theta, r.last.theta);
  fs::remove_all(dir);
}

TEST(Train, Preconditions) {
  TrainRun run;
  run.suite = &suite();
  run.cfg = small_cfg();
  run.warm_start = warm_policy();
  EXPECT_THROW(train(run), Error);  // empty dataset
  run.dataset = dataset().samples;
  run.warm_start.reset();
  EXPECT_THROW(train(run), Error);  // cold start without a vocabulary
  run.vocab = vocab();
  run.cfg.steps = 1;
  run.cfg.batch_size = 1;
  run.cfg.group_size = 2;
  TrainResult r = train(run);
  EXPECT_EQ(r.metrics.size(), 1u);
}

TEST(Sft, RunSftDefaultsLowerLoss) {
  SftConfig cfg;
  cfg.samples = 200;
  SftResult r = run_sft(init_policy(vocab()), dataset().sft, cfg);
  EXPECT_EQ(r.used_samples, 200u);
  ASSERT_EQ(r.losses.size(), 7u);
  EXPECT_LT(r.losses.back(), r.losses.front());
  cfg.epochs = 0;
  PolicyParams init = init_policy(vocab());
  EXPECT_EQ(run_sft(init, dataset().sft, cfg).params.theta, init.theta);
}
