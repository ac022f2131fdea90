#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "webrl/policy.hpp"
#include "webrl/util.hpp"

using namespace webrl;
using webrl_test::dataset;
using webrl_test::vocab;
using webrl_test::warm_policy;

namespace {

const SftExample& example(std::size_t i = 0) { return dataset().sft.at(i); }

std::vector<const SftItem*> ptrs(const std::vector<SftItem>& items) {
  std::vector<const SftItem*> out;
  for (const auto& i : items) out.push_back(&i);
  return out;
}

}  // namespace

TEST(VocabTest, EveryTargetTokenizes) {
  const Vocab& v = *vocab();
  EXPECT_EQ(v.text(Vocab::kEos), "");
  for (const auto& e : dataset().sft) {
    auto ids = v.tokenize(e.y);
    ASSERT_EQ(v.decode(ids), e.y);
    for (TokenId id : ids) ASSERT_NE(id, Vocab::kEos);
  }
}

TEST(VocabTest, GreedyLongestMatch) {
  const Vocab& v = *vocab();
  auto ids = v.tokenize(" click('a324')");
  ASSERT_FALSE(ids.empty());
  EXPECT_EQ(v.text(ids[0]), " click");
  std::vector<TokenId> pre;
  v.prefixes_of(" clicks", pre);
  ASSERT_FALSE(pre.empty());
  for (std::size_t i = 1; i < pre.size(); ++i) EXPECT_LT(v.text(pre[i - 1]).size(), v.text(pre[i]).size());
  EXPECT_EQ(v.text(pre.back()), " click");
}

TEST(VocabTest, OovAndValidation) {
  try {
    vocab()->tokenize("click('a1')\x01");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOovToken);
  }
  EXPECT_THROW(Vocab({"", "a", "a"}), Error);
  EXPECT_THROW(Vocab({"x", "a"}), Error);
  EXPECT_EQ(vocab()->find("no-such-token"), -1);
}

TEST(Features, PromptReader) {
  const StepSample& s = dataset().samples.at(5);
  PromptContext ctx = parse_prompt(example(5).x, *vocab());
  EXPECT_EQ(ctx.goal, s.goal);
  EXPECT_EQ(ctx.history, s.history);
  EXPECT_EQ(ctx.lines.size(), parse_axtree(s.observation).size());
}

TEST(Features, RowsInRangeAndRelationsSorted) {
  const PolicyParams& p = warm_policy();
  SftItem item = make_sft_item(p, example(7));
  for (const auto& f : item.trace.steps) {
    EXPECT_LT(f.state, kNumStates);
    for (auto r : f.rows) EXPECT_LT(r, p.rows);
    EXPECT_LT(f.rel_row, p.rel_rows);
    for (std::size_t i = 1; i < f.rel.size(); ++i) EXPECT_LT(f.rel[i - 1].first, f.rel[i].first);
    for (const auto& [tok, mask] : f.rel) {
      EXPECT_LT(tok, vocab()->size());
      EXPECT_LT(mask, 1u << kNumRelations);
    }
  }
}

TEST(PolicyInit, BudgetAndUniform) {
  PolicyParams p = init_policy(vocab());
  EXPECT_LE(p.theta.size(), kMaxParameters);
  EXPECT_TRUE(std::all_of(p.theta.begin(), p.theta.end(), [](double x) { return x == 0.0; }));
  const double v = static_cast<double>(vocab()->size());
  for (std::string tok : {"<think>", " goal", "(", "a3"}) {
    ASSERT_EQ(vocab()->tokenize(tok).size(), 1u) << tok;
    EXPECT_NEAR(logprob(p, example().x, tok), -std::log(v), 1e-12);
  }
  EXPECT_THROW(init_policy(vocab(), 100000), Error);
}

TEST(PolicyLogprob, OovResponse) {
  try {
    logprob(warm_policy(), example().x, "<think>\x02");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOovToken);
  }
}

TEST(PolicyLogprob, AdditiveOverTokens) {
  const PolicyParams& p = warm_policy();
  PromptContext ctx = parse_prompt(example(2).x, *vocab());
  Candidate c = sample(p, ctx, 1.0, 17);
  double sum = 0;
  for (double lp : c.token_logprobs) sum += lp;
  EXPECT_DOUBLE_EQ(c.logprob(), sum);
  std::vector<double> per;
  double seq = sequence_logprob(p, trace_tokens(p, ctx, c.tokens), &per);
  EXPECT_NEAR(seq, sum, 1e-9);
  ASSERT_EQ(per.size(), c.tokens.size());
}

TEST(PolicyLogprob, NormalizedEverywhere) {
  const PolicyParams& p = warm_policy();
  for (std::size_t i : {0, 11, 400}) {
    auto tokens = vocab()->tokenize(example(i).y);
    for (std::size_t k = 0; k <= tokens.size(); k += 3) {
      std::vector<TokenId> prefix(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(k));
      auto dist = next_token_distribution(p, example(i).x, prefix);
      double s = 0;
      for (double x : dist) s += x;
      ASSERT_LT(std::abs(s - 1.0), 1e-9);
    }
  }
}

TEST(Sft, InitialLossIsLengthTimesLogV) {
  PolicyParams p = init_policy(vocab());
  SftItem item = make_sft_item(p, example(3));
  const double l = static_cast<double>(item.trace.tokens.size());
  EXPECT_EQ(item.trace.tokens.back(), Vocab::kEos);
  EXPECT_NEAR(sft_loss(p, {&item}), l * std::log(static_cast<double>(vocab()->size())), 1e-9);
}

TEST(Sft, ZeroLearningRateKeepsParams) {
  PolicyParams p = warm_policy();
  SftItem item = make_sft_item(p, example(4));
  const auto before = p.theta;
  double loss = sft_step(p, {&item}, 0.0);
  EXPECT_EQ(p.theta, before);
  EXPECT_DOUBLE_EQ(loss, sft_loss(warm_policy(), {&item}));
  EXPECT_EQ(p.version, warm_policy().version + 1);
}

TEST(Sft, OverfitOneExampleAndMemorize) {
  PolicyParams p = init_policy(vocab());
  const SftExample& e = example(9);
  SftItem item = make_sft_item(p, e);
  const double initial = sft_loss(p, {&item});
  for (int i = 0; i < 100; ++i) sft_step(p, {&item}, 0.3);
  EXPECT_LT(sft_loss(p, {&item}), 0.01 * initial);
  EXPECT_EQ(greedy_decode(p, e.x).text, e.y);
  EXPECT_TRUE(all_finite(p.theta));
}

TEST(Sft, CorpusLikelihoodRisesEveryEpoch) {
  std::vector<SftExample> corpus(dataset().sft.begin(), dataset().sft.begin() + 10);
  PolicyParams p = init_policy(vocab());
  auto total = [&] {
    double s = 0;
    for (const auto& e : corpus) s += logprob(p, e.x, e.y);
    return s;
  };
  SftConfig cfg;
  cfg.batch_size = 10;
  cfg.lr_scale = 1000;
  double prev = total();
  for (int epoch = 0; epoch < 8; ++epoch) {
    p = run_sft(p, corpus, cfg).params;
    const double now = total();
    EXPECT_GT(now, prev) << "epoch " << epoch;
    prev = now;
  }
}

TEST(Sft, GradientMatchesFiniteDifferences) {
  PolicyParams p = warm_policy();
  std::vector<SftItem> items;
  for (std::size_t i : {1, 50, 300}) items.push_back(make_sft_item(p, example(i)));
  auto batch = ptrs(items);
  std::vector<double> grad(p.theta.size(), 0.0);
  sft_loss(p, batch, &grad);

  std::vector<std::size_t> touched;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (grad[i] != 0.0) touched.push_back(i);
  }
  ASSERT_GE(touched.size(), 1000u);
  Rng rng(21);
  rng.shuffle(touched);
  touched.resize(1000);
  for (int k = 0; k < 100; ++k) touched.push_back(rng.index(p.theta.size()));

  double worst = 0;
  for (std::size_t i : touched) {
    double num = webrl_test::central_difference(p.theta, i, 1e-4, [&] { return sft_loss(p, batch); });
    double e = webrl_test::relative_error(grad[i], num);
    worst = std::max(worst, e);
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Sampling, SeededAndTemperatureLimit) {
  const PolicyParams& p = warm_policy();
  PromptContext ctx = parse_prompt(example(6).x, *vocab());
  Candidate a = sample(p, ctx, 0.6, 99), b = sample(p, ctx, 0.6, 99);
  EXPECT_EQ(a.text, b.text);
  EXPECT_EQ(a.token_logprobs, b.token_logprobs);
  EXPECT_EQ(sample(p, ctx, 1e-6, 5).text, greedy_decode(p, ctx).text);
  EXPECT_THROW(sample(p, ctx, 0.0, 1), Error);
}

TEST(Sampling, UntrainedPolicyIsDiverse) {
  PolicyParams p = init_policy(vocab());
  PromptContext ctx = parse_prompt(example().x, *vocab());
  std::set<std::string> texts;
  for (std::uint64_t s = 0; s < 8; ++s) {
    Candidate c = sample(p, ctx, 0.6, s, nullptr, 16);
    EXPECT_LE(c.length(), 16u);
    texts.insert(c.text);
  }
  EXPECT_GE(texts.size(), 2u);
}

TEST(Greedy, TieGoesToLowestIndex) {
  PolicyParams p = init_policy(vocab());
  // All-zero parameters: every logit ties, so EOS (index 0) wins at once.
  EXPECT_EQ(greedy_decode(p, example().x).length(), 1u);
  const TokenId lo = 5, hi = 9;
  for (std::size_t r = 0; r < p.rows; ++r) {
    p.theta[p.w_index(r, lo)] = 1.0;
    p.theta[p.w_index(r, hi)] = 1.0;
  }
  PromptContext ctx = parse_prompt(example().x, *vocab());
  Candidate c = greedy_decode(p, ctx, 4);
  ASSERT_FALSE(c.tokens.empty());
  for (TokenId t : c.tokens) EXPECT_EQ(t, lo);
  EXPECT_EQ(c.length(), 4u);  // no end token, stopped by the cap
}

TEST(Greedy, ArgmaxIgnoresTemperature) {
  Rng rng(4);
  for (int n = 0; n < 200; ++n) {
    std::vector<double> z(30);
    for (double& x : z) x = rng.normal() * 3;
    std::vector<double> a = z, b = z;
    log_softmax(a, 0.3);
    log_softmax(b, 2.5);
    EXPECT_EQ(std::max_element(a.begin(), a.end()) - a.begin(), std::max_element(z.begin(), z.end()) - z.begin());
    EXPECT_EQ(std::max_element(b.begin(), b.end()) - b.begin(), std::max_element(z.begin(), z.end()) - z.begin());
  }
}

TEST(Checkpoint, RoundTripAndErrors) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "webrl_ckpt_test";
  fs::create_directories(dir);
  const std::string path = (dir / "p.ckpt").string();
  save_checkpoint(warm_policy(), path);
  PolicyParams q = load_checkpoint(path);
  EXPECT_EQ(q.theta, warm_policy().theta);
  EXPECT_EQ(q.rows, warm_policy().rows);
  EXPECT_EQ(q.version, warm_policy().version);
  EXPECT_EQ(q.vocab->tokens(), vocab()->tokens());

  try {
    load_checkpoint((dir / "missing.ckpt").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
  {
    std::ofstream out(dir / "bad.ckpt", std::ios::binary);
    out << "not a checkpoint";
  }
  EXPECT_THROW(load_checkpoint((dir / "bad.ckpt").string()), Error);
  fs::resize_file(path, fs::file_size(path) - 8);
  EXPECT_THROW(load_checkpoint(path), Error);
  fs::remove_all(dir);
}
