#include "webrl/trainer.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

#include "webrl/util.hpp"

namespace webrl {

std::string_view to_string(Algorithm a) { return a == Algorithm::kGrpo ? "grpo" : "ppo"; }

Algorithm algorithm_from_string(std::string_view s) {
  if (s == "grpo") return Algorithm::kGrpo;
  if (s == "ppo") return Algorithm::kPpo;
  throw Error(ErrorCode::kInvalidConfig, "unknown algorithm '" + std::string(s) + "'");
}

void TrainerConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidConfig, m); };
  if (algorithm == Algorithm::kGrpo && group_size < 2) fail("group size must be at least 2 for grpo");
  if (!(clip_eps > 0 && clip_eps < 1)) fail("clip epsilon must lie in (0, 1)");
  if (!(kl_beta >= 0)) fail("kl beta must be non-negative");
  if (!(lr >= 0) || !(lr_scale > 0)) fail("learning rate must be non-negative and its scale positive");
  if (batch_size < 1) fail("batch size must be positive");
  if (!(temperature > 0)) fail("temperature must be positive");
  if (steps < 0) fail("steps must be non-negative");
  if (workers < 1) fail("workers must be positive");
}

nlohmann::json to_json(const TrainerConfig& c) {
  return {{"algorithm", to_string(c.algorithm)},
          {"group_size", c.group_size},
          {"clip_eps", c.clip_eps},
          {"kl_beta", c.kl_beta},
          {"lr", c.lr},
          {"lr_scale", c.lr_scale},
          {"effective_lr", c.effective_lr()},
          {"value_lr", c.value_lr},
          {"batch_size", c.batch_size},
          {"temperature", c.temperature},
          {"scheme", to_string(c.scheme.kind)},
          {"steps", c.steps},
          {"eval_every", c.eval_every},
          {"seed", c.seed},
          {"workers", c.workers}};
}

void SftConfig::validate() const {
  if (epochs < 0) throw Error(ErrorCode::kInvalidConfig, "epochs must be non-negative");
  if (batch_size < 1) throw Error(ErrorCode::kInvalidConfig, "batch size must be positive");
  if (!(lr >= 0) || !(lr_scale > 0)) throw Error(ErrorCode::kInvalidConfig, "invalid SFT learning rate");
}

nlohmann::json to_json(const SftConfig& c) {
  return {{"samples", c.samples},   {"epochs", c.epochs},     {"batch_size", c.batch_size},
          {"lr", c.lr},             {"lr_scale", c.lr_scale}, {"effective_lr", c.effective_lr()},
          {"seed", c.seed}};
}

SftResult run_sft(PolicyParams init, const std::vector<SftExample>& corpus, const SftConfig& cfg) {
  cfg.validate();
  SftResult res{std::move(init), {}, 0};
  if (corpus.empty() || cfg.epochs == 0) return res;
  std::vector<SftItem> items;
  for (std::size_t i : select_subset(corpus.size(), cfg.samples, cfg.seed)) items.push_back(make_sft_item(res.params, corpus[i]));
  res.used_samples = items.size();
  std::vector<std::size_t> order(items.size());
  for (int e = 0; e < cfg.epochs; ++e) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mix64(cfg.seed, 0x5F70 + static_cast<std::uint64_t>(e)));
    rng.shuffle(order);
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
      std::vector<const SftItem*> batch;
      for (std::size_t k = b; k < std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size)); ++k) {
        batch.push_back(&items[order[k]]);
      }
      res.losses.push_back(sft_step(res.params, batch, cfg.effective_lr()));
    }
  }
  return res;
}

GroupStats compute_advantages(const std::vector<double>& rewards) {
  GroupStats g;
  g.rewards = rewards;
  const double n = static_cast<double>(rewards.size());
  if (rewards.empty()) return g;
  // Identical rewards: the rounded mean can miss them by an ulp, which the
  // 1e-8 denominator would blow up to a spurious nonzero advantage.
  if (std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards.front(); })) {
    g.mean = rewards.front();
    g.advantages.assign(rewards.size(), 0.0);
    return g;
  }
  for (double r : rewards) g.mean += r;
  g.mean /= n;
  double var = 0;
  for (double r : rewards) var += (r - g.mean) * (r - g.mean);
  g.std = std::sqrt(var / n);
  g.advantages.reserve(rewards.size());
  for (double r : rewards) g.advantages.push_back((r - g.mean) / (g.std + 1e-8));
  return g;
}

SurrogateStats surrogate_objective(const PolicyParams& p, const PolicyParams& ref,
                                   const std::vector<RolloutGroup>& groups, double clip_eps, double kl_beta,
                                   std::vector<double>* grad) {
  SurrogateStats st;
  if (groups.empty()) return st;
  const double batch_w = 1.0 / static_cast<double>(groups.size());
  std::vector<double> lp, lq, dz;
  std::size_t tokens = 0, clipped = 0;
  for (const auto& g : groups) {
    if (g.candidates.empty()) continue;
    const double group_w = batch_w / static_cast<double>(g.candidates.size());
    for (const auto& c : g.candidates) {
      const std::size_t n = c.trace.tokens.size();
      if (n == 0) continue;
      const double w = group_w / static_cast<double>(n);
      const double a = c.advantage;
      for (std::size_t t = 0; t < n; ++t) {
        const StepFeatures& f = c.trace.steps[t];
        const TokenId tok = c.trace.tokens[t];
        logits(p, f, lp);
        log_softmax(lp);
        const double r = std::exp(lp[tok] - c.old_logprobs[t]);
        const double unclipped = r * a;
        const double clip_term = std::clamp(r, 1.0 - clip_eps, 1.0 + clip_eps) * a;
        const bool active = unclipped <= clip_term;
        double kl = 0;
        if (kl_beta > 0) {
          logits(ref, f, lq);
          log_softmax(lq);
          for (std::size_t k = 0; k < lp.size(); ++k) kl += std::exp(lp[k]) * (lp[k] - lq[k]);
        }
        st.objective += w * (std::min(unclipped, clip_term) - kl_beta * kl);
        st.kl += kl;
        ++tokens;
        if (!active) ++clipped;
        if (!grad) continue;
        dz.assign(lp.size(), 0.0);
        for (std::size_t k = 0; k < lp.size(); ++k) {
          const double pk = std::exp(lp[k]);
          double d = active ? -a * r * pk : 0.0;
          if (kl_beta > 0) d -= kl_beta * pk * (lp[k] - lq[k] - kl);
          dz[k] = d;
        }
        if (active) dz[tok] += a * r;
        accumulate_logit_grad(p, f, dz, w, *grad);
      }
    }
  }
  if (tokens) {
    st.kl /= static_cast<double>(tokens);
    st.clip_frac = static_cast<double>(clipped) / static_cast<double>(tokens);
  }
  return st;
}

nlohmann::json to_json(const MetricsRow& m) {
  nlohmann::json j = {{"step", m.step},         {"avg_reward", m.avg_reward}, {"avg_len", m.avg_len},
                      {"val_sr", nullptr},      {"kl", m.kl},                 {"clip_frac", m.clip_frac},
                      {"modal_frac", m.modal_frac}, {"value_loss", m.value_loss}};
  if (m.val_sr) j["val_sr"] = *m.val_sr;
  return j;
}

MetricsRow metrics_row_from_json(const nlohmann::json& j) {
  try {
    MetricsRow m;
    m.step = j.at("step").get<int>();
    m.avg_reward = j.at("avg_reward").get<double>();
    m.avg_len = j.at("avg_len").get<double>();
    if (j.contains("val_sr") && !j["val_sr"].is_null()) m.val_sr = j["val_sr"].get<double>();
    m.kl = j.value("kl", 0.0);
    m.clip_frac = j.value("clip_frac", 0.0);
    m.modal_frac = j.value("modal_frac", 0.0);
    m.value_loss = j.value("value_loss", 0.0);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("malformed metrics record: ") + e.what());
  }
}

std::vector<std::uint32_t> ValueHead::features(const PromptContext& ctx) const {
  const std::uint64_t cat = fnv1a64(ctx.goal_first);
  const std::uint64_t hist = std::min<std::size_t>(ctx.history.size(), 7);
  const std::uint64_t last = ctx.history.empty() ? 0 : fnv1a64(ctx.history.back().name);
  const std::uint64_t pending = std::min(ctx.pending_quoted, 3);
  std::vector<std::uint32_t> f;
  for (std::uint64_t h : {mix64(1, 0), mix64(2, cat), mix64(mix64(3, cat), hist), mix64(mix64(4, cat), last),
                          mix64(mix64(5, cat), pending), mix64(6, hist)}) {
    f.push_back(static_cast<std::uint32_t>(h % kDims));
  }
  return f;
}

double ValueHead::predict(const PromptContext& ctx) const {
  double v = 0;
  for (auto i : features(ctx)) v += w[i];
  return v;
}

std::vector<TrainSample> make_train_samples(const PolicyParams& p, const std::vector<StepSample>& samples,
                                            const ActionSpace& space) {
  std::vector<TrainSample> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out[i].ctx = parse_prompt(render_prompt(prompt_for(samples[i], space)), *p.vocab);
    out[i].label = samples[i].label;
    out[i].id = i;
  }
  return out;
}

std::vector<RolloutGroup> rollout(const PolicyParams& p, const std::vector<const TrainSample*>& batch,
                                  const TrainerConfig& cfg, int step, const ActionSpace& space) {
  const int g = cfg.algorithm == Algorithm::kGrpo ? cfg.group_size : 1;
  std::vector<RolloutGroup> groups(batch.size());
  parallel_for(batch.size(), cfg.workers, [&](std::size_t b) {
    const TrainSample& s = *batch[b];
    RolloutGroup& grp = groups[b];
    grp.ctx = &s.ctx;
    grp.candidates.resize(static_cast<std::size_t>(g));
    for (int i = 0; i < g; ++i) {
      RolloutCandidate& rc = grp.candidates[static_cast<std::size_t>(i)];
      const std::uint64_t seed = mix64(mix64(mix64(cfg.seed, static_cast<std::uint64_t>(step)), s.id), i);
      Candidate c = sample(p, s.ctx, cfg.temperature, seed, &rc.trace);
      rc.old_logprobs = std::move(c.token_logprobs);
      rc.text = std::move(c.text);
      rc.reward = grade(rc.text, s.label, space, cfg.scheme);
    }
  });
  return groups;
}

namespace {

void fill_rollout_metrics(const std::vector<RolloutGroup>& groups, MetricsRow& m) {
  std::size_t n = 0;
  std::map<std::string, int> counts;
  for (const auto& g : groups) {
    for (const auto& c : g.candidates) {
      m.avg_reward += c.reward.total;
      m.avg_len += static_cast<double>(c.trace.tokens.size());
      ++counts[trim_copy(parse_response(c.text).action_text)];
      ++n;
    }
  }
  if (n == 0) return;
  m.avg_reward /= static_cast<double>(n);
  m.avg_len /= static_cast<double>(n);
  int top = 0;
  for (const auto& [k, v] : counts) top = std::max(top, v);
  m.modal_frac = static_cast<double>(top) / static_cast<double>(n);
}

void apply_update(PolicyParams& p, const std::vector<double>& grad, double objective, double lr, int step) {
  if (!std::isfinite(objective) || !all_finite(grad)) {
    throw Error(ErrorCode::kNonFiniteGradient, "non-finite policy gradient at step " + std::to_string(step));
  }
  for (std::size_t i = 0; i < grad.size(); ++i) p.theta[i] += lr * grad[i];
  ++p.version;
}

}  // namespace

MetricsRow grpo_step(PolicyParams& p, const PolicyParams& ref, const std::vector<const TrainSample*>& batch,
                     const TrainerConfig& cfg, int step, const ActionSpace& space) {
  if (cfg.algorithm != Algorithm::kGrpo) throw Error(ErrorCode::kInvalidConfig, "grpo_step needs algorithm grpo");
  auto groups = rollout(p, batch, cfg, step, space);
  for (auto& g : groups) {
    std::vector<double> rewards;
    for (const auto& c : g.candidates) rewards.push_back(c.reward.total);
    GroupStats gs = compute_advantages(rewards);
    for (std::size_t i = 0; i < g.candidates.size(); ++i) g.candidates[i].advantage = gs.advantages[i];
  }
  MetricsRow m;
  m.step = step;
  fill_rollout_metrics(groups, m);
  std::vector<double> grad(p.theta.size(), 0.0);
  SurrogateStats st = surrogate_objective(p, ref, groups, cfg.clip_eps, cfg.kl_beta, &grad);
  apply_update(p, grad, st.objective, cfg.effective_lr(), step);
  m.kl = st.kl;
  m.clip_frac = st.clip_frac;
  return m;
}

MetricsRow ppo_step(PolicyParams& p, ValueHead& value, const PolicyParams& ref,
                    const std::vector<const TrainSample*>& batch, const TrainerConfig& cfg, int step,
                    const ActionSpace& space) {
  if (cfg.algorithm != Algorithm::kPpo) throw Error(ErrorCode::kInvalidConfig, "ppo_step needs algorithm ppo");
  auto groups = rollout(p, batch, cfg, step, space);
  MetricsRow m;
  m.step = step;
  std::vector<double> vgrad(ValueHead::kDims, 0.0);
  const double inv_b = 1.0 / static_cast<double>(groups.size());
  for (auto& g : groups) {
    const double v = value.predict(*g.ctx);
    for (auto& c : g.candidates) {
      const double err = c.reward.total - v;
      c.advantage = err;
      m.value_loss += err * err * inv_b;
      for (auto i : value.features(*g.ctx)) vgrad[i] += -2.0 * err * inv_b;
    }
  }
  fill_rollout_metrics(groups, m);
  std::vector<double> grad(p.theta.size(), 0.0);
  SurrogateStats st = surrogate_objective(p, ref, groups, cfg.clip_eps, cfg.kl_beta, &grad);
  if (!all_finite(vgrad)) throw Error(ErrorCode::kNonFiniteGradient, "non-finite value gradient at step " + std::to_string(step));
  apply_update(p, grad, st.objective, cfg.effective_lr(), step);
  for (std::size_t i = 0; i < vgrad.size(); ++i) value.w[i] -= cfg.value_lr * vgrad[i];
  m.kl = st.kl;
  m.clip_frac = st.clip_frac;
  return m;
}

TrainResult train(const TrainRun& run) {
  run.cfg.validate();
  if (run.dataset.empty()) throw Error(ErrorCode::kInvalidConfig, "training dataset is empty");
  if (!run.suite) throw Error(ErrorCode::kInvalidConfig, "training run needs a suite");
  const TrainerConfig& cfg = run.cfg;
  PolicyParams p;
  if (run.warm_start) {
    p = *run.warm_start;
  } else {
    if (!run.vocab) throw Error(ErrorCode::kInvalidConfig, "cold start needs a vocabulary");
    p = init_policy(run.vocab);
  }
  const PolicyParams ref = p;
  const auto samples = make_train_samples(p, run.dataset, run.suite->action_space);

  std::ofstream metrics_out;
  namespace fs = std::filesystem;
  if (!run.out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(run.out_dir, ec);
    metrics_out.open(fs::path(run.out_dir) / "metrics.jsonl", std::ios::binary | std::ios::trunc);
    if (!metrics_out) throw Error(ErrorCode::kIo, "cannot write metrics under '" + run.out_dir + "'");
    metrics_out << nlohmann::json{{"schema", "metrics"}, {"version", kDatasetSchemaVersion}}.dump() << '\n';
  }
  auto save = [&](const PolicyParams& q, const char* name) {
    if (!run.out_dir.empty()) save_checkpoint(q, (fs::path(run.out_dir) / name).string());
  };

  TrainResult res{p, p, {}};
  double best_sr = -1;
  EvalOptions val = run.validation;
  val.workers = cfg.workers;
  if (cfg.eval_every > 0) {
    best_sr = evaluate(p, *run.suite, val).overall;
    save(p, "best.ckpt");
  }

  ValueHead value;
  Rng order_rng(mix64(cfg.seed, 0xBA7C));
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  for (int step = 1; step <= cfg.steps; ++step) {
    std::vector<const TrainSample*> batch;
    while (static_cast<int>(batch.size()) < cfg.batch_size) {
      if (cursor == order.size()) {
        order.resize(samples.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        order_rng.shuffle(order);
        cursor = 0;
      }
      batch.push_back(&samples[order[cursor++]]);
    }
    MetricsRow m;
    try {
      m = cfg.algorithm == Algorithm::kGrpo ? grpo_step(p, ref, batch, cfg, step, run.suite->action_space)
                                            : ppo_step(p, value, ref, batch, cfg, step, run.suite->action_space);
    } catch (const Error&) {
      save(p, "last.ckpt");
      throw;
    }
    if (cfg.eval_every > 0 && (step % cfg.eval_every == 0 || step == cfg.steps)) {
      m.val_sr = evaluate(p, *run.suite, val).overall;
      if (*m.val_sr > best_sr) {
        best_sr = *m.val_sr;
        res.best = p;
        save(p, "best.ckpt");
      }
    }
    if (metrics_out) metrics_out << to_json(m).dump() << '\n' << std::flush;
    if (run.on_step) run.on_step(m);
    res.metrics.push_back(m);
  }
  res.last = p;
  save(p, "last.ckpt");
  if (cfg.eval_every <= 0) {
    res.best = p;
    save(p, "best.ckpt");
  }
  return res;
}

}  // namespace webrl
