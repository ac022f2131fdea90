#include "webrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "webrl/util.hpp"

namespace webrl {

namespace {

constexpr char kCheckpointMagic[8] = {'W', 'E', 'B', 'R', 'L', 'C', 'K', '1'};
constexpr int kCheckpointVersion = 1;

}  // namespace

PolicyParams init_policy(std::shared_ptr<const Vocab> vocab, std::size_t rows, std::size_t rel_rows) {
  PolicyParams p;
  const std::size_t v = vocab->size();
  const std::size_t fixed = (kNumStates + rel_rows) * kNumRelations;
  if (rows == 0) rows = std::min<std::size_t>(4096, (kMaxParameters - fixed) / v);
  if (rows == 0 || rel_rows == 0 || rows * v + fixed > kMaxParameters) {
    throw Error(ErrorCode::kInvalidConfig, "policy dimensions exceed the parameter budget");
  }
  p.vocab = std::move(vocab);
  p.rows = rows;
  p.rel_rows = rel_rows;
  p.theta.assign(rows * v + fixed, 0.0);
  return p;
}

Vocab corpus_vocab(const TaskSuite& suite, const std::vector<SftExample>& corpus) {
  std::set<std::string> words;
  for (const auto& w : suite_lexicon(suite)) words.insert(w);
  for (const char* w : {"goal", "target", "op", "value", "page"}) words.insert(w);
  for (TaskType t : kAllTaskTypes) words.insert(std::string(to_string(t)));
  for (const auto& spec : suite.action_space.specs()) words.insert(spec.name);
  for (int i = 0; i < 100; ++i) words.insert(std::to_string(i));
  for (const auto& e : corpus) {
    ParsedResponse r = parse_response(e.y);
    for (auto& w : split_words(r.reasoning)) words.insert(w);
    if (auto a = try_parse_action(r.action_text, suite.action_space)) {
      for (const auto& prm : a->params) {
        if (is_element_id(prm)) continue;
        for (auto& w : split_words(prm)) words.insert(w);
      }
    }
  }
  words.erase(".");
  return Vocab::build({words.begin(), words.end()});
}

double Candidate::logprob() const {
  double s = 0;
  for (double lp : token_logprobs) s += lp;
  return s;
}

Trace trace_tokens(const PolicyParams& p, const PromptContext& ctx, const std::vector<TokenId>& tokens) {
  Trace t;
  t.tokens = tokens;
  t.steps.reserve(tokens.size());
  FeatureCursor cur(ctx, *p.vocab, p.rows, p.rel_rows);
  for (TokenId id : tokens) {
    t.steps.push_back(cur.features());
    cur.push(id);
  }
  return t;
}

void logits(const PolicyParams& p, const StepFeatures& f, std::vector<double>& z) {
  const std::size_t v = p.vocab_size();
  z.assign(v, 0.0);
  for (std::uint32_t row : f.rows) {
    const double* w = p.theta.data() + p.w_index(row, 0);
    for (std::size_t i = 0; i < v; ++i) z[i] += w[i];
  }
  for (const auto& [tok, mask] : f.rel) {
    for (int r = 0; r < kNumRelations; ++r) {
      if (mask & (1u << r)) z[tok] += p.theta[p.u_index(f.state, r)] + p.theta[p.h_index(f.rel_row, r)];
    }
  }
}

void log_softmax(std::vector<double>& z, double temperature) {
  double mx = -INFINITY;
  for (double& x : z) {
    x /= temperature;
    mx = std::max(mx, x);
  }
  double sum = 0;
  for (double x : z) sum += std::exp(x - mx);
  const double lse = mx + std::log(sum);
  for (double& x : z) x -= lse;
}

void accumulate_logit_grad(const PolicyParams& p, const StepFeatures& f, const std::vector<double>& dz, double coeff,
                           std::vector<double>& grad) {
  const std::size_t v = p.vocab_size();
  for (std::uint32_t row : f.rows) {
    double* g = grad.data() + p.w_index(row, 0);
    for (std::size_t i = 0; i < v; ++i) g[i] += coeff * dz[i];
  }
  for (const auto& [tok, mask] : f.rel) {
    for (int r = 0; r < kNumRelations; ++r) {
      if (!(mask & (1u << r))) continue;
      grad[p.u_index(f.state, r)] += coeff * dz[tok];
      grad[p.h_index(f.rel_row, r)] += coeff * dz[tok];
    }
  }
}

double sequence_logprob(const PolicyParams& p, const Trace& trace, std::vector<double>* per_token) {
  std::vector<double> z;
  double total = 0;
  if (per_token) per_token->clear();
  for (std::size_t i = 0; i < trace.tokens.size(); ++i) {
    logits(p, trace.steps[i], z);
    log_softmax(z);
    total += z[trace.tokens[i]];
    if (per_token) per_token->push_back(z[trace.tokens[i]]);
  }
  return total;
}

double logprob(const PolicyParams& p, std::string_view prompt, std::string_view response) {
  auto tokens = p.vocab->tokenize(response);
  PromptContext ctx = parse_prompt(prompt, *p.vocab);
  return sequence_logprob(p, trace_tokens(p, ctx, tokens));
}

std::vector<double> next_token_distribution(const PolicyParams& p, std::string_view prompt,
                                            const std::vector<TokenId>& prefix) {
  PromptContext ctx = parse_prompt(prompt, *p.vocab);
  FeatureCursor cur(ctx, *p.vocab, p.rows, p.rel_rows);
  for (TokenId t : prefix) cur.push(t);
  std::vector<double> z;
  logits(p, cur.features(), z);
  log_softmax(z);
  for (double& x : z) x = std::exp(x);
  return z;
}

namespace {

template <typename Pick>
Candidate decode(const PolicyParams& p, const PromptContext& ctx, std::size_t max_len, Trace* trace, Pick&& pick) {
  Candidate c;
  FeatureCursor cur(ctx, *p.vocab, p.rows, p.rel_rows);
  std::vector<double> z, lp;
  if (trace) {
    trace->tokens.clear();
    trace->steps.clear();
  }
  while (c.tokens.size() < max_len) {
    StepFeatures f = cur.features();
    logits(p, f, z);
    lp = z;
    log_softmax(lp);
    TokenId t = pick(z, lp);
    c.tokens.push_back(t);
    c.token_logprobs.push_back(lp[t]);
    if (trace) {
      trace->tokens.push_back(t);
      trace->steps.push_back(std::move(f));
    }
    if (t == Vocab::kEos) break;
    cur.push(t);
  }
  c.text = p.vocab->decode(c.tokens);
  return c;
}

}  // namespace

Candidate sample(const PolicyParams& p, const PromptContext& ctx, double temperature, std::uint64_t seed, Trace* trace,
                 std::size_t max_len) {
  if (!(temperature > 0)) throw Error(ErrorCode::kInvalidConfig, "sampling temperature must be positive");
  Rng rng(seed);
  std::vector<double> scaled;
  return decode(p, ctx, max_len, trace, [&](const std::vector<double>& z, const std::vector<double>&) {
    scaled = z;
    log_softmax(scaled, temperature);
    double u = rng.uniform(), acc = 0;
    for (std::size_t i = 0; i < scaled.size(); ++i) {
      acc += std::exp(scaled[i]);
      if (u < acc) return static_cast<TokenId>(i);
    }
    // Rounding left u above the total mass; take the last token with mass.
    for (std::size_t i = scaled.size(); i-- > 0;) {
      if (std::exp(scaled[i]) > 0) return static_cast<TokenId>(i);
    }
    return Vocab::kEos;
  });
}

Candidate sample(const PolicyParams& p, std::string_view prompt, double temperature, std::uint64_t seed) {
  PromptContext ctx = parse_prompt(prompt, *p.vocab);
  return sample(p, ctx, temperature, seed);
}

Candidate greedy_decode(const PolicyParams& p, const PromptContext& ctx, std::size_t max_len) {
  return decode(p, ctx, max_len, nullptr, [](const std::vector<double>& z, const std::vector<double>&) {
    return static_cast<TokenId>(std::max_element(z.begin(), z.end()) - z.begin());
  });
}

Candidate greedy_decode(const PolicyParams& p, std::string_view prompt) {
  PromptContext ctx = parse_prompt(prompt, *p.vocab);
  return greedy_decode(p, ctx);
}

SftItem make_sft_item(const PolicyParams& p, const SftExample& e) {
  auto tokens = p.vocab->tokenize(e.y);
  tokens.push_back(Vocab::kEos);
  PromptContext ctx = parse_prompt(e.x, *p.vocab);
  return SftItem{trace_tokens(p, ctx, tokens)};
}

double sft_loss(const PolicyParams& p, const std::vector<const SftItem*>& batch, std::vector<double>* grad) {
  if (batch.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  std::vector<double> z;
  double loss = 0;
  for (const SftItem* item : batch) {
    const Trace& tr = item->trace;
    for (std::size_t i = 0; i < tr.tokens.size(); ++i) {
      logits(p, tr.steps[i], z);
      log_softmax(z);
      loss -= z[tr.tokens[i]] * scale;
      if (!grad) continue;
      // d(-log p_y)/dz = p - onehot(y)
      for (double& x : z) x = std::exp(x);
      z[tr.tokens[i]] -= 1.0;
      accumulate_logit_grad(p, tr.steps[i], z, scale, *grad);
    }
  }
  return loss;
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double sft_step(PolicyParams& p, const std::vector<const SftItem*>& batch, double lr) {
  if (batch.empty()) throw Error(ErrorCode::kInvalidConfig, "empty SFT batch");
  std::vector<double> grad(p.theta.size(), 0.0);
  double loss = sft_loss(p, batch, &grad);
  if (!std::isfinite(loss) || !all_finite(grad)) {
    throw Error(ErrorCode::kNonFiniteGradient, "non-finite SFT gradient at update " + std::to_string(p.version));
  }
  if (lr != 0.0) {
    for (std::size_t i = 0; i < grad.size(); ++i) p.theta[i] -= lr * grad[i];
  }
  ++p.version;
  return loss;
}

void save_checkpoint(const PolicyParams& p, const std::string& path) {
  nlohmann::json header = {{"format_version", kCheckpointVersion},
                           {"vocab", p.vocab->tokens()},
                           {"rows", p.rows},
                           {"rel_rows", p.rel_rows},
                           {"states", kNumStates},
                           {"relations", static_cast<int>(kNumRelations)},
                           {"row_features", kNumRowFeatures},
                           {"params", p.theta.size()},
                           {"version", p.version}};
  std::string h = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write checkpoint '" + path + "'");
  std::uint64_t n = h.size();
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  out.write(reinterpret_cast<const char*>(p.theta.data()), static_cast<std::streamsize>(p.theta.size() * sizeof(double)));
  if (!out) throw Error(ErrorCode::kIo, "write failed for checkpoint '" + path + "'");
}

PolicyParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open checkpoint '" + path + "'");
  char magic[8];
  std::uint64_t n = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0 || n > (1u << 26)) {
    throw Error(ErrorCode::kInvalidConfig, "'" + path + "' is not a policy checkpoint");
  }
  std::string h(n, '\0');
  in.read(h.data(), static_cast<std::streamsize>(n));
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(h);
    if (header.at("format_version").get<int>() != kCheckpointVersion ||
        header.at("states").get<int>() != kNumStates || header.at("relations").get<int>() != kNumRelations ||
        header.at("row_features").get<int>() != kNumRowFeatures) {
      throw Error(ErrorCode::kInvalidConfig, "checkpoint '" + path + "' was written by an incompatible version");
    }
    auto vocab = std::make_shared<Vocab>(header.at("vocab").get<std::vector<std::string>>());
    PolicyParams p = init_policy(vocab, header.at("rows").get<std::size_t>(), header.at("rel_rows").get<std::size_t>());
    if (header.at("params").get<std::size_t>() != p.theta.size()) {
      throw Error(ErrorCode::kInvalidConfig, "checkpoint '" + path + "' has inconsistent dimensions");
    }
    p.version = header.at("version").get<std::uint64_t>();
    in.read(reinterpret_cast<char*>(p.theta.data()), static_cast<std::streamsize>(p.theta.size() * sizeof(double)));
    if (!in) throw Error(ErrorCode::kIo, "checkpoint '" + path + "' is truncated");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, "bad checkpoint header in '" + path + "': " + e.what());
  }
}

}  // namespace webrl
