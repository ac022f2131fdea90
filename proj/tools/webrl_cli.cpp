// webrl: data generation, SFT warm-up, RL training, evaluation, grading and
// report rendering for the mini-workplace web-agent stack.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "webrl/dataprep.hpp"
#include "webrl/error.hpp"
#include "webrl/evalharness.hpp"
#include "webrl/policy.hpp"
#include "webrl/reward.hpp"
#include "webrl/suite.hpp"
#include "webrl/trainer.hpp"
#include "webrl/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace webrl;

namespace {

constexpr int kExitRuntime = 2;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create '" + dir.string() + "': " + ec.message());
}

// Written before any work starts so a crashed run still documents its inputs.
void write_manifest(const fs::path& dir, const std::string& command, json body) {
  body["command"] = command;
  body["tool_version"] = WEBRL_VERSION;
  write_text(dir / "manifest.json", body.dump(2) + "\n");
}

template <typename T>
std::vector<json> to_records(const std::vector<T>& v) {
  std::vector<json> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(to_json(x));
  return out;
}

std::vector<SftExample> read_sft(const fs::path& path) {
  std::vector<SftExample> out;
  for (const auto& j : read_jsonl(path.string(), "sft_example")) out.push_back(sft_example_from_json(j));
  return out;
}

// ---- gen ----

struct GenArgs {
  std::string suite = WEBRL_DEFAULT_SUITE;
  std::string out;
  std::uint64_t seed = 0;
  int perturb_rounds = 4;
  std::string indexing = "include_initial";
  int workers = 1;
};

StepIndexing indexing_from_string(const std::string& s) {
  if (s == "include_initial") return StepIndexing::kIncludeInitial;
  if (s == "skip_initial") return StepIndexing::kSkipInitial;
  throw Error(ErrorCode::kInvalidConfig, "unknown step indexing '" + s + "'");
}

int cmd_gen(const GenArgs& a) {
  const fs::path out = a.out;
  ensure_dir(out);
  write_manifest(out, "gen",
                 {{"suite", a.suite}, {"seed", a.seed}, {"perturb_rounds", a.perturb_rounds}, {"indexing", a.indexing},
                  {"workers", a.workers}});
  const TaskSuite suite = load_suite(a.suite);
  const Dataset d = generate_dataset(suite, a.seed, a.perturb_rounds, indexing_from_string(a.indexing), a.workers);

  write_jsonl((out / "trajectories.jsonl").string(), "trajectory", to_records(d.base));
  write_jsonl((out / "perturbed.jsonl").string(), "trajectory", to_records(d.perturbed));
  write_jsonl((out / "samples.jsonl").string(), "step_sample", to_records(d.samples));
  write_jsonl((out / "sft.jsonl").string(), "sft_example", to_records(d.sft));
  write_text(out / "suite.json", suite_to_json(suite).dump(2) + "\n");

  json split = json::object();
  for (const auto& c : suite.categories) {
    split[std::string(to_string(c.type))] = {{"train", c.train_seeds}, {"test", c.test_seeds}};
  }
  write_text(out / "split.json", split.dump(2) + "\n");

  std::cout << "trajectories " << d.base.size() << " perturbed " << d.perturbed.size() << " samples "
            << d.samples.size() << " sft " << d.sft.size() << " dropped " << d.dropped << "\n";
  return 0;
}

// ---- sft ----

struct SftArgs {
  std::string data;
  std::string out;
  SftConfig cfg;
};

int cmd_sft(const SftArgs& a) {
  const fs::path out = a.out, data = a.data;
  ensure_dir(out);
  write_manifest(out, "sft",
                 {{"data", a.data},
                  {"suite", (data / "suite.json").string()},
                  {"config", to_json(a.cfg)},
                  {"checkpoint", (out / "policy.ckpt").string()}});
  a.cfg.validate();
  const TaskSuite suite = load_suite((data / "suite.json").string());
  const auto corpus = read_sft(data / "sft.jsonl");
  auto vocab = std::make_shared<const Vocab>(corpus_vocab(suite, corpus));
  SftResult r = run_sft(init_policy(vocab), corpus, a.cfg);

  std::vector<json> losses;
  for (std::size_t i = 0; i < r.losses.size(); ++i) losses.push_back({{"step", i + 1}, {"loss", r.losses[i]}});
  write_jsonl((out / "loss.jsonl").string(), "sft_loss", losses);
  save_checkpoint(r.params, (out / "policy.ckpt").string());

  std::cout << "samples " << r.used_samples << " steps " << r.losses.size();
  if (!r.losses.empty()) std::cout << " loss " << r.losses.front() << " -> " << r.losses.back();
  std::cout << "\n";
  return 0;
}

// ---- train ----

struct TrainArgs {
  std::string data;
  std::string checkpoint;
  std::string out;
  std::string algo = "grpo";
  std::string scheme = "sparse";
  std::string val_split = "test";
  TrainerConfig cfg;
};

int cmd_train(TrainArgs a) {
  const fs::path out = a.out, data = a.data;
  a.cfg.algorithm = algorithm_from_string(a.algo);
  a.cfg.scheme = scheme_from_string(a.scheme);
  ensure_dir(out);
  write_manifest(out, "train",
                 {{"data", a.data},
                  {"suite", (data / "suite.json").string()},
                  {"warm_start", a.checkpoint.empty() ? json(nullptr) : json(a.checkpoint)},
                  {"config", to_json(a.cfg)},
                  {"validation_split", a.val_split},
                  {"checkpoints", {(out / "last.ckpt").string(), (out / "best.ckpt").string()}}});
  a.cfg.validate();

  const TaskSuite suite = load_suite((data / "suite.json").string());
  TrainRun run;
  run.suite = &suite;
  run.dataset = read_step_samples((data / "samples.jsonl").string());
  run.cfg = a.cfg;
  if (!a.checkpoint.empty()) {
    run.warm_start = load_checkpoint(a.checkpoint);
  } else {
    run.vocab = std::make_shared<const Vocab>(corpus_vocab(suite, read_sft(data / "sft.jsonl")));
  }
  run.out_dir = a.out;
  run.validation.split = split_from_string(a.val_split);
  run.on_step = [](const MetricsRow& m) {
    if (m.step % 10 == 0 || m.val_sr) {
      std::cout << "step " << m.step << " reward " << m.avg_reward << " len " << m.avg_len;
      if (m.val_sr) std::cout << " val_sr " << *m.val_sr;
      std::cout << "\n" << std::flush;
    }
  };
  train(run);
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::string checkpoint;
  std::string suite = WEBRL_DEFAULT_SUITE;
  std::string split = "test";
  std::string format = "csv";
  std::string baseline;
  std::string out;
  std::string name;
  int episodes = 1;
  int max_steps = 0;
  int workers = 1;
};

int cmd_eval(const EvalArgs& a) {
  const ReportFormat fmt = report_format_from_string(a.format);
  const PolicyParams p = load_checkpoint(a.checkpoint);
  const TaskSuite suite = load_suite(a.suite);
  EvalOptions opt;
  opt.split = split_from_string(a.split);
  opt.episodes_per_config = a.episodes;
  opt.max_steps = a.max_steps;
  opt.workers = a.workers;
  const std::string name = a.name.empty() ? fs::path(a.checkpoint).stem().string() : a.name;
  const EvalReport r = evaluate(p, suite, opt, name);

  // Reports land beside the checkpoint unless --out says otherwise.
  fs::path json_path = a.out.empty() ? fs::path(fs::path(a.checkpoint).replace_extension("").string() + "_" + a.split + ".json")
                                     : fs::path(a.out);
  save_report(r, json_path.string());

  std::optional<EvalReport> base;
  if (!a.baseline.empty()) base = load_report(a.baseline);
  const std::string table = render_report({r}, fmt, base ? &*base : nullptr);
  fs::path table_path = json_path;
  table_path.replace_extension(fmt == ReportFormat::kCsv ? ".csv" : ".md");
  write_text(table_path, table);
  std::cout << table;
  return 0;
}

// ---- grade ----

struct GradeArgs {
  std::string response;
  std::string gt;
  std::string scheme = "sparse";
  std::string in;
  std::string out;
};

json breakdown_json(const RewardBreakdown& b) {
  return {{"r_format", b.r_format}, {"r_success", b.r_success}, {"r_penalty", b.r_penalty}, {"total", b.total}};
}

// Lines of {"response", "gt_action", "scheme"?, "task_id"?}; one output record
// per input line in the same order, failures become {"index", "error"} records.
// task_id is echoed back when present.
std::vector<json> grade_lines(std::istream& in, const std::string& default_scheme, const ActionSpace& space) {
  std::vector<json> out;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (trim_copy(line).empty()) continue;
    json rec{{"index", index++}};
    try {
      const json req = json::parse(line);
      if (req.is_object() && req.contains("task_id")) rec["task_id"] = req["task_id"];
      const Action gt = parse_action(req.at("gt_action").get<std::string>(), space);
      const RewardScheme scheme = scheme_from_string(req.value("scheme", default_scheme));
      rec.update(breakdown_json(grade(req.at("response").get<std::string>(), gt, space, scheme)));
    } catch (const Error& e) {
      rec["error"] = e.what();
    } catch (const json::exception& e) {
      rec["error"] = std::string("InvalidConfig: malformed request: ") + e.what();
    }
    out.push_back(std::move(rec));
  }
  return out;
}

int cmd_grade(const GradeArgs& a) {
  const ActionSpace space = ActionSpace::standard();
  if (a.in.empty()) {
    const RewardBreakdown b = grade(a.response, parse_action(a.gt, space), space, scheme_from_string(a.scheme));
    std::cout << breakdown_json(b).dump() << "\n";
    return 0;
  }
  std::vector<json> recs;
  if (a.in == "-") {
    recs = grade_lines(std::cin, a.scheme, space);
  } else {
    std::ifstream in(a.in, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot read '" + a.in + "'");
    recs = grade_lines(in, a.scheme, space);
  }
  std::string text;
  for (const auto& r : recs) text += r.dump() + "\n";
  if (a.out.empty() || a.out == "-") {
    std::cout << text;
  } else {
    write_text(a.out, text);
  }
  return 0;
}

// ---- report ----

struct ReportArgs {
  std::string metrics;
  std::vector<std::string> reports;
  std::string baseline;
  std::string format = "csv";
  std::string out;
};

std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string metrics_csv(const std::string& path) {
  std::string csv = "step,avg_reward,avg_len,val_sr,kl,clip_frac,modal_frac,value_loss\n";
  for (const auto& j : read_jsonl(path, "metrics")) {
    const MetricsRow m = metrics_row_from_json(j);
    csv += std::to_string(m.step) + "," + fmt_num(m.avg_reward) + "," + fmt_num(m.avg_len) + "," +
           (m.val_sr ? fmt_num(*m.val_sr) : "") + "," + fmt_num(m.kl) + "," + fmt_num(m.clip_frac) + "," +
           fmt_num(m.modal_frac) + "," + fmt_num(m.value_loss) + "\n";
  }
  return csv;
}

int cmd_report(const ReportArgs& a) {
  std::string text;
  if (!a.metrics.empty()) {
    text = metrics_csv(a.metrics);
  } else {
    std::vector<EvalReport> rs;
    for (const auto& p : a.reports) rs.push_back(load_report(p));
    std::optional<EvalReport> base;
    if (!a.baseline.empty()) base = load_report(a.baseline);
    text = render_report(rs, report_format_from_string(a.format), base ? &*base : nullptr);
  }
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_text(a.out, text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"webrl: web-agent RL on a simulated workplace suite"};
  app.set_version_flag("--version", WEBRL_VERSION);
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate oracle trajectories, step samples and the SFT corpus");
  g->add_option("--suite", gen.suite, "Task-suite file")->capture_default_str();
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--seed", gen.seed, "Perturbation seed")->capture_default_str();
  g->add_option("--perturb-rounds", gen.perturb_rounds, "Resampled copies of the train configs")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  g->add_option("--indexing", gen.indexing, "Step indexing")
      ->check(CLI::IsMember({"include_initial", "skip_initial"}))
      ->capture_default_str();
  g->add_option("--workers", gen.workers)->check(CLI::PositiveNumber)->capture_default_str();

  SftArgs sft;
  auto* s = app.add_subcommand("sft", "Behavior-cloning warm-up on the SFT corpus");
  s->add_option("--data", sft.data, "Directory written by gen")->required();
  s->add_option("--out", sft.out, "Output directory")->required();
  s->add_option("--samples", sft.cfg.samples)->capture_default_str();
  s->add_option("--epochs", sft.cfg.epochs)->check(CLI::NonNegativeNumber)->capture_default_str();
  s->add_option("--batch", sft.cfg.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--lr", sft.cfg.lr)->capture_default_str();
  s->add_option("--lr-scale", sft.cfg.lr_scale, "Multiplier applied to --lr")->capture_default_str();
  s->add_option("--seed", sft.cfg.seed)->capture_default_str();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "GRPO or PPO over single-step samples");
  t->add_option("--data", tr.data, "Directory written by gen")->required();
  t->add_option("--checkpoint", tr.checkpoint, "Warm-start checkpoint; omit for a cold start");
  t->add_option("--out", tr.out, "Output directory")->required();
  t->add_option("--algo", tr.algo)->check(CLI::IsMember({"grpo", "ppo"}))->capture_default_str();
  t->add_option("--scheme", tr.scheme)
      ->check(CLI::IsMember({"sparse", "fully_dense", "piecewise_dense"}))
      ->capture_default_str();
  t->add_option("--group-size", tr.cfg.group_size)->capture_default_str();
  t->add_option("--eps", tr.cfg.clip_eps)->capture_default_str();
  t->add_option("--beta", tr.cfg.kl_beta)->capture_default_str();
  t->add_option("--temp", tr.cfg.temperature)->capture_default_str();
  t->add_option("--lr", tr.cfg.lr)->capture_default_str();
  t->add_option("--lr-scale", tr.cfg.lr_scale, "Multiplier applied to --lr")->capture_default_str();
  t->add_option("--value-lr", tr.cfg.value_lr)->capture_default_str();
  t->add_option("--batch", tr.cfg.batch_size)->capture_default_str();
  t->add_option("--steps", tr.cfg.steps)->capture_default_str();
  t->add_option("--eval-every", tr.cfg.eval_every, "Validation period in steps; 0 disables")->capture_default_str();
  t->add_option("--val-split", tr.val_split)->check(CLI::IsMember({"train", "test"}))->capture_default_str();
  t->add_option("--seed", tr.cfg.seed)->capture_default_str();
  t->add_option("--workers", tr.cfg.workers)->check(CLI::PositiveNumber)->capture_default_str();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Success rates of a checkpoint on a suite split");
  e->add_option("--checkpoint", ev.checkpoint)->required();
  e->add_option("--suite", ev.suite)->capture_default_str();
  e->add_option("--split", ev.split)->check(CLI::IsMember({"train", "test"}))->capture_default_str();
  e->add_option("--format", ev.format, "csv or markdown")->capture_default_str();
  e->add_option("--baseline", ev.baseline, "Report JSON used for the delta column");
  e->add_option("--out", ev.out, "Report JSON path (default: beside the checkpoint)");
  e->add_option("--name", ev.name, "Row label (default: checkpoint stem)");
  e->add_option("--episodes", ev.episodes)->check(CLI::PositiveNumber)->capture_default_str();
  e->add_option("--max-steps", ev.max_steps, "0: twice the oracle length")->capture_default_str();
  e->add_option("--workers", ev.workers)->check(CLI::PositiveNumber)->capture_default_str();

  GradeArgs gr;
  auto* d = app.add_subcommand("grade", "Grade responses against ground-truth actions");
  d->add_option("--response", gr.response, "Single response text");
  d->add_option("--gt", gr.gt, "Ground-truth action, e.g. click('a12')");
  d->add_option("--scheme", gr.scheme, "Default scheme")->capture_default_str();
  auto* in_opt = d->add_option("--in", gr.in, "JSONL requests ('-' for stdin)");
  d->add_option("--out", gr.out, "JSONL results (default stdout)");
  d->get_option("--gt")->excludes(in_opt);
  d->get_option("--response")->excludes(in_opt);

  ReportArgs rp;
  auto* r = app.add_subcommand("report", "Metrics curves as CSV, or a comparison of eval reports");
  auto* m_opt = r->add_option("--metrics", rp.metrics, "metrics.jsonl from train");
  auto* r_opt = r->add_option("--reports", rp.reports, "Report JSON files");
  m_opt->excludes(r_opt);
  r->add_option("--baseline", rp.baseline);
  r->add_option("--format", rp.format)->capture_default_str();
  r->add_option("--out", rp.out);

  std::string suite_out;
  auto* su = app.add_subcommand("suite", "Write the bundled default suite");
  su->add_option("--out", suite_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? 0 : 1;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*s) return cmd_sft(sft);
    if (*t) return cmd_train(tr);
    if (*e) return cmd_eval(ev);
    if (*d) {
      if (gr.in.empty() && gr.gt.empty()) {
        std::cerr << "grade: give --gt/--response or --in\n";
        return 1;
      }
      return cmd_grade(gr);
    }
    if (*r) {
      if (rp.metrics.empty() && rp.reports.empty()) {
        std::cerr << "report: give --metrics or --reports\n";
        return 1;
      }
      return cmd_report(rp);
    }
    if (*su) {
      write_text(suite_out, suite_to_json(default_suite()).dump(2) + "\n");
      return 0;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitRuntime;
  }
  return 1;
}
