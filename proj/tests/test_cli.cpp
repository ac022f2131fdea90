#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "webrl/evalharness.hpp"
#include "webrl/policy.hpp"
#include "webrl/reward.hpp"
#include "webrl/suite.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace webrl;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  static fs::path root;

  static void SetUpTestSuite() {
    root = fs::temp_directory_path() / ("webrl_cli_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    ASSERT_EQ(run("gen --out " + (root / "data").string()), 0);
  }
  static void TearDownTestSuite() { fs::remove_all(root); }

  // Exit status of `webrl <args>` with stdout captured to root/stdout.txt.
  static int run(const std::string& args, const std::string& stdin_file = "") {
    std::string cmd = std::string(WEBRL_CLI_PATH) + " " + args + " > " + (root / "stdout.txt").string() + " 2> " +
                      (root / "stderr.txt").string();
    if (!stdin_file.empty()) cmd += " < " + stdin_file;
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  }
  static std::string out() { return slurp(root / "stdout.txt"); }

  static fs::path write(const std::string& name, const std::string& text) {
    std::ofstream(root / name, std::ios::binary) << text;
    return root / name;
  }

  static std::vector<json> grade_batch(const std::string& text) {
    const fs::path in = write("grade_in.jsonl", text);
    EXPECT_EQ(run("grade --in " + in.string()), 0);
    std::vector<json> recs;
    for (const auto& l : lines_of(out())) recs.push_back(json::parse(l));
    return recs;
  }
};

fs::path Cli::root;

}  // namespace

TEST_F(Cli, GenWritesCorpusAndIsReproducible) {
  const fs::path a = root / "data";
  EXPECT_EQ(lines_of(slurp(a / "trajectories.jsonl")).size(), 1u + 70u);  // header line
  EXPECT_EQ(lines_of(slurp(a / "perturbed.jsonl")).size(), 1u + 280u);
  EXPECT_TRUE(fs::exists(a / "manifest.json"));
  EXPECT_TRUE(fs::exists(a / "split.json"));

  const fs::path b = root / "data_again";
  ASSERT_EQ(run("gen --workers 2 --out " + b.string()), 0);
  for (const char* f : {"trajectories.jsonl", "perturbed.jsonl", "samples.jsonl", "sft.jsonl", "suite.json", "split.json"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_EQ(json::parse(slurp(b / "manifest.json"))["workers"], 2);
}

TEST_F(Cli, LeakingSuiteIsARuntimeFailure) {
  json s = suite_to_json(default_suite());
  s["categories"][0]["test_seeds"].push_back(s["categories"][0]["train_seeds"][0]);
  const fs::path bad = write("leak.json", s.dump());
  EXPECT_EQ(run("gen --suite " + bad.string() + " --out " + (root / "leak").string()), 2);
  EXPECT_NE(slurp(root / "stderr.txt").find("Leakage"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("gen"), 1);
  EXPECT_EQ(run("grade"), 1);
  EXPECT_EQ(run("report"), 1);
  EXPECT_EQ(run("train --data x --out y --algo sac"), 1);
  EXPECT_EQ(run("--version"), 0);
}

TEST_F(Cli, SftZeroEpochsKeepsInitialization) {
  const fs::path o = root / "sft0";
  ASSERT_EQ(run("sft --data " + (root / "data").string() + " --out " + o.string() + " --epochs 0"), 0);
  PolicyParams p = load_checkpoint((o / "policy.ckpt").string());
  EXPECT_EQ(p.version, 0u);
  for (double t : p.theta) ASSERT_EQ(t, 0.0);
}

TEST_F(Cli, SftTrainEvalPipeline) {
  const std::string data = (root / "data").string();
  const fs::path s = root / "sft";
  ASSERT_EQ(run("sft --data " + data + " --out " + s.string()), 0);
  auto losses = lines_of(slurp(s / "loss.jsonl"));
  ASSERT_GT(losses.size(), 2u);
  EXPECT_LT(json::parse(losses.back())["loss"].get<double>(), json::parse(losses[1])["loss"].get<double>());

  const fs::path t = root / "rl";
  ASSERT_EQ(run("train --data " + data + " --checkpoint " + (s / "policy.ckpt").string() + " --out " + t.string() +
                " --steps 2 --batch 4 --group-size 4 --eval-every 0"),
            0)
      << slurp(root / "stderr.txt");
  EXPECT_TRUE(fs::exists(t / "last.ckpt"));
  EXPECT_TRUE(fs::exists(t / "manifest.json"));
  EXPECT_EQ(load_checkpoint((t / "last.ckpt").string()).version, load_checkpoint((s / "policy.ckpt").string()).version + 2);

  ASSERT_EQ(run("report --metrics " + (t / "metrics.jsonl").string()), 0);
  auto csv = lines_of(out());
  ASSERT_EQ(csv.size(), 3u);
  EXPECT_EQ(csv[0].rfind("step,avg_reward", 0), 0u);
  EXPECT_EQ(csv[2].rfind("2,", 0), 0u);

  ASSERT_EQ(run("eval --checkpoint " + (s / "policy.ckpt").string()), 0);
  const fs::path base_json = s / "policy_test.json";
  ASSERT_TRUE(fs::exists(base_json));
  EXPECT_TRUE(fs::exists(s / "policy_test.csv"));

  ASSERT_EQ(run("eval --checkpoint " + (t / "last.ckpt").string() + " --baseline " + base_json.string()), 0);
  auto rows = lines_of(out());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NE(rows[0].find("Overall"), std::string::npos);
  const EvalReport base = load_report(base_json.string());
  const EvalReport rl = load_report((t / "last_test.json").string());
  std::vector<std::string> cells;
  std::stringstream ss(rows[1]);
  for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
  ASSERT_EQ(cells.size(), 1u + 7u + 2u);
  EXPECT_EQ(cells[0], "last");
  EXPECT_NEAR(std::stod(cells[8]), rl.overall, 0.005);
  EXPECT_NEAR(std::stod(cells[9]), rl.overall - base.overall, 0.0051);

  ASSERT_EQ(run("report --format markdown --reports " + base_json.string() + " " + (t / "last_test.json").string()), 0);
  EXPECT_EQ(lines_of(out()).size(), 4u);
}

TEST_F(Cli, GradeSingle) {
  ASSERT_EQ(run("grade --gt \"click('a324')\" --response \"<think>x</think><action>click('a324')</action>\""), 0);
  json j = json::parse(out());
  EXPECT_DOUBLE_EQ(j["total"].get<double>(), 1.1);
}

TEST_F(Cli, GradeBatchEmpty) {
  EXPECT_TRUE(grade_batch("").empty());
  EXPECT_TRUE(grade_batch("\n  \n").empty());
}

TEST_F(Cli, GradeBatchMatchesLibrary) {
  const ActionSpace space = ActionSpace::standard();
  const std::vector<std::tuple<std::string, std::string, std::string>> cases = {
      {"<think>a</think><action>click('a324')</action>", "click('a324')", "sparse"},
      {"<think>a</think><action>click('a320')</action>", "click('a324')", "fully_dense"},
      {"<action>fill('a7', 'hello')</action> trailing", "fill('a7', 'hello world')", "piecewise_dense"},
      {"no tags at all", "scroll('down')", "sparse"},
      {"<think>a</think><action>send_msg_to_user('42')</action>\n", "send_msg_to_user('42')", "sparse"},
  };
  std::string text;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& [resp, gt, scheme] = cases[i];
    text += json{{"response", resp}, {"gt_action", gt}, {"scheme", scheme}, {"task_id", "t" + std::to_string(i)}}.dump() +
            "\n";
  }
  auto recs = grade_batch(text);
  ASSERT_EQ(recs.size(), cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& [resp, gt, scheme] = cases[i];
    const RewardBreakdown b = grade(resp, parse_action(gt, space), space, scheme_from_string(scheme));
    EXPECT_EQ(recs[i]["index"], i);
    EXPECT_EQ(recs[i]["task_id"], "t" + std::to_string(i));
    EXPECT_DOUBLE_EQ(recs[i]["r_format"].get<double>(), b.r_format);
    EXPECT_DOUBLE_EQ(recs[i]["r_success"].get<double>(), b.r_success);
    EXPECT_DOUBLE_EQ(recs[i]["r_penalty"].get<double>(), b.r_penalty);
    EXPECT_DOUBLE_EQ(recs[i]["total"].get<double>(), b.total);
  }
}

TEST_F(Cli, GradeBatchIsolatesBadRecords) {
  const std::string good = json{{"response", "<think>a</think><action>click('a1')</action>"}, {"gt_action", "click('a1')"}}.dump();
  const std::string text = good + "\n{not json\n" + json{{"response", "x"}, {"gt_action", "click("}}.dump() + "\n" +
                           json{{"response", "x"}, {"gt_action", "click('a1')"}, {"scheme", "bogus"}}.dump() + "\n" +
                           json{{"gt_action", "click('a1')"}}.dump() + "\n" + good + "\n";
  auto recs = grade_batch(text);
  ASSERT_EQ(recs.size(), 6u);
  for (std::size_t i = 0; i < recs.size(); ++i) EXPECT_EQ(recs[i]["index"], i);
  EXPECT_DOUBLE_EQ(recs[0]["total"].get<double>(), 1.1);
  EXPECT_DOUBLE_EQ(recs[5]["total"].get<double>(), 1.1);
  for (int i : {1, 2, 3, 4}) {
    ASSERT_TRUE(recs[i].contains("error")) << recs[i];
    EXPECT_FALSE(recs[i].contains("total"));
  }
  EXPECT_NE(recs[2]["error"].get<std::string>().find("SyntaxError"), std::string::npos);
  EXPECT_NE(recs[3]["error"].get<std::string>().find("UnknownScheme"), std::string::npos);
}

TEST_F(Cli, GradeBatchFromStdin) {
  const fs::path in = write("stdin.jsonl", json{{"response", "<action>scroll('down')</action>"}, {"gt_action", "scroll('down')"}}.dump() + "\n");
  ASSERT_EQ(run("grade --in -", in.string()), 0);
  auto l = lines_of(out());
  ASSERT_EQ(l.size(), 1u);
  EXPECT_DOUBLE_EQ(json::parse(l[0])["total"].get<double>(), 1.0);
}
