#pragma once

// Held-out rollouts and success-rate reports.

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "webrl/policy.hpp"
#include "webrl/suite.hpp"

namespace webrl {

// Maps a rendered prompt to a response text.
using Responder = std::function<std::string(const std::string& prompt)>;

// Success bit of one episode. Responses whose action does not parse, or names
// a missing element, use up a step without touching the page. max_steps <= 0
// returns 0.
int run_episode(const Responder& respond, const TaskConfig& config, int max_steps, const ActionSpace& space);
int run_episode(const PolicyParams& p, const TaskConfig& config, int max_steps, const ActionSpace& space);

// Twice the oracle length.
int default_max_steps(const TaskConfig& config);

struct CategoryResult {
  std::string category;
  double weight = 0.0;
  double success_rate = 0.0;  // percent
  int episodes = 0;
};

struct EvalReport {
  std::string name;
  std::vector<CategoryResult> categories;
  double overall = 0.0;
};

// Fills `overall` as the weight-averaged success rate (0 when all weights are 0).
double weighted_overall(const std::vector<CategoryResult>& categories);

struct EvalOptions {
  Split split = Split::kTest;
  int episodes_per_config = 1;
  int max_steps = 0;  // 0: default_max_steps per config
  int workers = 1;
};

EvalReport evaluate(const PolicyParams& p, const TaskSuite& suite, const EvalOptions& opt, std::string name = "policy");
EvalReport evaluate(const Responder& respond, const TaskSuite& suite, const EvalOptions& opt, std::string name);

enum class ReportFormat { kCsv, kMarkdown };
// Throws kUnknownFormat.
ReportFormat report_format_from_string(std::string_view s);

// One row per report. With a baseline a Δ column (overall minus baseline
// overall) is added; with two or more reports markdown bolds the best cell of
// each column.
std::string render_report(const std::vector<EvalReport>& reports, ReportFormat format,
                          const EvalReport* baseline = nullptr);

nlohmann::json to_json(const EvalReport& r);
EvalReport eval_report_from_json(const nlohmann::json& j);
EvalReport load_report(const std::string& path);
void save_report(const EvalReport& r, const std::string& path);

}  // namespace webrl
