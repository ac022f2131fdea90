#include "webrl/evalharness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "webrl/util.hpp"

namespace webrl {

int run_episode(const Responder& respond, const TaskConfig& config, int max_steps, const ActionSpace& space) {
  if (max_steps <= 0) return 0;
  auto [session, obs] = reset(config);
  const std::string doc = space.describe();
  for (int t = 0; t < max_steps && !session.done(); ++t) {
    std::string prompt = render_prompt(PromptBundle{config.goal, session.history(), obs.text, doc});
    ParsedResponse r = parse_response(respond(prompt));
    auto action = try_parse_action(r.action_text, space);
    if (!action) continue;
    try {
      obs = step(session, *action);
    } catch (const Error&) {
      // Unknown bid or an action the page does not support: a wasted step.
    }
  }
  return check_success(session);
}

int run_episode(const PolicyParams& p, const TaskConfig& config, int max_steps, const ActionSpace& space) {
  return run_episode(
      [&](const std::string& prompt) { return greedy_decode(p, parse_prompt(prompt, *p.vocab)).text; }, config,
      max_steps, space);
}

int default_max_steps(const TaskConfig& config) { return 2 * static_cast<int>(oracle_trajectory(config).size()); }

double weighted_overall(const std::vector<CategoryResult>& categories) {
  double num = 0, den = 0;
  for (const auto& c : categories) {
    num += c.weight * c.success_rate;
    den += c.weight;
  }
  return den > 0 ? num / den : 0.0;
}

EvalReport evaluate(const Responder& respond, const TaskSuite& suite, const EvalOptions& opt, std::string name) {
  if (opt.episodes_per_config < 1) throw Error(ErrorCode::kInvalidConfig, "episodes_per_config must be positive");
  struct Job {
    size_t category;
    TaskConfig config;
  };
  std::vector<Job> jobs;
  for (size_t c = 0; c < suite.categories.size(); ++c) {
    const auto& seeds = opt.split == Split::kTrain ? suite.categories[c].train_seeds : suite.categories[c].test_seeds;
    for (auto seed : seeds) {
      TaskConfig cfg = generate_config(suite.categories[c], seed);
      for (int e = 0; e < opt.episodes_per_config; ++e) jobs.push_back({c, cfg});
    }
  }
  if (jobs.empty()) throw Error(ErrorCode::kInvalidConfig, "split has no configs");
  std::vector<int> results(jobs.size(), 0);
  parallel_for(jobs.size(), opt.workers, [&](size_t i) {
    int steps = opt.max_steps > 0 ? opt.max_steps : default_max_steps(jobs[i].config);
    results[i] = run_episode(respond, jobs[i].config, steps, suite.action_space);
  });
  EvalReport r;
  r.name = std::move(name);
  for (size_t c = 0; c < suite.categories.size(); ++c) {
    CategoryResult cr;
    cr.category = std::string(to_string(suite.categories[c].type));
    cr.weight = suite.categories[c].weight;
    int ok = 0;
    for (size_t i = 0; i < jobs.size(); ++i) {
      if (jobs[i].category != c) continue;
      ++cr.episodes;
      ok += results[i];
    }
    cr.success_rate = cr.episodes ? 100.0 * ok / cr.episodes : 0.0;
    r.categories.push_back(cr);
  }
  r.overall = weighted_overall(r.categories);
  return r;
}

EvalReport evaluate(const PolicyParams& p, const TaskSuite& suite, const EvalOptions& opt, std::string name) {
  return evaluate([&](const std::string& prompt) { return greedy_decode(p, parse_prompt(prompt, *p.vocab)).text; },
                  suite, opt, std::move(name));
}

ReportFormat report_format_from_string(std::string_view s) {
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "markdown" || s == "md") return ReportFormat::kMarkdown;
  throw Error(ErrorCode::kUnknownFormat, "unknown report format '" + std::string(s) + "'");
}

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string render_report(const std::vector<EvalReport>& reports, ReportFormat format, const EvalReport* baseline) {
  if (reports.empty()) return {};
  // Columns follow the first report; other reports are matched by name.
  std::vector<std::string> cols;
  for (const auto& c : reports[0].categories) cols.push_back(c.category);
  auto value = [](const EvalReport& r, const std::string& cat) {
    for (const auto& c : r.categories) {
      if (c.category == cat) return c.success_rate;
    }
    return 0.0;
  };
  const bool delta = baseline != nullptr;
  // table[row][col] of numbers: categories, overall, delta
  std::vector<std::vector<double>> table;
  for (const auto& r : reports) {
    std::vector<double> row;
    for (const auto& c : cols) row.push_back(value(r, c));
    row.push_back(r.overall);
    if (delta) row.push_back(r.overall - baseline->overall);
    table.push_back(std::move(row));
  }
  std::vector<std::string> header{"policy"};
  for (const auto& c : cols) header.push_back(c);
  header.push_back("Overall");
  if (delta) header.push_back("Δ");

  std::string out;
  if (format == ReportFormat::kCsv) {
    for (size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + csv_field(header[i]);
    out += '\n';
    for (size_t r = 0; r < reports.size(); ++r) {
      out += csv_field(reports[r].name);
      for (double x : table[r]) out += "," + fmt(x);
      out += '\n';
    }
    return out;
  }
  out += "|";
  for (const auto& h : header) out += " " + h + " |";
  out += "\n|";
  for (size_t i = 0; i < header.size(); ++i) out += i == 0 ? " --- |" : " ---: |";
  out += '\n';
  std::vector<double> best(table[0].size(), -1e300);
  for (const auto& row : table) {
    for (size_t k = 0; k < row.size(); ++k) best[k] = std::max(best[k], row[k]);
  }
  for (size_t r = 0; r < reports.size(); ++r) {
    out += "| " + reports[r].name + " |";
    for (size_t k = 0; k < table[r].size(); ++k) {
      std::string cell = fmt(table[r][k]);
      if (reports.size() >= 2 && table[r][k] == best[k]) cell = "**" + cell + "**";
      out += " " + cell + " |";
    }
    out += '\n';
  }
  return out;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json cats = nlohmann::json::array();
  for (const auto& c : r.categories) {
    cats.push_back({{"category", c.category}, {"weight", c.weight}, {"success_rate", c.success_rate},
                    {"episodes", c.episodes}});
  }
  return {{"name", r.name}, {"categories", cats}, {"overall", r.overall}};
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  try {
    EvalReport r;
    r.name = j.at("name").get<std::string>();
    for (const auto& c : j.at("categories")) {
      r.categories.push_back({c.at("category").get<std::string>(), c.at("weight").get<double>(),
                              c.at("success_rate").get<double>(), c.at("episodes").get<int>()});
    }
    r.overall = j.at("overall").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("malformed report: ") + e.what());
  }
}

EvalReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open report '" + path + "'");
  try {
    return eval_report_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig, "report '" + path + "' is not JSON: " + e.what());
  }
}

void save_report(const EvalReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write report '" + path + "'");
  out << to_json(r).dump(2) << '\n';
}

}  // namespace webrl
