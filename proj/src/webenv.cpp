#include "webrl/webenv.hpp"

#include <functional>

#include "tasks.hpp"
#include "webrl/util.hpp"

namespace webrl {

std::string_view to_string(TaskType t) {
  switch (t) {
    case TaskType::kDashboard: return "dashboard";
    case TaskType::kForm: return "form";
    case TaskType::kKnowledge: return "knowledge";
    case TaskType::kFilter: return "filter";
    case TaskType::kSort: return "sort";
    case TaskType::kMenu: return "menu";
    case TaskType::kService: return "service";
  }
  return "form";
}

TaskType task_type_from_string(std::string_view s) {
  for (TaskType t : kAllTaskTypes) {
    if (to_string(t) == s) return t;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown task type '" + std::string(s) + "'");
}

nlohmann::json to_json(const TaskConfig& c) {
  return {{"task_type", to_string(c.type)}, {"seed", c.seed}, {"goal", c.goal}, {"params", c.params},
          {"targets", c.targets}};
}

TaskConfig task_config_from_json(const nlohmann::json& j) {
  try {
    TaskConfig c;
    c.type = task_type_from_string(j.at("task_type").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.goal = j.at("goal").get<std::string>();
    c.params = j.at("params");
    c.targets = j.at("targets");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("malformed task config: ") + e.what());
  }
}

std::uint64_t config_hash(const TaskConfig& c) { return fnv1a64(to_json(c).dump()); }

namespace {

void serialize_into(const Element& e, int depth, std::string& out) {
  out.append(static_cast<size_t>(depth) * 2, ' ');
  if (!e.bid.empty()) out += "[" + e.bid + "] ";
  out += e.role + " '" + e.text + "'";
  if (e.has_value) out += ", value='" + e.value + "'";
  if (e.visible) out += ", visible";
  out += '\n';
  for (const auto& ch : e.children) serialize_into(ch, depth + 1, out);
}

const Element* find_bid(const Element& e, std::string_view bid) {
  if (e.bid == bid) return &e;
  for (const auto& ch : e.children) {
    if (const Element* f = find_bid(ch, bid)) return f;
  }
  return nullptr;
}

}  // namespace

std::string serialize_elements(const Element& root) {
  std::string out;
  serialize_into(root, 0, out);
  return out;
}

std::vector<std::string> collect_bids(const Element& root) {
  std::vector<std::string> out;
  std::function<void(const Element&)> walk = [&](const Element& e) {
    if (!e.bid.empty()) out.push_back(e.bid);
    for (const auto& ch : e.children) walk(ch);
  };
  walk(root);
  return out;
}

EnvSession::EnvSession(TaskConfig config, std::unique_ptr<TaskModel> model)
    : config_(std::move(config)), model_(std::move(model)) {}

EnvSession::EnvSession(const EnvSession& other)
    : config_(other.config_), model_(other.model_->clone()), history_(other.history_), done_(other.done_) {}

EnvSession& EnvSession::operator=(const EnvSession& other) {
  if (this != &other) {
    config_ = other.config_;
    model_ = other.model_->clone();
    history_ = other.history_;
    done_ = other.done_;
  }
  return *this;
}

EnvSession::EnvSession(EnvSession&&) noexcept = default;
EnvSession& EnvSession::operator=(EnvSession&&) noexcept = default;
EnvSession::~EnvSession() = default;

PageState EnvSession::state() const { return PageState{model_->render(), model_->app_state()}; }

Observation EnvSession::observation() const {
  return Observation{serialize_elements(model_->render()), static_cast<int>(history_.size())};
}

std::pair<EnvSession, Observation> reset(const TaskConfig& config) {
  EnvSession s(config, detail::make_task_model(config));
  Observation obs = s.observation();
  return {std::move(s), std::move(obs)};
}

Observation step(EnvSession& s, const Action& a) {
  if (s.done_) throw Error(ErrorCode::kSessionDone, "session already finished");
  const ActionSpace space = ActionSpace::standard();
  const ActionSpec* spec = space.find(a.name);
  if (!spec || spec->args.size() != a.params.size()) {
    throw Error(ErrorCode::kUnknownAction, "action '" + serialize_action(a) + "' is not valid here");
  }
  Element page = s.model_->render();
  const Element* target = nullptr;
  for (size_t i = 0; i < spec->args.size(); ++i) {
    if (spec->args[i] != ArgKind::kElementId) continue;
    target = find_bid(page, a.params[i]);
    if (!target) throw Error(ErrorCode::kUnknownBid, "no element with bid '" + a.params[i] + "'");
    break;
  }
  bool element_action = target != nullptr;
  if (!element_action || target->visible) s.model_->apply(a, target);
  s.history_.push_back(a);
  if (a.name == "send_msg_to_user" || s.model_->success()) s.done_ = true;
  return s.observation();
}

int check_success(const EnvSession& s) { return s.model_->success() ? 1 : 0; }

std::vector<Action> oracle_trajectory(const TaskConfig& config) { return detail::make_task_model(config)->oracle(); }

}  // namespace webrl
