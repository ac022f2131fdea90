#pragma once

// Deterministic simulated enterprise web application.
//
// A TaskConfig fully determines the initial page; pages are rendered as an
// accessibility-tree-like element tree whose interactable nodes carry bids.
// Sessions are single-threaded value types; distinct sessions share nothing.

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "webrl/action.hpp"

namespace webrl {

enum class TaskType { kDashboard, kForm, kKnowledge, kFilter, kSort, kMenu, kService };

inline constexpr std::array<TaskType, 7> kAllTaskTypes = {
    TaskType::kDashboard, TaskType::kForm, TaskType::kKnowledge, TaskType::kFilter,
    TaskType::kSort,      TaskType::kMenu, TaskType::kService};

std::string_view to_string(TaskType t);
// Throws kInvalidConfig.
TaskType task_type_from_string(std::string_view s);

struct Element {
  std::string bid;
  std::string role;
  std::string text;
  std::string value;
  bool has_value = false;
  bool visible = true;
  std::vector<Element> children;
};

struct PageState {
  Element root;
  nlohmann::json app_state;
};

struct Observation {
  std::string text;
  int step_index = 0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct TaskConfig {
  TaskType type = TaskType::kForm;
  std::uint64_t seed = 0;
  std::string goal;
  // Page layout (field schema, list rows, menu tree, catalog, articles, chart).
  nlohmann::json params;
  // Expected outcome checked by check_success().
  nlohmann::json targets;

  friend bool operator==(const TaskConfig&, const TaskConfig&) = default;
};

nlohmann::json to_json(const TaskConfig& c);
TaskConfig task_config_from_json(const nlohmann::json& j);
// Stable 64-bit FNV-1a hash of the canonical JSON form.
std::uint64_t config_hash(const TaskConfig& c);

std::string serialize_elements(const Element& root);

class TaskModel;

class EnvSession {
 public:
  EnvSession(const EnvSession& other);
  EnvSession& operator=(const EnvSession& other);
  EnvSession(EnvSession&&) noexcept;
  EnvSession& operator=(EnvSession&&) noexcept;
  ~EnvSession();

  const TaskConfig& config() const { return config_; }
  const std::vector<Action>& history() const { return history_; }
  bool done() const { return done_; }
  PageState state() const;
  // Re-serialization of the current state; equals the last emitted observation.
  Observation observation() const;

 private:
  friend std::pair<EnvSession, Observation> reset(const TaskConfig& config);
  friend Observation step(EnvSession& s, const Action& a);
  friend int check_success(const EnvSession& s);

  EnvSession(TaskConfig config, std::unique_ptr<TaskModel> model);

  TaskConfig config_;
  std::unique_ptr<TaskModel> model_;
  std::vector<Action> history_;
  bool done_ = false;
};

// Throws kInvalidConfig if the targets are not achievable on the generated page.
std::pair<EnvSession, Observation> reset(const TaskConfig& config);

// Applies a to the session. Throws kSessionDone after termination and
// kUnknownBid when an element argument names no element on the page.
// Well-formed actions that do not apply (hidden element, wrong role) are no-ops
// but are still appended to the history.
Observation step(EnvSession& s, const Action& a);

int check_success(const EnvSession& s);

// Scripted ground-truth action sequence. Throws kInvalidConfig for a bad config.
std::vector<Action> oracle_trajectory(const TaskConfig& config);

// Collects every bid that appears in the element tree.
std::vector<std::string> collect_bids(const Element& root);

}  // namespace webrl
