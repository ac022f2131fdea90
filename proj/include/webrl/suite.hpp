#pragma once

// Task-suite config file: the action space, one parameterized task template
// per category (value pools), category weights and the train/test seed split.
//
// {
//   "schema_version": 1,
//   "name": "...",
//   "action_space": [{"name": "click", "args": ["element"], "doc": "..."}, ...],
//   "categories": [
//     {"type": "form", "weight": 5, "train_seeds": [...], "test_seeds": [...],
//      "pools": {...}},
//     ...
//   ]
// }

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "webrl/action.hpp"
#include "webrl/webenv.hpp"

namespace webrl {

inline constexpr int kSuiteSchemaVersion = 1;

struct CategorySpec {
  TaskType type = TaskType::kForm;
  double weight = 1.0;
  std::vector<std::uint64_t> train_seeds;
  std::vector<std::uint64_t> test_seeds;
  nlohmann::json pools;
};

enum class Split { kTrain, kTest };

std::string_view to_string(Split s);
Split split_from_string(std::string_view s);

struct TaskSuite {
  std::string name;
  ActionSpace action_space;
  std::vector<CategorySpec> categories;

  const CategorySpec& category(TaskType t) const;
  // Generated configs of one split, ordered by (category order, seed order).
  std::vector<TaskConfig> configs(Split split) const;
};

// Throws kInvalidConfig on schema problems and kLeakage when a category's
// train and test seeds overlap.
TaskSuite load_suite(const std::string& path);
TaskSuite suite_from_json(const nlohmann::json& j);
nlohmann::json suite_to_json(const TaskSuite& s);

// The bundled seven-category suite (10 train + 5 test seeds per category).
TaskSuite default_suite();

TaskConfig generate_config(const CategorySpec& cat, std::uint64_t seed);

// Redraws surface values (field values, item names, menu labels, rows) from
// the category pools while keeping the task type and structural targets.
TaskConfig resample_config(const TaskConfig& c, const CategorySpec& cat, std::uint64_t seed);

// Every whitespace-separated word of the category value pools.
std::vector<std::string> suite_lexicon(const TaskSuite& s);

}  // namespace webrl
