#pragma once

// Per-category task mechanics. Internal to the library.

#include <memory>
#include <string>
#include <vector>

#include "webrl/webenv.hpp"

namespace webrl {

namespace detail {

class BidAllocator {
 public:
  BidAllocator(std::uint64_t seed, TaskType type);
  std::string next();

 private:
  int next_;
};

}  // namespace detail

class TaskModel {
 public:
  virtual ~TaskModel() = default;
  virtual std::unique_ptr<TaskModel> clone() const = 0;

  // Full page including the shared navigation chrome.
  Element render() const;

  // `target` is the resolved, visible element of the action's element argument
  // (nullptr for actions without one).
  virtual void apply(const Action& a, const Element* target) = 0;
  virtual bool success() const = 0;
  virtual std::vector<Action> oracle() const = 0;
  virtual nlohmann::json app_state() const = 0;

 protected:
  void init_chrome(detail::BidAllocator& bids, std::string title);
  virtual std::vector<Element> render_main() const = 0;

 private:
  std::string title_;
  std::string nav_bid_, all_bid_, help_bid_, skip_bid_, main_bid_;
};

namespace detail {

std::unique_ptr<TaskModel> make_task_model(const TaskConfig& config);

Element make_element(std::string bid, std::string role, std::string text, bool visible = true);

}  // namespace detail
}  // namespace webrl
