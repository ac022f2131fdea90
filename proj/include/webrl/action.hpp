#pragma once

// Action space and the call-expression DSL used in agent outputs,
// oracle trajectories and prompt histories:
//
//   name('p1', "p2", ...)
//
// Arguments are single- or double-quoted strings; nested calls and bare
// identifiers are rejected. serialize_action() always emits single quotes.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "webrl/error.hpp"

namespace webrl {

enum class ArgKind { kElementId, kFreeText, kUrl };

std::string_view to_string(ArgKind kind);
ArgKind arg_kind_from_string(std::string_view s);

struct ActionSpec {
  std::string name;
  std::vector<ArgKind> args;
  std::string doc;
};

class ActionSpace {
 public:
  ActionSpace() = default;
  // Throws kInvalidConfig on an empty list or duplicate names.
  explicit ActionSpace(std::vector<ActionSpec> specs);

  // The fixed eight-operation space used by the bundled task suite.
  static ActionSpace standard();

  const ActionSpec* find(std::string_view name) const;
  const std::vector<ActionSpec>& specs() const { return specs_; }
  bool empty() const { return specs_.empty(); }

  // Human-readable listing used in the prompt's action-space section.
  std::string describe() const;

 private:
  std::vector<ActionSpec> specs_;
};

struct Action {
  std::string name;
  std::vector<std::string> params;

  friend bool operator==(const Action&, const Action&) = default;
};

enum class MatchLevel { kNone, kTypeOnly, kFull };

std::string_view to_string(MatchLevel m);

bool is_element_id(std::string_view s);

// Throws Error with kUnknownAction, kArityMismatch or kSyntaxError.
Action parse_action(std::string_view text, const ActionSpace& space);

// Non-throwing variant; nullopt on any parse or validation failure.
std::optional<Action> try_parse_action(std::string_view text, const ActionSpace& space) noexcept;

// Grammar-only parse, no validation against a space.
Action parse_call(std::string_view text);

std::string serialize_action(const Action& a);

MatchLevel actions_equal(const Action& pred, const Action& gt);

}  // namespace webrl
