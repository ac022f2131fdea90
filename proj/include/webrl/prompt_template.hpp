#pragma once

// Agent prompt rendering and output-template parsing.
//
// Responses follow  <think>REASONING</think><action>ACTION</action>TRAILING
// with the four tags spelled exactly as below.

#include <string>
#include <string_view>
#include <vector>

#include "webrl/action.hpp"

namespace webrl {

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kActionOpen = "<action>";
inline constexpr std::string_view kActionClose = "</action>";

inline constexpr int kPromptTemplateVersion = 1;

// Section headers of the rendered prompt. The policy's prompt reader keys on these.
inline constexpr std::string_view kGoalHeader = "## Goal:";
inline constexpr std::string_view kObservationHeader = "# Observation of current step:";
inline constexpr std::string_view kAxTreeHeader = "## AXTree:";
inline constexpr std::string_view kHistoryHeader = "# History of interaction with the task:";
inline constexpr std::string_view kActionSpaceHeader = "# Action space:";
inline constexpr std::string_view kEmptyHistoryMarker = "(none)";

struct PromptBundle {
  std::string goal;
  std::vector<Action> history;
  std::string observation;
  std::string action_space_doc;
};

struct ParsedResponse {
  std::string reasoning;
  std::string action_text;
  std::string trailing;
  bool format_ok = false;
};

std::string render_prompt(const PromptBundle& b);

// Total: never throws. Segments are best-effort when format_ok is false.
ParsedResponse parse_response(std::string_view text);

}  // namespace webrl
