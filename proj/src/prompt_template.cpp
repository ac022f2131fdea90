#include "webrl/prompt_template.hpp"

#include <cctype>

namespace webrl {

std::string render_prompt(const PromptBundle& b) {
  std::string p;
  p.reserve(1024 + b.observation.size());
  p += "You are a web agent working inside an enterprise web application. Each turn you\n"
       "see the current page and the actions taken so far, and you answer with one\n"
       "action that the browser will execute.\n";
  p += "# Instructions\n";
  p += "Think about the page and the goal inside <think></think>, then give exactly one\n"
       "action inside <action></action>. Write nothing after </action>.\n\n";
  p += kGoalHeader;
  p += "\n" + b.goal + "\n\n";
  p += kObservationHeader;
  p += "\n\n";
  p += kAxTreeHeader;
  p += "\nNote: every element line starts with its [bid]; refer to elements by bid.\n"
       "Note: only elements tagged 'visible' can be interacted with.\n\n";
  p += b.observation;
  if (!b.observation.empty() && b.observation.back() != '\n') p += '\n';
  p += "\n";
  p += kHistoryHeader;
  p += "\n";
  if (b.history.empty()) {
    p += kEmptyHistoryMarker;
    p += "\n";
  } else {
    for (const auto& a : b.history) p += serialize_action(a) + "\n";
  }
  p += "\n";
  p += kActionSpaceHeader;
  p += "\n" + b.action_space_doc;
  if (!b.action_space_doc.empty() && b.action_space_doc.back() != '\n') p += '\n';
  return p;
}

namespace {

bool contains(std::string_view hay, std::string_view needle) {
  return hay.find(needle) != std::string_view::npos;
}

bool is_blank(std::string_view s) {
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace

ParsedResponse parse_response(std::string_view text) {
  ParsedResponse r;

  size_t t_open = text.find(kThinkOpen);
  size_t t_close = t_open == std::string_view::npos ? std::string_view::npos
                                                    : text.find(kThinkClose, t_open + kThinkOpen.size());
  if (t_close != std::string_view::npos) {
    size_t start = t_open + kThinkOpen.size();
    r.reasoning = std::string(text.substr(start, t_close - start));
  }

  size_t search_from = t_close == std::string_view::npos ? 0 : t_close + kThinkClose.size();
  size_t a_open = text.find(kActionOpen, search_from);
  if (a_open == std::string_view::npos) a_open = text.find(kActionOpen);
  size_t a_close = a_open == std::string_view::npos ? std::string_view::npos
                                                    : text.find(kActionClose, a_open + kActionOpen.size());
  if (a_open != std::string_view::npos) {
    size_t start = a_open + kActionOpen.size();
    size_t end = a_close == std::string_view::npos ? text.size() : a_close;
    r.action_text = std::string(text.substr(start, end - start));
  }
  if (a_close != std::string_view::npos) {
    r.trailing = std::string(text.substr(a_close + kActionClose.size()));
  }

  // Strict layout: the head must be exactly <think>R</think><action>A</action>.
  r.format_ok = t_open == 0 && t_close != std::string_view::npos &&
                a_open == t_close + kThinkClose.size() && a_close != std::string_view::npos &&
                !contains(r.reasoning, kThinkOpen) && !contains(r.reasoning, kActionOpen) &&
                !contains(r.reasoning, kActionClose) && !contains(r.action_text, kThinkOpen) &&
                !contains(r.action_text, kThinkClose) && !contains(r.action_text, kActionOpen) &&
                !is_blank(r.action_text);
  return r;
}

}  // namespace webrl
