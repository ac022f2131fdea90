#pragma once

// Prompt reader and per-position feature extraction for the policy.
//
// A prompt is read back into its goal, element lines and action history. While
// a response is decoded, a cursor tracks where in the response template the
// next token falls (think slot, action argument, ...) and exposes
//   - hashed context rows (state, previous tokens, goal verb, history summary)
//   - relation bits per token: "this token continues the text of the goal-
//     related element", "... the bid of the element named in the reasoning",
//     and so on. Relation weights are shared across tokens, which is what lets
//     the model generalize to unseen bids and values.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "webrl/action.hpp"
#include "webrl/axtree.hpp"
#include "webrl/vocab.hpp"

namespace webrl {

enum Relation : int {
  kRelTargetBest,        // best fresh goal-related element
  kRelTargetFirstOfRole, // first fresh element of each role
  kRelTargetGoal,        // any element whose text overlaps the goal
  kRelTargetValueCell,   // cell whose row mentions a goal word
  kRelTargetAny,
  kRelTargetLast,        // element of the last history action
  kRelOpLast,
  kRelValueQuotedFresh,  // first quoted goal string not used yet
  kRelValueAssoc,        // quoted string following the named element's label
  kRelValueOption,       // option of the named element mentioned in the goal
  kRelValueNamedText,
  kRelValueGoal,         // any goal word or quoted string
  kRelNameFromThink,
  kRelNameLast,
  kRelBidNamed,
  kRelBidLast,
  kRelBidAny,
  kRelArgFromThink,
  kRelArgLast,
  kRelInGoal,
  kRelInHistory,
  kRelOptionAny,
  kNumRelations
};

inline constexpr int kNumStates = 37;
inline constexpr int kNumRowFeatures = 9;

struct PromptContext {
  std::string goal;
  std::string goal_first;
  std::vector<std::string> goal_words;
  std::vector<std::string> goal_quoted;
  std::vector<AxLine> lines;
  std::vector<Action> history;
  std::vector<std::string> history_bids;
  std::vector<std::string> history_values;

  std::vector<int> candidates;  // targetable lines, page order
  std::vector<int> overlap;     // goal overlap per line
  int best = -1;
  std::vector<int> value_cells;
  int pending_quoted = 0;
  std::string value_quoted_fresh;
  // Tokens whose word occurs in the goal / in history parameters.
  std::vector<TokenId> goal_tokens;
  std::vector<TokenId> history_tokens;

  bool is_fresh(int line) const;
};

PromptContext parse_prompt(std::string_view prompt, const Vocab& vocab);

struct StepFeatures {
  std::uint8_t state = 0;
  std::array<std::uint32_t, kNumRowFeatures> rows{};
  std::uint32_t rel_row = 0;
  std::vector<std::pair<TokenId, std::uint32_t>> rel;  // sorted by token
};

class FeatureCursor {
 public:
  FeatureCursor(const PromptContext& ctx, const Vocab& vocab, std::size_t rows, std::size_t rel_rows);

  StepFeatures features() const;
  void push(TokenId t);
  std::size_t length() const { return length_; }
  int state() const;

 private:
  enum class Segment { kPre, kThink, kMid, kAction, kPost };
  enum class Phase { kName, kAfterParen, kInArg, kAfterArg, kAfterComma, kAfterClose, kBroken };

  void add_suggestion(std::vector<std::pair<TokenId, std::uint32_t>>& rel, std::string_view slot,
                      std::string_view suggestion, TokenId closer, Relation r) const;
  void close_think_slot();

  const PromptContext& ctx_;
  const Vocab& vocab_;
  std::size_t rows_, rel_rows_;
  std::size_t length_ = 0;
  TokenId prev_ = UINT32_MAX, prev2_ = UINT32_MAX;

  Segment seg_ = Segment::kPre;
  int keyword_ = 0;  // 0 none, 1 goal, 2 target, 3 op, 4 value
  int slot_words_ = 0;
  bool at_boundary_ = true;
  std::string slot_;

  std::string named_role_, named_op_, think_value_;
  int named_ = -1;

  Phase phase_ = Phase::kName;
  int arg_ = 0;
  bool first_arg_is_bid_ = true;  // from the action name typed so far
  int arg_tokens_ = 0;
  std::string arg_text_;

  TokenId tok_think_close_, tok_action_open_, tok_action_close_, tok_think_open_;
  TokenId tok_dot_, tok_quote_, tok_space_quote_, tok_paren_, tok_close_paren_, tok_comma_;
  std::array<TokenId, 4> tok_keywords_{};
};

}  // namespace webrl
