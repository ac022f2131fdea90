#pragma once

// Rule-based reward for a single candidate response graded against the
// oracle action of its step.
//
//   total = format + success + penalty
//
//   format   0.1  tags well formed and the action is valid in the space
//   success  1    name and parameters match       (sparse scheme)
//            0.1  only the name matches
//   penalty -0.9  non-whitespace text after </action>
//
// The dense schemes replace only the success term.

#include <optional>
#include <string>
#include <string_view>

#include "webrl/action.hpp"
#include "webrl/prompt_template.hpp"

namespace webrl {

inline constexpr double kFormatReward = 0.1;
inline constexpr double kFullMatchReward = 1.0;
inline constexpr double kTypeMatchReward = 0.1;
inline constexpr double kTrailingPenalty = -0.9;

struct RewardBreakdown {
  double r_format = 0.0;
  double r_success = 0.0;
  double r_penalty = 0.0;
  double total = 0.0;
};

enum class SchemeKind { kSparse, kFullyDense, kPiecewiseDense };

struct RewardScheme {
  SchemeKind kind = SchemeKind::kSparse;
  // Only "edit" (1 - normalized Levenshtein) is implemented.
  std::string similarity = "edit";

  static RewardScheme sparse() { return {}; }
  static RewardScheme fully_dense() { return {SchemeKind::kFullyDense, "edit"}; }
  static RewardScheme piecewise_dense() { return {SchemeKind::kPiecewiseDense, "edit"}; }
};

std::string_view to_string(SchemeKind k);
// Throws kUnknownScheme.
RewardScheme scheme_from_string(std::string_view name);

size_t edit_distance(std::string_view a, std::string_view b);
// 1 - d(a,b) / max(|a|,|b|); two empty strings are identical.
double edit_similarity(std::string_view a, std::string_view b);

double grade_format(const ParsedResponse& p, const ActionSpace& space);
double grade_success(const std::optional<Action>& pred, const Action& gt);
double grade_penalty(const ParsedResponse& p);

// Throws kUnknownScheme when the scheme's similarity is not recognised.
RewardBreakdown grade(std::string_view response, const Action& gt, const ActionSpace& space,
                      const RewardScheme& scheme);

}  // namespace webrl
