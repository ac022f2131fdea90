#include "webrl/reward.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

namespace webrl {

std::string_view to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::kSparse: return "sparse";
    case SchemeKind::kFullyDense: return "fully_dense";
    case SchemeKind::kPiecewiseDense: return "piecewise_dense";
  }
  return "sparse";
}

RewardScheme scheme_from_string(std::string_view name) {
  if (name == "sparse") return RewardScheme::sparse();
  if (name == "fully_dense") return RewardScheme::fully_dense();
  if (name == "piecewise_dense") return RewardScheme::piecewise_dense();
  throw Error(ErrorCode::kUnknownScheme, "unknown reward scheme '" + std::string(name) + "'");
}

size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double edit_similarity(std::string_view a, std::string_view b) {
  size_t n = std::max(a.size(), b.size());
  if (n == 0) return 1.0;
  return 1.0 - static_cast<double>(edit_distance(a, b)) / static_cast<double>(n);
}

double grade_format(const ParsedResponse& p, const ActionSpace& space) {
  if (!p.format_ok) return 0.0;
  return try_parse_action(p.action_text, space) ? kFormatReward : 0.0;
}

double grade_success(const std::optional<Action>& pred, const Action& gt) {
  if (!pred) return 0.0;
  switch (actions_equal(*pred, gt)) {
    case MatchLevel::kFull: return kFullMatchReward;
    case MatchLevel::kTypeOnly: return kTypeMatchReward;
    case MatchLevel::kNone: return 0.0;
  }
  return 0.0;
}

double grade_penalty(const ParsedResponse& p) {
  bool junk = std::any_of(p.trailing.begin(), p.trailing.end(),
                          [](char c) { return !std::isspace(static_cast<unsigned char>(c)); });
  return junk ? kTrailingPenalty : 0.0;
}

namespace {

double piecewise_success(const Action& pred, const Action& gt) {
  double name_part = pred.name == gt.name ? kTypeMatchReward : 0.0;
  double param_sim = 1.0;
  if (!gt.params.empty()) {
    double sum = 0.0;
    for (size_t i = 0; i < gt.params.size(); ++i) {
      std::string_view p = i < pred.params.size() ? std::string_view(pred.params[i]) : std::string_view();
      sum += edit_similarity(p, gt.params[i]);
    }
    param_sim = sum / static_cast<double>(gt.params.size());
  }
  return name_part + (1.0 - kTypeMatchReward) * param_sim;
}

}  // namespace

RewardBreakdown grade(std::string_view response, const Action& gt, const ActionSpace& space,
                      const RewardScheme& scheme) {
  if (scheme.similarity != "edit") {
    throw Error(ErrorCode::kUnknownScheme, "unknown similarity '" + scheme.similarity + "'");
  }
  ParsedResponse p = parse_response(response);
  std::optional<Action> pred = try_parse_action(p.action_text, space);

  RewardBreakdown r;
  r.r_format = grade_format(p, space);
  r.r_penalty = grade_penalty(p);
  switch (scheme.kind) {
    case SchemeKind::kSparse:
      r.r_success = grade_success(pred, gt);
      break;
    case SchemeKind::kFullyDense:
      r.r_success = pred ? edit_similarity(serialize_action(*pred), serialize_action(gt)) : 0.0;
      break;
    case SchemeKind::kPiecewiseDense:
      r.r_success = pred ? piecewise_success(*pred, gt) : 0.0;
      break;
  }
  r.total = r.r_format + r.r_success + r.r_penalty;
  return r;
}

}  // namespace webrl
