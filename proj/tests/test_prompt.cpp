#include <gtest/gtest.h>

#include "webrl/prompt_template.hpp"
#include "webrl/util.hpp"

using namespace webrl;

namespace {

PromptBundle bundle(std::vector<Action> history) {
  return {"Sort the incident list by Priority in ascending order.", std::move(history),
          "[a1] heading 'incident list', visible\n", ActionSpace::standard().describe()};
}

// Lines between the history header and the next blank line.
std::vector<std::string> history_section(const std::string& prompt) {
  std::size_t at = prompt.find(std::string(kHistoryHeader) + "\n");
  EXPECT_NE(at, std::string::npos);
  std::size_t begin = at + kHistoryHeader.size() + 1;
  std::size_t end = prompt.find("\n\n", begin);
  std::vector<std::string> out;
  std::string body = prompt.substr(begin, end - begin);
  std::size_t pos = 0;
  while (pos <= body.size()) {
    std::size_t nl = body.find('\n', pos);
    if (nl == std::string::npos) nl = body.size();
    out.push_back(body.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

}  // namespace

TEST(RenderPrompt, EmptyHistoryMarker) {
  const std::string p = render_prompt(bundle({}));
  EXPECT_EQ(history_section(p), std::vector<std::string>{std::string(kEmptyHistoryMarker)});
  for (auto h : {kGoalHeader, kObservationHeader, kAxTreeHeader, kHistoryHeader, kActionSpaceHeader}) {
    EXPECT_NE(p.find(h), std::string::npos) << h;
  }
  EXPECT_LT(p.find(kGoalHeader), p.find(kObservationHeader));
  EXPECT_LT(p.find(kObservationHeader), p.find(kHistoryHeader));
  EXPECT_LT(p.find(kHistoryHeader), p.find(kActionSpaceHeader));
}

TEST(RenderPrompt, Deterministic) { EXPECT_EQ(render_prompt(bundle({})), render_prompt(bundle({}))); }

TEST(RenderPrompt, OneLinePerHistoryAction) {
  std::vector<Action> h = {{"click", {"a3"}}, {"fill", {"a4", "x y"}}, {"press", {"a4", "Enter"}}};
  auto lines = history_section(render_prompt(bundle(h)));
  ASSERT_EQ(lines.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(lines[i], serialize_action(h[i]));
}

TEST(ParseResponse, WellFormed) {
  ParsedResponse r = parse_response("<think>plan</think><action>click('a1')</action>");
  EXPECT_EQ(r.reasoning, "plan");
  EXPECT_EQ(r.action_text, "click('a1')");
  EXPECT_EQ(r.trailing, "");
  EXPECT_TRUE(r.format_ok);
}

TEST(ParseResponse, MissingThinkBlock) {
  ParsedResponse r = parse_response("<action>click('a1')</action>");
  EXPECT_FALSE(r.format_ok);
  EXPECT_EQ(r.action_text, "click('a1')");
}

TEST(ParseResponse, TrailingTextKeepsFormat) {
  ParsedResponse r = parse_response("<think>p</think><action>click('a1')</action> and then...");
  EXPECT_TRUE(r.format_ok);
  EXPECT_EQ(r.trailing, " and then...");
}

TEST(ParseResponse, MalformedVariants) {
  EXPECT_FALSE(parse_response("").format_ok);
  EXPECT_FALSE(parse_response("<think>p</think><action>   </action>").format_ok);
  EXPECT_FALSE(parse_response("x<think>p</think><action>a</action>").format_ok);
  EXPECT_FALSE(parse_response("<think>p</think> <action>a</action>").format_ok);
  EXPECT_FALSE(parse_response("<think>p</think><action>a").format_ok);
  EXPECT_FALSE(parse_response("<action>a</action><think>p</think>").format_ok);
  EXPECT_FALSE(parse_response("<think>p<think></think><action>a</action>").format_ok);
}

// Random concatenations of tag and text fragments: parsing is total, and a
// well-formed parse partitions the input.
TEST(ParseResponse, TotalAndPartitioning) {
  const std::vector<std::string> frags = {"<think>", "</think>", "<action>", "</action>", "click('a1')",
                                          "plan", " ", "\n", "<", "x"};
  Rng rng(3);
  int ok = 0;
  for (int n = 0; n < 5000; ++n) {
    std::string s;
    std::size_t k = rng.index(9);
    for (std::size_t i = 0; i < k; ++i) s += frags[rng.index(frags.size())];
    if (rng.index(3) == 0) s = "<think>" + s + "</think><action>click('a2')</action>" + frags[rng.index(frags.size())];
    ParsedResponse r = parse_response(s);
    if (r.format_ok) {
      ++ok;
      EXPECT_EQ("<think>" + r.reasoning + "</think><action>" + r.action_text + "</action>" + r.trailing, s);
    }
  }
  EXPECT_GT(ok, 100);
}
