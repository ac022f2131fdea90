#include "webrl/features.hpp"

#include <algorithm>
#include <set>

#include "webrl/prompt_template.hpp"
#include "webrl/util.hpp"

namespace webrl {

namespace {

const ActionSpace& standard_space() {
  static const ActionSpace s = ActionSpace::standard();
  return s;
}

const std::set<std::string>& stopwords() {
  static const std::set<std::string> s{"a",  "an",   "and",   "the",  "to",      "of",   "in",   "is",
                                       "by", "for",  "with",  "from", "using",   "where", "show", "records",
                                       "new", "record", "list", "order", "listed", "value", "shown", "report"};
  return s;
}

// Containers and decoration are never action targets.
bool targetable_role(const std::string& role) {
  static const std::set<std::string> skip{"RootWebArea", "navigation", "main", "form",  "table",
                                          "row",         "list",       "group", "heading", "menu",
                                          "StaticText"};
  return !skip.count(role);
}

std::string strip_punct(std::string w) {
  while (!w.empty() && std::string_view(".,:;!?>'\"").find(w.back()) != std::string_view::npos) w.pop_back();
  while (!w.empty() && std::string_view("'\"<").find(w.front()) != std::string_view::npos) w.erase(w.begin());
  return w;
}

std::string_view section(std::string_view p, std::string_view header, std::string_view next_header) {
  size_t a = p.find(header);
  if (a == std::string_view::npos) return {};
  a += header.size();
  size_t b = next_header.empty() ? std::string_view::npos : p.find(next_header, a);
  return p.substr(a, b == std::string_view::npos ? std::string_view::npos : b - a);
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

void add_word_tokens(const Vocab& vocab, const std::string& text, std::vector<TokenId>& out) {
  for (const auto& w : split_words(text)) {
    for (const std::string& t : {w, " " + w}) {
      auto id = vocab.find(t);
      if (id >= 0) out.push_back(static_cast<TokenId>(id));
    }
  }
}

void sort_unique(std::vector<TokenId>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

TokenId id_or_none(const Vocab& v, std::string_view t) {
  auto id = v.find(t);
  return id < 0 ? UINT32_MAX : static_cast<TokenId>(id);
}

}  // namespace

bool PromptContext::is_fresh(int line) const {
  const std::string& bid = lines[line].bid;
  return !bid.empty() && !contains(history_bids, bid);
}

PromptContext parse_prompt(std::string_view prompt, const Vocab& vocab) {
  PromptContext c;
  c.goal = trim_copy(section(prompt, kGoalHeader, kObservationHeader));
  for (auto& w : split_words(c.goal)) {
    std::string s = strip_punct(w);
    if (!s.empty()) c.goal_words.push_back(s);
  }
  if (!c.goal_words.empty()) c.goal_first = c.goal_words[0];
  for (size_t a = c.goal.find('\''); a != std::string::npos;) {
    size_t b = c.goal.find('\'', a + 1);
    if (b == std::string::npos) break;
    c.goal_quoted.push_back(c.goal.substr(a + 1, b - a - 1));
    a = c.goal.find('\'', b + 1);
  }

  c.lines = parse_axtree(section(prompt, kAxTreeHeader, kHistoryHeader));

  std::string_view hist = section(prompt, kHistoryHeader, kActionSpaceHeader);
  size_t pos = 0;
  while (pos < hist.size()) {
    size_t nl = hist.find('\n', pos);
    if (nl == std::string_view::npos) nl = hist.size();
    std::string line = trim_copy(hist.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.empty() || line == kEmptyHistoryMarker) continue;
    try {
      c.history.push_back(parse_call(line));
    } catch (const Error&) {
    }
  }
  for (const auto& a : c.history) {
    for (const auto& p : a.params) {
      if (is_element_id(p)) {
        c.history_bids.push_back(p);
      } else {
        c.history_values.push_back(p);
      }
    }
  }

  std::set<std::string> goal_set;
  for (const auto& w : c.goal_words) {
    if (!stopwords().count(w)) goal_set.insert(w);
  }
  c.overlap.assign(c.lines.size(), 0);
  for (size_t i = 0; i < c.lines.size(); ++i) {
    const AxLine& l = c.lines[i];
    std::set<std::string> seen;
    for (const auto& w : split_words(l.text)) {
      if (goal_set.count(w) && seen.insert(w).second) ++c.overlap[i];
    }
    if (l.bid.empty() || !l.visible || !targetable_role(l.role)) continue;
    c.candidates.push_back(static_cast<int>(i));
  }
  int best_overlap = 0;
  for (int i : c.candidates) {
    if (c.lines[i].role == "cell" || !c.is_fresh(i)) continue;
    if (c.overlap[i] > best_overlap) {
      best_overlap = c.overlap[i];
      c.best = i;
    }
  }
  // Cells sharing a row with a cell whose text is mentioned in the goal.
  for (int i : c.candidates) {
    const AxLine& l = c.lines[i];
    if (l.role != "cell" || l.parent < 0) continue;
    for (int j : c.candidates) {
      if (j == i || c.lines[j].parent != l.parent || c.lines[j].role != "cell") continue;
      const std::string& t = c.lines[j].text;
      if (contains(c.goal_quoted, t) || contains(c.goal_words, t)) {
        c.value_cells.push_back(i);
        break;
      }
    }
  }
  for (const auto& q : c.goal_quoted) {
    if (contains(c.history_values, q)) continue;
    if (c.pending_quoted++ == 0) c.value_quoted_fresh = q;
  }

  for (const auto& w : c.goal_words) add_word_tokens(vocab, w, c.goal_tokens);
  for (const auto& q : c.goal_quoted) add_word_tokens(vocab, q, c.goal_tokens);
  for (const auto& v : c.history_values) add_word_tokens(vocab, v, c.history_tokens);
  sort_unique(c.goal_tokens);
  sort_unique(c.history_tokens);
  return c;
}

FeatureCursor::FeatureCursor(const PromptContext& ctx, const Vocab& vocab, std::size_t rows, std::size_t rel_rows)
    : ctx_(ctx), vocab_(vocab), rows_(rows), rel_rows_(rel_rows) {
  tok_think_open_ = id_or_none(vocab, kThinkOpen);
  tok_think_close_ = id_or_none(vocab, kThinkClose);
  tok_action_open_ = id_or_none(vocab, kActionOpen);
  tok_action_close_ = id_or_none(vocab, kActionClose);
  tok_dot_ = id_or_none(vocab, " .");
  tok_quote_ = id_or_none(vocab, "'");
  tok_space_quote_ = id_or_none(vocab, " '");
  tok_paren_ = id_or_none(vocab, "(");
  tok_close_paren_ = id_or_none(vocab, ")");
  tok_comma_ = id_or_none(vocab, ",");
  tok_keywords_ = {id_or_none(vocab, " goal"), id_or_none(vocab, " target"), id_or_none(vocab, " op"),
                   id_or_none(vocab, " value")};
}

int FeatureCursor::state() const {
  switch (seg_) {
    case Segment::kPre: return 0;
    case Segment::kThink: return 1 + keyword_ * 4 + std::min(slot_words_, 3);
    case Segment::kMid: return 21;
    case Segment::kPost: return 35;
    case Segment::kAction: break;
  }
  // Argument states are keyed by kind (bid or text), not position, so a text
  // first argument shares weights with the text arguments of fill/press.
  const int text_arg = (arg_ == 0 && first_arg_is_bid_) ? 0 : 1;
  switch (phase_) {
    case Phase::kName: return arg_tokens_ == 0 ? 22 : 23;
    case Phase::kAfterParen: return 24;
    case Phase::kInArg: return 25 + text_arg * 3 + std::min(arg_tokens_, 2);
    case Phase::kAfterArg: return 31 + text_arg;
    case Phase::kAfterComma: return 33;
    case Phase::kAfterClose: return 34;
    case Phase::kBroken: return 36;
  }
  return 36;
}

void FeatureCursor::add_suggestion(std::vector<std::pair<TokenId, std::uint32_t>>& rel, std::string_view slot,
                                   std::string_view suggestion, TokenId closer, Relation r) const {
  if (suggestion.size() < slot.size() || suggestion.substr(0, slot.size()) != slot) return;
  const std::uint32_t bit = 1u << r;
  std::string_view rest = suggestion.substr(slot.size());
  if (rest.empty()) {
    if (closer != UINT32_MAX) rel.emplace_back(closer, bit);
    return;
  }
  std::vector<TokenId> ids;
  vocab_.prefixes_of(rest, ids);
  for (TokenId id : ids) rel.emplace_back(id, bit);
}

StepFeatures FeatureCursor::features() const {
  StepFeatures f;
  const int s = state();
  f.state = static_cast<std::uint8_t>(s);

  const std::uint64_t cat = fnv1a64(ctx_.goal_first);
  const std::uint64_t hist = std::min<std::size_t>(ctx_.history.size(), 7);
  const std::uint64_t last = ctx_.history.empty() ? 0 : fnv1a64(ctx_.history.back().name);
  const std::uint64_t pending = std::min(ctx_.pending_quoted, 3);
  const std::uint64_t role = fnv1a64(named_role_);
  const std::uint64_t op = fnv1a64(named_op_);
  const std::uint64_t pos = std::min<std::size_t>(length_ / 4, 15);
  auto row = [&](std::uint64_t tag, std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = mix64(tag, static_cast<std::uint64_t>(s));
    for (auto p : parts) h = mix64(h, p);
    return static_cast<std::uint32_t>(h % rows_);
  };
  f.rows = {row(1, {}),
            row(2, {prev_}),
            row(3, {prev_, prev2_}),
            row(4, {cat}),
            row(5, {cat, hist}),
            row(6, {cat, last, pending}),
            row(7, {cat, role}),
            row(8, {role, op}),
            row(9, {pos})};
  f.rel_row = static_cast<std::uint32_t>(mix64(mix64(10, static_cast<std::uint64_t>(s)), cat) % rel_rows_);

  auto& rel = f.rel;
  const Action* last_action = ctx_.history.empty() ? nullptr : &ctx_.history.back();
  auto line_string = [&](int i) {
    const AxLine& l = ctx_.lines[i];
    return " " + l.role + (l.text.empty() ? "" : " " + l.text);
  };
  auto word_bits = [&](Relation r, const std::vector<TokenId>& ids) {
    for (TokenId id : ids) rel.emplace_back(id, 1u << r);
  };

  if (seg_ == Segment::kThink && keyword_ == 2) {
    if (ctx_.best >= 0) add_suggestion(rel, slot_, line_string(ctx_.best), tok_dot_, kRelTargetBest);
    std::set<std::string> roles_seen;
    for (int i : ctx_.candidates) {
      std::string ls = line_string(i);
      if (ctx_.is_fresh(i) && roles_seen.insert(ctx_.lines[i].role).second) {
        add_suggestion(rel, slot_, ls, tok_dot_, kRelTargetFirstOfRole);
      }
      if (ctx_.overlap[i] > 0) add_suggestion(rel, slot_, ls, tok_dot_, kRelTargetGoal);
      add_suggestion(rel, slot_, ls, tok_dot_, kRelTargetAny);
      if (last_action && contains(last_action->params, ctx_.lines[i].bid)) {
        add_suggestion(rel, slot_, ls, tok_dot_, kRelTargetLast);
      }
    }
    for (int i : ctx_.value_cells) add_suggestion(rel, slot_, line_string(i), tok_dot_, kRelTargetValueCell);
  } else if (seg_ == Segment::kThink && keyword_ == 3) {
    if (last_action) add_suggestion(rel, slot_, " " + last_action->name, tok_dot_, kRelOpLast);
  } else if (seg_ == Segment::kThink && keyword_ == 4) {
    if (!ctx_.value_quoted_fresh.empty()) {
      add_suggestion(rel, slot_, " " + ctx_.value_quoted_fresh, tok_dot_, kRelValueQuotedFresh);
    }
    for (const auto& q : ctx_.goal_quoted) add_suggestion(rel, slot_, " " + q, tok_dot_, kRelValueGoal);
    for (const auto& w : ctx_.goal_words) add_suggestion(rel, slot_, " " + w, tok_dot_, kRelValueGoal);
    if (named_ >= 0) {
      const AxLine& nl = ctx_.lines[named_];
      if (!nl.text.empty()) {
        add_suggestion(rel, slot_, " " + nl.text, tok_dot_, kRelValueNamedText);
        // "<label> 'x'" or "<label> is 'x'"
        for (size_t p = ctx_.goal.find(nl.text); p != std::string::npos; p = ctx_.goal.find(nl.text, p + 1)) {
          size_t q = p + nl.text.size();
          if (ctx_.goal.compare(q, 4, " is ") == 0) q += 3;
          if (ctx_.goal.compare(q, 2, " '") != 0) continue;
          size_t e = ctx_.goal.find('\'', q + 2);
          if (e == std::string::npos) continue;
          add_suggestion(rel, slot_, " " + ctx_.goal.substr(q + 2, e - q - 2), tok_dot_, kRelValueAssoc);
          break;
        }
      }
      // Options of the named element: all of them, and the one the goal mentions first.
      std::string best_option;
      size_t best_pos = std::string::npos;
      for (size_t i = static_cast<size_t>(named_) + 1; i < ctx_.lines.size(); ++i) {
        const AxLine& o = ctx_.lines[i];
        if (o.depth <= nl.depth) break;
        if (o.role != "option") continue;
        add_suggestion(rel, slot_, " " + o.text, tok_dot_, kRelOptionAny);
        if (contains(ctx_.history_values, o.text)) continue;
        auto it = std::find(ctx_.goal_words.begin(), ctx_.goal_words.end(), o.text);
        size_t gp = static_cast<size_t>(it - ctx_.goal_words.begin());
        if (it != ctx_.goal_words.end() && gp < best_pos) {
          best_pos = gp;
          best_option = o.text;
        }
      }
      if (!best_option.empty()) add_suggestion(rel, slot_, " " + best_option, tok_dot_, kRelValueOption);
    }
  } else if (seg_ == Segment::kAction && phase_ == Phase::kName) {
    if (!named_op_.empty()) add_suggestion(rel, arg_text_, named_op_, tok_paren_, kRelNameFromThink);
    if (last_action) add_suggestion(rel, arg_text_, last_action->name, tok_paren_, kRelNameLast);
  } else if (seg_ == Segment::kAction && phase_ == Phase::kInArg) {
    if (arg_ == 0 && first_arg_is_bid_) {
      if (named_ >= 0) add_suggestion(rel, arg_text_, ctx_.lines[named_].bid, tok_quote_, kRelBidNamed);
      for (int i : ctx_.candidates) add_suggestion(rel, arg_text_, ctx_.lines[i].bid, tok_quote_, kRelBidAny);
      if (last_action && !last_action->params.empty() && is_element_id(last_action->params[0])) {
        add_suggestion(rel, arg_text_, last_action->params[0], tok_quote_, kRelBidLast);
      }
    }
    if (!think_value_.empty()) add_suggestion(rel, arg_text_, think_value_, tok_quote_, kRelArgFromThink);
    if (last_action && !last_action->params.empty() && !is_element_id(last_action->params.back())) {
      add_suggestion(rel, arg_text_, last_action->params.back(), tok_quote_, kRelArgLast);
    }
  }
  if (seg_ == Segment::kThink || (seg_ == Segment::kAction && phase_ == Phase::kInArg)) {
    word_bits(kRelInGoal, ctx_.goal_tokens);
    word_bits(kRelInHistory, ctx_.history_tokens);
  }

  std::sort(rel.begin(), rel.end());
  // Merge bits of repeated tokens.
  std::size_t out = 0;
  for (std::size_t i = 0; i < rel.size(); ++i) {
    if (out > 0 && rel[out - 1].first == rel[i].first) {
      rel[out - 1].second |= rel[i].second;
    } else {
      rel[out++] = rel[i];
    }
  }
  rel.resize(out);
  return f;
}

void FeatureCursor::close_think_slot() {
  if (keyword_ == 2) {
    auto words = split_words(slot_);
    named_role_ = words.empty() ? "" : words[0];
    std::string text;
    for (size_t i = 1; i < words.size(); ++i) text += (i > 1 ? " " : "") + words[i];
    named_ = -1;
    for (int pass = 0; pass < 2 && named_ < 0; ++pass) {
      for (int i : ctx_.candidates) {
        const AxLine& l = ctx_.lines[i];
        if (l.role == named_role_ && l.text == text && (pass == 1 || ctx_.is_fresh(i))) {
          named_ = i;
          break;
        }
      }
    }
  } else if (keyword_ == 3) {
    named_op_ = trim_copy(slot_);
  } else if (keyword_ == 4) {
    think_value_ = trim_copy(slot_);
  }
}

void FeatureCursor::push(TokenId t) {
  ++length_;
  prev2_ = prev_;
  prev_ = t;
  const std::string& text = vocab_.text(t);
  switch (seg_) {
    case Segment::kPre:
      if (t == tok_think_open_) {
        seg_ = Segment::kThink;
        keyword_ = 0;
        slot_words_ = 0;
        slot_.clear();
        at_boundary_ = true;
      }
      return;
    case Segment::kThink: {
      if (t == tok_think_close_) {
        close_think_slot();
        seg_ = Segment::kMid;
        return;
      }
      if (t == tok_dot_) {
        close_think_slot();
        keyword_ = 0;
        slot_words_ = 0;
        slot_.clear();
        at_boundary_ = true;
        return;
      }
      if (at_boundary_) {
        auto it = std::find(tok_keywords_.begin(), tok_keywords_.end(), t);
        if (it != tok_keywords_.end()) {
          keyword_ = 1 + static_cast<int>(it - tok_keywords_.begin());
          slot_words_ = 0;
          slot_.clear();
          at_boundary_ = false;
          return;
        }
      }
      at_boundary_ = false;
      if (!text.empty() && text[0] == ' ') ++slot_words_;
      slot_ += text;
      return;
    }
    case Segment::kMid:
      if (t == tok_action_open_) {
        seg_ = Segment::kAction;
        phase_ = Phase::kName;
        first_arg_is_bid_ = true;
        arg_ = 0;
        arg_tokens_ = 0;
        arg_text_.clear();
      }
      return;
    case Segment::kAction:
      break;
    case Segment::kPost:
      return;
  }
  if (t == tok_action_close_) {
    seg_ = Segment::kPost;
    return;
  }
  switch (phase_) {
    case Phase::kName:
      if (t == tok_paren_) {
        phase_ = Phase::kAfterParen;
        const ActionSpec* spec = standard_space().find(trim_copy(arg_text_));
        first_arg_is_bid_ = !spec || (!spec->args.empty() && spec->args[0] == ArgKind::kElementId);
      } else {
        arg_text_ += text;
        ++arg_tokens_;
      }
      break;
    case Phase::kAfterParen:
      if (t == tok_quote_) {
        phase_ = Phase::kInArg;
        arg_tokens_ = 0;
        arg_text_.clear();
      } else if (t == tok_close_paren_) {
        phase_ = Phase::kAfterClose;
      } else {
        phase_ = Phase::kBroken;
      }
      break;
    case Phase::kInArg:
      if (t == tok_quote_) {
        phase_ = Phase::kAfterArg;
      } else {
        arg_text_ += text;
        ++arg_tokens_;
      }
      break;
    case Phase::kAfterArg:
      if (t == tok_comma_) {
        phase_ = Phase::kAfterComma;
      } else if (t == tok_close_paren_) {
        phase_ = Phase::kAfterClose;
      } else {
        phase_ = Phase::kBroken;
      }
      break;
    case Phase::kAfterComma:
      if (t == tok_space_quote_) {
        phase_ = Phase::kInArg;
        ++arg_;
        arg_tokens_ = 0;
        arg_text_.clear();
      } else {
        phase_ = Phase::kBroken;
      }
      break;
    case Phase::kAfterClose:
    case Phase::kBroken:
      phase_ = Phase::kBroken;
      break;
  }
}

}  // namespace webrl
