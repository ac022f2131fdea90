#include "webrl/action.hpp"

#include <cctype>
#include <set>

namespace webrl {

std::string_view to_string(ArgKind kind) {
  switch (kind) {
    case ArgKind::kElementId: return "element";
    case ArgKind::kFreeText: return "text";
    case ArgKind::kUrl: return "url";
  }
  return "text";
}

ArgKind arg_kind_from_string(std::string_view s) {
  if (s == "element") return ArgKind::kElementId;
  if (s == "text") return ArgKind::kFreeText;
  if (s == "url") return ArgKind::kUrl;
  throw Error(ErrorCode::kInvalidConfig, "unknown argument kind '" + std::string(s) + "'");
}

std::string_view to_string(MatchLevel m) {
  switch (m) {
    case MatchLevel::kNone: return "none";
    case MatchLevel::kTypeOnly: return "type_only";
    case MatchLevel::kFull: return "full";
  }
  return "none";
}

ActionSpace::ActionSpace(std::vector<ActionSpec> specs) : specs_(std::move(specs)) {
  if (specs_.empty()) throw Error(ErrorCode::kInvalidConfig, "action space is empty");
  std::set<std::string> seen;
  for (const auto& s : specs_) {
    if (s.name.empty()) throw Error(ErrorCode::kInvalidConfig, "action spec without a name");
    if (!seen.insert(s.name).second) {
      throw Error(ErrorCode::kInvalidConfig, "duplicate action spec '" + s.name + "'");
    }
  }
}

ActionSpace ActionSpace::standard() {
  using K = ArgKind;
  return ActionSpace({
      {"click", {K::kElementId}, "Click an element."},
      {"fill", {K::kElementId, K::kFreeText}, "Fill a text field with a value."},
      {"select_option", {K::kElementId, K::kFreeText}, "Select an option of a combobox."},
      {"press", {K::kElementId, K::kFreeText}, "Press a key while an element has focus."},
      {"check", {K::kElementId}, "Tick a checkbox."},
      {"goto", {K::kUrl}, "Navigate to a URL."},
      {"scroll", {K::kFreeText}, "Scroll the page ('up' or 'down')."},
      {"send_msg_to_user", {K::kFreeText}, "Send a text answer to the user."},
  });
}

const ActionSpec* ActionSpace::find(std::string_view name) const {
  for (const auto& s : specs_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::string ActionSpace::describe() const {
  std::string out;
  for (const auto& s : specs_) {
    out += s.name + "(";
    for (size_t i = 0; i < s.args.size(); ++i) {
      if (i) out += ", ";
      switch (s.args[i]) {
        case ArgKind::kElementId: out += "bid"; break;
        case ArgKind::kFreeText: out += "text"; break;
        case ArgKind::kUrl: out += "url"; break;
      }
    }
    out += ")\n    " + s.doc + "\n";
  }
  return out;
}

bool is_element_id(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

namespace {

class CallParser {
 public:
  explicit CallParser(std::string_view text) : s_(text) {}

  Action parse() {
    skip_ws();
    Action a;
    size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
      ++pos_;
    }
    if (pos_ == start || std::isdigit(static_cast<unsigned char>(s_[start]))) {
      fail("expected an operation name");
    }
    a.name = std::string(s_.substr(start, pos_ - start));
    skip_ws();
    expect('(');
    skip_ws();
    if (peek() == ')') {
      ++pos_;
    } else {
      while (true) {
        skip_ws();
        a.params.push_back(quoted());
        skip_ws();
        char c = peek();
        if (c == ',') {
          ++pos_;
          continue;
        }
        if (c == ')') {
          ++pos_;
          break;
        }
        fail("expected ',' or ')'");
      }
    }
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected text after ')'");
    return a;
  }

 private:
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string quoted() {
    char q = peek();
    if (q != '\'' && q != '"') fail("arguments must be quoted strings");
    ++pos_;
    std::string out;
    while (true) {
      if (pos_ >= s_.size()) fail("unbalanced quote");
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) fail("dangling escape");
        out.push_back(s_[pos_++]);
      } else if (c == q) {
        return out;
      } else {
        out.push_back(c);
      }
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::kSyntaxError, msg + " at offset " + std::to_string(pos_) + " in '" +
                                             std::string(s_) + "'");
  }

  std::string_view s_;
  size_t pos_ = 0;
};

}  // namespace

Action parse_call(std::string_view text) { return CallParser(text).parse(); }

Action parse_action(std::string_view text, const ActionSpace& space) {
  Action a = parse_call(text);
  const ActionSpec* spec = space.find(a.name);
  if (!spec) throw Error(ErrorCode::kUnknownAction, "'" + a.name + "' is not in the action space");
  if (spec->args.size() != a.params.size()) {
    throw Error(ErrorCode::kArityMismatch, a.name + " takes " + std::to_string(spec->args.size()) +
                                               " argument(s), got " + std::to_string(a.params.size()));
  }
  for (size_t i = 0; i < a.params.size(); ++i) {
    if (spec->args[i] == ArgKind::kElementId && !is_element_id(a.params[i])) {
      throw Error(ErrorCode::kSyntaxError, "'" + a.params[i] + "' is not a valid element id");
    }
  }
  return a;
}

std::optional<Action> try_parse_action(std::string_view text, const ActionSpace& space) noexcept {
  try {
    return parse_action(text, space);
  } catch (...) {
    return std::nullopt;
  }
}

std::string serialize_action(const Action& a) {
  std::string out = a.name + "(";
  for (size_t i = 0; i < a.params.size(); ++i) {
    if (i) out += ", ";
    out += '\'';
    for (char c : a.params[i]) {
      if (c == '\'' || c == '\\') out += '\\';
      out += c;
    }
    out += '\'';
  }
  out += ')';
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

MatchLevel actions_equal(const Action& pred, const Action& gt) {
  if (pred.name != gt.name) return MatchLevel::kNone;
  if (pred.params.size() != gt.params.size()) return MatchLevel::kTypeOnly;
  for (size_t i = 0; i < gt.params.size(); ++i) {
    if (trim(pred.params[i]) != trim(gt.params[i])) return MatchLevel::kTypeOnly;
  }
  return MatchLevel::kFull;
}

}  // namespace webrl
