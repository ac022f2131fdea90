#include "webrl/axtree.hpp"

#include <regex>

namespace webrl {

std::vector<AxLine> parse_axtree(std::string_view text) {
  static const std::regex re(R"(^( *)(?:\[([A-Za-z0-9]+)\] )?([A-Za-z]+) '([^']*)'(?:, value='([^']*)')?(, visible)?$)");
  std::vector<AxLine> out;
  std::vector<int> stack;  // index of the last line seen at each depth
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string line(text.substr(pos, nl - pos));
    pos = nl + 1;
    std::smatch m;
    if (!std::regex_match(line, m, re)) continue;
    AxLine a;
    a.depth = static_cast<int>(m[1].length() / 2);
    a.bid = m[2];
    a.role = m[3];
    a.text = m[4];
    a.has_value = m[5].matched;
    a.value = m[5];
    a.visible = m[6].matched;
    if (a.depth > 0 && static_cast<size_t>(a.depth) <= stack.size()) a.parent = stack[a.depth - 1];
    stack.resize(a.depth);
    stack.push_back(static_cast<int>(out.size()));
    out.push_back(std::move(a));
  }
  return out;
}

const AxLine* find_line(const std::vector<AxLine>& lines, std::string_view bid) {
  for (const auto& l : lines) {
    if (!l.bid.empty() && l.bid == bid) return &l;
  }
  return nullptr;
}

}  // namespace webrl
