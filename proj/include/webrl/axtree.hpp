#pragma once

// Reader for serialized observations (one element per line):
//
//   {indent}[bid] role 'text', value='v', visible

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace webrl {

struct AxLine {
  int depth = 0;
  std::string bid;
  std::string role;
  std::string text;
  std::string value;
  bool has_value = false;
  bool visible = false;
  int parent = -1;  // index of the enclosing line, -1 at the root
};

// Lines that do not match the element format are skipped.
std::vector<AxLine> parse_axtree(std::string_view text);

const AxLine* find_line(const std::vector<AxLine>& lines, std::string_view bid);

}  // namespace webrl
