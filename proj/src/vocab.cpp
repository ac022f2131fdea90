#include "webrl/vocab.hpp"

#include <set>

#include "webrl/error.hpp"
#include "webrl/prompt_template.hpp"

namespace webrl {

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.empty() || !tokens_[0].empty()) {
    throw Error(ErrorCode::kInvalidConfig, "vocab must start with the empty end-of-sequence token");
  }
  trie_.emplace_back();
  for (TokenId id = 0; id < tokens_.size(); ++id) {
    const std::string& t = tokens_[id];
    if (id > 0 && t.empty()) throw Error(ErrorCode::kInvalidConfig, "empty token besides end-of-sequence");
    if (!index_.emplace(t, id).second) throw Error(ErrorCode::kInvalidConfig, "duplicate token '" + t + "'");
    if (id == 0) continue;
    std::uint32_t node = 0;
    for (char c : t) {
      auto it = trie_[node].next.find(c);
      if (it == trie_[node].next.end()) {
        trie_.emplace_back();
        std::uint32_t child = static_cast<std::uint32_t>(trie_.size() - 1);
        trie_[node].next.emplace(c, child);
        node = child;
      } else {
        node = it->second;
      }
    }
    trie_[node].token = id;
  }
}

Vocab Vocab::build(const std::vector<std::string>& words) {
  std::vector<std::string> tokens{""};
  std::set<std::string> seen{""};
  auto add = [&](const std::string& t) {
    if (seen.insert(t).second) tokens.push_back(t);
  };
  for (auto t : {kThinkOpen, kThinkClose, kActionOpen, kActionClose}) add(std::string(t));
  for (const char* p : {"(", ")", "'", " '", ",", ".", " .", " "}) add(p);
  for (char d = '0'; d <= '9'; ++d) add(std::string(1, d));
  for (int i = 0; i < 100; ++i) add((i < 10 ? "0" : "") + std::to_string(i));
  for (char d = '1'; d <= '9'; ++d) add(std::string("a") + d);
  for (const auto& w : words) {
    if (w.empty()) continue;
    add(w);
    add(" " + w);
  }
  return Vocab(std::move(tokens));
}

std::int64_t Vocab::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

std::vector<TokenId> Vocab::tokenize(std::string_view text) const {
  std::vector<TokenId> out;
  size_t pos = 0;
  while (pos < text.size()) {
    std::uint32_t node = 0;
    std::int64_t best = -1;
    size_t best_len = 0;
    for (size_t i = pos; i < text.size(); ++i) {
      auto it = trie_[node].next.find(text[i]);
      if (it == trie_[node].next.end()) break;
      node = it->second;
      if (trie_[node].token >= 0) {
        best = trie_[node].token;
        best_len = i - pos + 1;
      }
    }
    if (best < 0) {
      throw Error(ErrorCode::kOovToken, "no token matches at offset " + std::to_string(pos) + " of '" +
                                            std::string(text) + "'");
    }
    out.push_back(static_cast<TokenId>(best));
    pos += best_len;
  }
  return out;
}

std::string Vocab::decode(const std::vector<TokenId>& ids) const {
  std::string out;
  for (TokenId id : ids) out += tokens_.at(id);
  return out;
}

void Vocab::prefixes_of(std::string_view s, std::vector<TokenId>& out) const {
  std::uint32_t node = 0;
  for (char c : s) {
    auto it = trie_[node].next.find(c);
    if (it == trie_[node].next.end()) return;
    node = it->second;
    if (trie_[node].token >= 0) out.push_back(static_cast<TokenId>(trie_[node].token));
  }
}

}  // namespace webrl
