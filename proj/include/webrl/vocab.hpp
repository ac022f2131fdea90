#pragma once

// Closed token vocabulary and greedy longest-match tokenizer.
//
// Token 0 is the end-of-sequence marker (empty text). Words occur twice, bare
// and with a leading space; element ids split into a letter+digit head
// ("a1".."a9") and two-digit tails, so every bid of the simulated pages is
// covered without one token per bid.

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace webrl {

using TokenId = std::uint32_t;

class Vocab {
 public:
  static constexpr TokenId kEos = 0;

  Vocab() = default;
  // tokens[0] must be the empty EOS token; duplicates are rejected.
  explicit Vocab(std::vector<std::string> tokens);

  // Fixed tags, punctuation, bid pieces and digits, plus `words`.
  static Vocab build(const std::vector<std::string>& words);

  size_t size() const { return tokens_.size(); }
  const std::string& text(TokenId id) const { return tokens_[id]; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  // -1 when absent.
  std::int64_t find(std::string_view token) const;

  // Throws kOovToken when some position cannot be matched.
  std::vector<TokenId> tokenize(std::string_view text) const;
  std::string decode(const std::vector<TokenId>& ids) const;

  // Ids of all tokens that are a non-empty prefix of s, shortest first.
  void prefixes_of(std::string_view s, std::vector<TokenId>& out) const;

 private:
  struct Node {
    std::unordered_map<char, std::uint32_t> next;
    std::int64_t token = -1;
  };
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  std::vector<Node> trie_;
};

}  // namespace webrl
