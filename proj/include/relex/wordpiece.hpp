#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "relex/vocab.hpp"

namespace relex {

inline constexpr std::size_t kMaxWordpieceInputChars = 100;

/// ASCII lowercasing for the uncased vocabulary.
inline std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80) c = static_cast<char>(std::tolower(u));
  }
  return out;
}

namespace detail {
inline bool utf8_boundary(std::string_view s, std::size_t pos) {
  return pos == 0 || pos >= s.size() || (static_cast<unsigned char>(s[pos]) & 0xC0) != 0x80;
}
}  // namespace detail

/// Greedy longest-match-first segmentation of one word. A word that cannot be
/// covered completely becomes a single [UNK].
inline void wordpiece_word(std::string_view word, const Vocabulary& vocab, std::vector<std::string>& out) {
  if (is_reserved_token(word)) {
    out.emplace_back(word);
    return;
  }
  if (word.size() > kMaxWordpieceInputChars) {
    out.emplace_back(kUnkToken);
    return;
  }
  std::vector<std::string> pieces;
  std::size_t start = 0;
  while (start < word.size()) {
    std::size_t end = word.size();
    std::string match;
    while (start < end) {
      if (detail::utf8_boundary(word, end)) {
        std::string candidate = start > 0 ? "##" : "";
        candidate.append(word.substr(start, end - start));
        if (vocab.contains(candidate)) {
          match = std::move(candidate);
          break;
        }
      }
      --end;
    }
    if (match.empty()) {
      out.emplace_back(kUnkToken);
      return;
    }
    pieces.push_back(std::move(match));
    start = end;
  }
  for (auto& p : pieces) out.push_back(std::move(p));
}

/// Subword segmentation of already split, lowercased tokens.
inline std::vector<std::string> wordpiece_tokenize(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(tokens.size() * 2);
  for (const auto& t : tokens) wordpiece_word(t, vocab, out);
  return out;
}

}  // namespace relex
