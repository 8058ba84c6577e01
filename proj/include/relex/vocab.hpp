#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace relex {

inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";
inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kE1Open = "e11";
inline constexpr std::string_view kE1Close = "e12";
inline constexpr std::string_view kE2Open = "e21";
inline constexpr std::string_view kE2Close = "e22";
inline constexpr std::string_view kIndicatorOpen = "#";
inline constexpr std::string_view kIndicatorClose = "$";

inline constexpr std::array<std::string_view, 10> kReservedTokens = {
    kClsToken, kSepToken, kPadToken, kUnkToken, kE1Open, kE1Close, kE2Open, kE2Close, kIndicatorOpen,
    kIndicatorClose};

inline bool is_reserved_token(std::string_view t) {
  for (auto r : kReservedTokens)
    if (r == t) return true;
  return false;
}

/// Subword vocabulary; id = position in the token list (line number of the
/// vocabulary file, 0-based). Reserved tokens missing from the input are
/// appended in kReservedTokens order.
class Vocabulary {
 public:
  Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

  explicit Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (!ids_.emplace(tokens_[i], static_cast<int>(i)).second)
        throw std::invalid_argument("duplicate vocabulary entry '" + tokens_[i] + "'");
    }
    for (auto r : kReservedTokens) {
      if (!ids_.contains(std::string(r))) {
        ids_.emplace(std::string(r), static_cast<int>(tokens_.size()));
        tokens_.emplace_back(r);
      }
    }
  }

  static Vocabulary from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vocabulary file '" + path + "'");
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      tokens.push_back(line);
    }
    return Vocabulary(std::move(tokens));
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write vocabulary file '" + path + "'");
    for (const auto& t : tokens_) out << t << '\n';
  }

  [[nodiscard]] std::optional<int> find(std::string_view token) const {
    const auto it = ids_.find(std::string(token));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  [[nodiscard]] bool contains(std::string_view token) const { return find(token).has_value(); }

  /// Id of `token`, or the [UNK] id.
  [[nodiscard]] int id(std::string_view token) const { return find(token).value_or(unk_id()); }

  [[nodiscard]] const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  [[nodiscard]] int size() const { return static_cast<int>(tokens_.size()); }
  [[nodiscard]] const std::vector<std::string>& tokens() const { return tokens_; }

  [[nodiscard]] int cls_id() const { return *find(kClsToken); }
  [[nodiscard]] int sep_id() const { return *find(kSepToken); }
  [[nodiscard]] int pad_id() const { return *find(kPadToken); }
  [[nodiscard]] int unk_id() const { return *find(kUnkToken); }

  /// FNV-1a over the newline-joined token list; identifies the id mapping.
  [[nodiscard]] std::uint64_t hash() const {
    std::uint64_t h = 14695981039346656037ULL;
    auto mix = [&h](unsigned char c) {
      h ^= c;
      h *= 1099511628211ULL;
    };
    for (const auto& t : tokens_) {
      for (const char c : t) mix(static_cast<unsigned char>(c));
      mix('\n');
    }
    return h;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

}  // namespace relex
