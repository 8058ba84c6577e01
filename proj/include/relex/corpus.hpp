#pragma once

#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "relex/label.hpp"

namespace relex {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class AlignmentError : public std::runtime_error {
 public:
  AlignmentError(long instance_id, const std::string& what)
      : std::runtime_error("instance " + std::to_string(instance_id) + ": " + what),
        instance_id_(instance_id) {}

  [[nodiscard]] long instance_id() const { return instance_id_; }

 private:
  long instance_id_;
};

/// Half-open token range [begin, end).
struct TokenSpan {
  int begin = 0;
  int end = 0;

  [[nodiscard]] int size() const { return end - begin; }
  [[nodiscard]] bool contains(int i) const { return i >= begin && i < end; }
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

/// Byte range [begin, end) into RawInstance::text.
struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct RawInstance {
  long id = 0;
  std::string text;  // entity tags stripped
  CharSpan e1_chars;
  CharSpan e2_chars;
  TokenSpan e1_span;
  TokenSpan e2_span;
  RelationLabel label;
  std::optional<std::string> comment;

  friend bool operator==(const RawInstance&, const RawInstance&) = default;
};

struct AnnotatedToken {
  std::string surface;
  std::string pos;
  std::string ner = "O";
  int index = 0;

  friend bool operator==(const AnnotatedToken&, const AnnotatedToken&) = default;
};

struct AnnotatedInstance {
  RawInstance raw;
  std::vector<AnnotatedToken> tokens;
};

namespace detail {

inline bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace detail

/// Whitespace-plus-punctuation tokenization: whitespace separates tokens and
/// every ASCII punctuation character is a token of its own. Bytes >= 0x80 are
/// treated as word characters so UTF-8 sequences stay intact.
inline std::vector<std::string> tokenize_text(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (detail::is_space(c)) {
      if (!current.empty()) tokens.push_back(std::move(current)), current.clear();
    } else if (c < 0x80 && std::ispunct(c)) {
      if (!current.empty()) tokens.push_back(std::move(current)), current.clear();
      tokens.emplace_back(1, ch);
    } else {
      current.push_back(ch);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

/// Tokens of an instance: entity boundaries are always token boundaries, so
/// the text is tokenized piecewise around the two entity ranges.
inline std::vector<std::string> instance_tokens(const RawInstance& raw) {
  const std::string_view text = raw.text;
  std::vector<std::string> tokens;
  auto append = [&](std::size_t b, std::size_t e) {
    for (auto& t : tokenize_text(text.substr(b, e - b))) tokens.push_back(std::move(t));
  };
  append(0, raw.e1_chars.begin);
  append(raw.e1_chars.begin, raw.e1_chars.end);
  append(raw.e1_chars.end, raw.e2_chars.begin);
  append(raw.e2_chars.begin, raw.e2_chars.end);
  append(raw.e2_chars.end, text.size());
  return tokens;
}

/// Parses the quoted sentence line of a record (`<id>\t"...<e1>..</e1>..<e2>..</e2>.."`).
inline RawInstance parse_sentence_line(std::string_view line, const std::string& source,
                                       std::size_t line_no) {
  auto fail = [&](const std::string& what) -> ParseError { return ParseError(source, line_no, what); };

  line = detail::strip_cr(line);
  const auto tab = line.find('\t');
  if (tab == std::string_view::npos) throw fail("expected '<id><TAB>\"sentence\"'");

  RawInstance raw;
  const auto id_text = line.substr(0, tab);
  const auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), raw.id);
  if (ec != std::errc() || ptr != id_text.data() + id_text.size() || raw.id <= 0)
    throw fail("invalid instance id '" + std::string(id_text) + "'");

  auto quoted = line.substr(tab + 1);
  if (quoted.size() < 2 || quoted.front() != '"') throw fail("missing opening quote");
  if (quoted.back() != '"') throw fail("missing closing quote");
  const auto tagged = quoted.substr(1, quoted.size() - 2);

  const auto o1 = tagged.find("<e1>");
  const auto c1 = tagged.find("</e1>");
  const auto o2 = tagged.find("<e2>");
  const auto c2 = tagged.find("</e2>");
  if (o1 == std::string_view::npos) throw fail("missing <e1> tag");
  if (c1 == std::string_view::npos) throw fail("missing </e1> tag");
  if (o2 == std::string_view::npos) throw fail("missing <e2> tag");
  if (c2 == std::string_view::npos) throw fail("missing </e2> tag");
  if (o2 < o1) throw fail("e2 precedes e1");
  if (!(o1 < c1 && c1 < o2 && o2 < c2)) throw fail("entity tags are interleaved or out of order");
  for (std::string_view tag : {"<e1>", "</e1>", "<e2>", "</e2>"}) {
    if (tagged.find(tag, tagged.find(tag) + 1) != std::string_view::npos)
      throw fail("duplicate " + std::string(tag) + " tag");
  }

  raw.text.reserve(tagged.size());
  raw.text.append(tagged.substr(0, o1));
  raw.e1_chars.begin = raw.text.size();
  raw.text.append(tagged.substr(o1 + 4, c1 - o1 - 4));
  raw.e1_chars.end = raw.text.size();
  raw.text.append(tagged.substr(c1 + 5, o2 - c1 - 5));
  raw.e2_chars.begin = raw.text.size();
  raw.text.append(tagged.substr(o2 + 4, c2 - o2 - 4));
  raw.e2_chars.end = raw.text.size();
  raw.text.append(tagged.substr(c2 + 5));

  const std::string_view text = raw.text;
  auto count = [&](std::size_t b, std::size_t e) {
    return static_cast<int>(tokenize_text(text.substr(b, e - b)).size());
  };
  const int before = count(0, raw.e1_chars.begin);
  const int e1 = count(raw.e1_chars.begin, raw.e1_chars.end);
  const int mid = count(raw.e1_chars.end, raw.e2_chars.begin);
  const int e2 = count(raw.e2_chars.begin, raw.e2_chars.end);
  if (e1 == 0) throw fail("empty e1 entity");
  if (e2 == 0) throw fail("empty e2 entity");
  raw.e1_span = {before, before + e1};
  raw.e2_span = {before + e1 + mid, before + e1 + mid + e2};
  return raw;
}

/// Reads SemEval-2010 Task 8 records: sentence line, label line, `Comment:`
/// line, blank line. Blank lines between records are tolerated.
inline std::vector<RawInstance> parse_semeval(std::istream& in, const std::string& source = "<stream>") {
  std::vector<RawInstance> out;
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    return true;
  };

  while (next()) {
    if (detail::trim(line).empty()) continue;
    const std::size_t record_line = line_no;
    RawInstance raw = parse_sentence_line(line, source, record_line);

    if (!next()) throw ParseError(source, line_no + 1, "record truncated: missing relation label");
    try {
      raw.label = parse_label(line);
    } catch (const LabelError& e) {
      throw ParseError(source, line_no, e.what());
    }

    if (!next()) throw ParseError(source, line_no + 1, "record truncated: missing Comment line");
    const auto comment_line = detail::strip_cr(line);
    if (comment_line.substr(0, 8) != "Comment:") throw ParseError(source, line_no, "expected 'Comment:' line");
    const auto comment = detail::trim(comment_line.substr(8));
    if (!comment.empty()) raw.comment = std::string(comment);

    if (next() && !detail::trim(line).empty())
      throw ParseError(source, line_no, "expected blank line after record");
    out.push_back(std::move(raw));
  }
  return out;
}

inline std::vector<RawInstance> parse_semeval_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file '" + path + "'");
  return parse_semeval(in, path);
}

/// Writes one record in distribution format (including the trailing blank line).
inline std::string serialize_instance(const RawInstance& raw) {
  const std::string_view t = raw.text;
  std::string out = std::to_string(raw.id) + "\t\"";
  out.append(t.substr(0, raw.e1_chars.begin));
  out += "<e1>";
  out.append(t.substr(raw.e1_chars.begin, raw.e1_chars.end - raw.e1_chars.begin));
  out += "</e1>";
  out.append(t.substr(raw.e1_chars.end, raw.e2_chars.begin - raw.e1_chars.end));
  out += "<e2>";
  out.append(t.substr(raw.e2_chars.begin, raw.e2_chars.end - raw.e2_chars.begin));
  out += "</e2>";
  out.append(t.substr(raw.e2_chars.end));
  out += "\"\n" + raw.label.to_string() + "\nComment:";
  if (raw.comment) out += " " + *raw.comment;
  out += "\n\n";
  return out;
}

/// Penn Treebank tags plus the punctuation tags emitted by common taggers.
inline bool is_penn_tag(std::string_view tag) {
  static const std::unordered_set<std::string_view> tags = {
      "CC",  "CD",   "DT",  "EX",  "FW",  "IN",    "JJ",    "JJR", "JJS", "LS",  "MD",   "NN",
      "NNS", "NNP",  "NNPS", "PDT", "POS", "PRP",  "PRP$",  "RB",  "RBR", "RBS", "RP",   "SYM",
      "TO",  "UH",   "VB",  "VBD", "VBG", "VBN",   "VBP",   "VBZ", "WDT", "WP",  "WP$",  "WRB",
      ".",   ",",    ":",   "``",  "''",  "-LRB-", "-RRB-", "(",   ")",   "#",   "$",    "HYPH",
      "NFP", "ADD",  "AFX", "GW",  "XX",  "-NONE-"};
  return tags.contains(tag);
}

/// One token-annotation block per sentence; lines are `<surface>\t<POS>\t<NER>`.
inline std::vector<std::vector<AnnotatedToken>> parse_annotations(std::istream& in,
                                                                  const std::string& source = "<stream>") {
  std::vector<std::vector<AnnotatedToken>> blocks;
  std::vector<AnnotatedToken> current;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = detail::strip_cr(line);
    if (detail::trim(view).empty()) {
      if (!current.empty()) blocks.push_back(std::move(current)), current.clear();
      continue;
    }
    const auto fields = detail::split(view, '\t');
    if (fields.size() != 3) throw ParseError(source, line_no, "expected <surface><TAB><POS><TAB><NER>");
    if (!is_penn_tag(fields[1]))
      throw ParseError(source, line_no, "unknown Penn Treebank tag '" + std::string(fields[1]) + "'");
    if (fields[0].empty() || fields[2].empty()) throw ParseError(source, line_no, "empty annotation field");
    AnnotatedToken tok;
    tok.surface = std::string(fields[0]);
    tok.pos = std::string(fields[1]);
    tok.ner = std::string(fields[2]);
    tok.index = static_cast<int>(current.size());
    current.push_back(std::move(tok));
  }
  if (!current.empty()) blocks.push_back(std::move(current));
  return blocks;
}

/// Pairs instances with annotation blocks in order. Token surfaces come from
/// the corpus tokenization; the block supplies POS and NER. Counts must match.
inline std::vector<AnnotatedInstance> attach_annotations(
    const std::vector<RawInstance>& instances, const std::vector<std::vector<AnnotatedToken>>& blocks) {
  std::vector<AnnotatedInstance> out;
  out.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const RawInstance& raw = instances[i];
    if (i >= blocks.size()) throw AlignmentError(raw.id, "missing annotation block");
    const auto surfaces = instance_tokens(raw);
    const auto& block = blocks[i];
    if (block.size() != surfaces.size())
      throw AlignmentError(raw.id, "sentence has " + std::to_string(surfaces.size()) +
                                       " tokens but annotation block has " + std::to_string(block.size()));
    AnnotatedInstance ai{raw, {}};
    ai.tokens.reserve(block.size());
    for (std::size_t t = 0; t < block.size(); ++t)
      ai.tokens.push_back({surfaces[t], block[t].pos, block[t].ner, static_cast<int>(t)});
    out.push_back(std::move(ai));
  }
  if (blocks.size() > instances.size())
    throw AlignmentError(instances.empty() ? 0 : instances.back().id,
                         std::to_string(blocks.size() - instances.size()) + " extra annotation blocks");
  return out;
}

inline std::vector<AnnotatedInstance> attach_annotations(const std::vector<RawInstance>& instances,
                                                         const std::string& annotation_path) {
  std::ifstream in(annotation_path);
  if (!in) throw std::runtime_error("cannot open annotation file '" + annotation_path + "'");
  return attach_annotations(instances, parse_annotations(in, annotation_path));
}

/// Emits the annotation skeleton for a corpus: one line per token with
/// placeholder tags, ready to be filled by an external tagger.
inline std::string annotation_skeleton(const std::vector<RawInstance>& instances) {
  std::ostringstream out;
  for (const auto& raw : instances) {
    for (const auto& tok : instance_tokens(raw)) out << tok << "\tXX\tO\n";
    out << '\n';
  }
  return out.str();
}

}  // namespace relex
