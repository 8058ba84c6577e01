#pragma once

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "relex/corpus.hpp"
#include "relex/indicator.hpp"
#include "relex/vocab.hpp"
#include "relex/wordpiece.hpp"

namespace relex {

class LengthError : public std::runtime_error {
 public:
  LengthError(long instance_id, const std::string& what)
      : std::runtime_error("instance " + std::to_string(instance_id) + ": " + what), instance_id_(instance_id) {}

  [[nodiscard]] long instance_id() const { return instance_id_; }

 private:
  long instance_id_;
};

/// Which segments the aggregate sequence carries.
enum class InputMode { Both, SentenceOnly, IndicatorOnly };

inline std::string_view input_mode_name(InputMode m) {
  switch (m) {
    case InputMode::Both: return "both";
    case InputMode::SentenceOnly: return "sentence";
    case InputMode::IndicatorOnly: return "indicator";
  }
  return "?";
}

inline InputMode parse_input_mode(std::string_view s) {
  if (s == "both") return InputMode::Both;
  if (s == "sentence") return InputMode::SentenceOnly;
  if (s == "indicator") return InputMode::IndicatorOnly;
  throw std::invalid_argument("unknown input mode '" + std::string(s) + "' (expected both|sentence|indicator)");
}

struct SequencingOptions {
  int max_len = 128;
  InputMode mode = InputMode::Both;
  /// Entity head averages e11..e12 inclusive instead of the rows strictly between.
  bool entity_span_includes_markers = false;
  /// Indicator head averages # and $ too.
  bool indicator_span_includes_markers = false;
};

/// Word tokens with the positions of the inserted marker words.
struct MarkedTokens {
  std::vector<std::string> tokens;
  std::vector<int> marker_positions;  // e11,e12,e21,e22 or #,$
};

struct MarkerIndices {
  int m = 0;  // e11
  int n = 0;  // e12
  int p = 0;  // e21
  int q = 0;  // e22
  friend bool operator==(const MarkerIndices&, const MarkerIndices&) = default;
};

/// Encoder input: [CLS] sentence [SEP] indicator [SEP] [PAD]...
struct AggregateSequence {
  long id = 0;
  std::vector<int> ids;
  std::vector<int> attention_mask;
  std::vector<int> segment_ids;
  int cls_index = 0;
  std::optional<MarkerIndices> markers;  // absent in indicator-only mode
  TokenSpan e1_rows;                     // rows averaged by the entity head
  TokenSpan e2_rows;
  std::optional<TokenSpan> indicator_segment;  // every indicator subword incl. # and $
  std::vector<int> indicator_rows;             // rows averaged by the indicator head
  int label = kOtherLabelId;
  bool truncated = false;

  /// Number of non-padding positions.
  [[nodiscard]] int length() const {
    int n = 0;
    for (int v : attention_mask) n += v;
    return n;
  }
};

/// Lowercased sentence with e11/e12 around e1 and e21/e22 around e2.
inline MarkedTokens insert_entity_markers(const AnnotatedInstance& instance) {
  const auto& raw = instance.raw;
  MarkedTokens out;
  out.tokens.reserve(instance.tokens.size() + 4);
  for (int i = 0; i < static_cast<int>(instance.tokens.size()); ++i) {
    if (i == raw.e1_span.begin) out.marker_positions.push_back(static_cast<int>(out.tokens.size())), out.tokens.emplace_back(kE1Open);
    if (i == raw.e2_span.begin) out.marker_positions.push_back(static_cast<int>(out.tokens.size())), out.tokens.emplace_back(kE2Open);
    out.tokens.push_back(to_lower_ascii(instance.tokens[i].surface));
    if (i + 1 == raw.e1_span.end) out.marker_positions.push_back(static_cast<int>(out.tokens.size())), out.tokens.emplace_back(kE1Close);
    if (i + 1 == raw.e2_span.end) out.marker_positions.push_back(static_cast<int>(out.tokens.size())), out.tokens.emplace_back(kE2Close);
  }
  return out;
}

/// e1 tokens, #, interior tokens, $, e2 tokens (lowercased).
inline MarkedTokens insert_indicator_markers(const IndicatorSequence& indicator) {
  MarkedTokens out;
  bool opened = false;
  bool closed = false;
  for (const auto& t : indicator.tokens) {
    const bool e1 = indicator.in_e1(t);
    const bool e2 = indicator.in_e2(t);
    if (!e1 && !opened) opened = true, out.marker_positions.push_back(static_cast<int>(out.tokens.size())), out.tokens.emplace_back(kIndicatorOpen);
    if (e2 && !closed) closed = true, out.marker_positions.push_back(static_cast<int>(out.tokens.size())), out.tokens.emplace_back(kIndicatorClose);
    out.tokens.push_back(to_lower_ascii(t.surface));
  }
  return out;
}

namespace detail {

/// Subwords of a marked token list; `starts[i]` is the first subword of word i.
struct Subwords {
  std::vector<std::string> pieces;
  std::vector<int> starts;
};

inline Subwords subword_split(const MarkedTokens& words, const Vocabulary& vocab) {
  Subwords out;
  for (std::size_t w = 0; w < words.tokens.size(); ++w) {
    out.starts.push_back(static_cast<int>(out.pieces.size()));
    const bool is_marker = std::find(words.marker_positions.begin(), words.marker_positions.end(),
                                     static_cast<int>(w)) != words.marker_positions.end();
    if (is_marker) {
      out.pieces.push_back(words.tokens[w]);
    } else {
      wordpiece_word(words.tokens[w], vocab, out.pieces);
    }
  }
  out.starts.push_back(static_cast<int>(out.pieces.size()));
  return out;
}

}  // namespace detail

/// Builds the padded aggregate sequence. Only the sentence segment is ever
/// truncated: subwords after e22 go first, then subwords before e11.
inline AggregateSequence assemble(const MarkedTokens& sentence, const MarkedTokens& indicator, const Vocabulary& vocab,
                                  const SequencingOptions& opts, long id = 0, int label = kOtherLabelId) {
  AggregateSequence seq;
  seq.id = id;
  seq.label = label;

  const bool use_sentence = opts.mode != InputMode::IndicatorOnly;
  const bool use_indicator = opts.mode != InputMode::SentenceOnly;

  std::vector<std::string> sent_pieces;
  int m = 0, n = 0, p = 0, q = 0;  // within sent_pieces
  if (use_sentence) {
    if (sentence.marker_positions.size() != 4) throw LengthError(id, "sentence must carry four entity markers");
    const auto sw = detail::subword_split(sentence, vocab);
    m = sw.starts[sentence.marker_positions[0]];
    n = sw.starts[sentence.marker_positions[1]];
    p = sw.starts[sentence.marker_positions[2]];
    q = sw.starts[sentence.marker_positions[3]];
    sent_pieces = sw.pieces;
  }
  detail::Subwords ind;
  int hash_pos = 0, dollar_pos = 0;  // within ind.pieces
  if (use_indicator) {
    if (indicator.marker_positions.size() != 2) throw LengthError(id, "indicator must carry # and $ markers");
    ind = detail::subword_split(indicator, vocab);
    hash_pos = ind.starts[indicator.marker_positions[0]];
    dollar_pos = ind.starts[indicator.marker_positions[1]];
  }

  const int specials = use_sentence && use_indicator ? 3 : 2;
  const int ind_len = static_cast<int>(ind.pieces.size());
  const int budget = opts.max_len - specials - ind_len;
  if (use_sentence) {
    const int core = q - m + 1;
    if (core > budget)
      throw LengthError(id, "entity markers and indicator need " + std::to_string(core + specials + ind_len) +
                                " positions but max_len is " + std::to_string(opts.max_len));
    int keep_end = static_cast<int>(sent_pieces.size());
    int keep_begin = 0;
    if (keep_end - keep_begin > budget) {
      seq.truncated = true;
      keep_end = std::max(q + 1, keep_begin + budget);
      if (keep_end - keep_begin > budget) keep_begin = keep_end - budget;
    }
    sent_pieces = std::vector<std::string>(sent_pieces.begin() + keep_begin, sent_pieces.begin() + keep_end);
    m -= keep_begin, n -= keep_begin, p -= keep_begin, q -= keep_begin;
  } else if (budget < 0) {
    throw LengthError(id, "indicator needs " + std::to_string(ind_len + specials) + " positions but max_len is " +
                              std::to_string(opts.max_len));
  }

  auto push = [&](int token_id, int segment) {
    seq.ids.push_back(token_id);
    seq.segment_ids.push_back(segment);
    seq.attention_mask.push_back(1);
  };

  push(vocab.cls_id(), 0);
  if (use_sentence) {
    const int offset = 1;
    for (const auto& piece : sent_pieces) push(vocab.id(piece), 0);
    push(vocab.sep_id(), 0);
    seq.markers = MarkerIndices{m + offset, n + offset, p + offset, q + offset};
    const auto& mk = *seq.markers;
    seq.e1_rows = opts.entity_span_includes_markers ? TokenSpan{mk.m, mk.n + 1} : TokenSpan{mk.m + 1, mk.n};
    seq.e2_rows = opts.entity_span_includes_markers ? TokenSpan{mk.p, mk.q + 1} : TokenSpan{mk.p + 1, mk.q};
  }
  if (use_indicator) {
    const int offset = static_cast<int>(seq.ids.size());
    const int segment = use_sentence ? 1 : 0;
    for (const auto& piece : ind.pieces) push(vocab.id(piece), segment);
    push(vocab.sep_id(), segment);
    seq.indicator_segment = TokenSpan{offset, offset + ind_len};
    for (int i = 0; i < ind_len; ++i) {
      const bool marker = i == hash_pos || i == dollar_pos;
      if (!marker || opts.indicator_span_includes_markers) seq.indicator_rows.push_back(offset + i);
    }
    if (!use_sentence) {
      seq.e1_rows = {offset, offset + hash_pos};
      seq.e2_rows = {offset + dollar_pos + 1, offset + ind_len};
    }
  }
  while (static_cast<int>(seq.ids.size()) < opts.max_len) {
    seq.ids.push_back(vocab.pad_id());
    seq.segment_ids.push_back(0);
    seq.attention_mask.push_back(0);
  }
  return seq;
}

/// Full sequencing of one annotated instance.
inline AggregateSequence assemble_instance(const AnnotatedInstance& instance, const IndicatorSequence& indicator,
                                           const Vocabulary& vocab, const SequencingOptions& opts) {
  return assemble(insert_entity_markers(instance), insert_indicator_markers(indicator), vocab, opts, instance.raw.id,
                  instance.raw.label.id());
}

inline nlohmann::json to_json(const AggregateSequence& s) {
  nlohmann::json j;
  j["id"] = s.id;
  j["ids"] = s.ids;
  j["mask"] = s.attention_mask;
  j["segment_ids"] = s.segment_ids;
  if (s.markers) {
    j["markers"] = {s.markers->m, s.markers->n, s.markers->p, s.markers->q};
  } else {
    j["markers"] = nullptr;
  }
  j["e1_rows"] = {s.e1_rows.begin, s.e1_rows.end};
  j["e2_rows"] = {s.e2_rows.begin, s.e2_rows.end};
  if (s.indicator_segment) {
    j["indicator_span"] = {s.indicator_segment->begin, s.indicator_segment->size()};
  } else {
    j["indicator_span"] = nullptr;
  }
  j["indicator_rows"] = s.indicator_rows;
  j["label"] = s.label;
  j["label_name"] = RelationLabel::from_id(s.label).to_string();
  j["truncated"] = s.truncated;
  return j;
}

inline AggregateSequence sequence_from_json(const nlohmann::json& j) {
  AggregateSequence s;
  s.id = j.at("id").get<long>();
  s.ids = j.at("ids").get<std::vector<int>>();
  s.attention_mask = j.at("mask").get<std::vector<int>>();
  s.segment_ids = j.at("segment_ids").get<std::vector<int>>();
  if (!j.at("markers").is_null()) {
    const auto mk = j.at("markers").get<std::vector<int>>();
    if (mk.size() != 4) throw std::runtime_error("record " + std::to_string(s.id) + ": markers must have 4 entries");
    s.markers = MarkerIndices{mk[0], mk[1], mk[2], mk[3]};
  }
  const auto e1 = j.at("e1_rows").get<std::vector<int>>();
  const auto e2 = j.at("e2_rows").get<std::vector<int>>();
  s.e1_rows = {e1.at(0), e1.at(1)};
  s.e2_rows = {e2.at(0), e2.at(1)};
  if (!j.at("indicator_span").is_null()) {
    const auto sp = j.at("indicator_span").get<std::vector<int>>();
    s.indicator_segment = TokenSpan{sp.at(0), sp.at(0) + sp.at(1)};
  }
  s.indicator_rows = j.at("indicator_rows").get<std::vector<int>>();
  s.label = j.at("label").get<int>();
  s.truncated = j.value("truncated", false);
  return s;
}

inline void write_jsonl(const std::string& path, const std::vector<AggregateSequence>& seqs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file '" + path + "'");
  for (const auto& s : seqs) out << to_json(s).dump() << '\n';
}

inline std::vector<AggregateSequence> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file '" + path + "'");
  std::vector<AggregateSequence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(sequence_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path, line_no, e.what());
    }
  }
  return out;
}

}  // namespace relex
