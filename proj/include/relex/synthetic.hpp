#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "relex/corpus.hpp"
#include "relex/label.hpp"
#include "relex/vocab.hpp"

namespace relex {

/// Generated, annotated corpus whose label is decided by a cue word between
/// the two entities. Used for overfitting and smoke runs.
struct SyntheticCorpus {
  std::vector<AnnotatedInstance> instances;
  Vocabulary vocab;
};

namespace detail {

struct SyntheticClass {
  RelationLabel label;
  std::array<const char*, 3> cues;
  const char* cue_pos;
};

inline const std::array<SyntheticClass, 4>& synthetic_classes() {
  static const std::array<SyntheticClass, 4> classes = {{
      {{Relation::CauseEffect, Direction::E1ToE2}, {"caused", "triggered", "produced"}, "VBD"},
      {{Relation::ContentContainer, Direction::E1ToE2}, {"inside", "within", "into"}, "IN"},
      {{Relation::MessageTopic, Direction::E2ToE1}, {"describes", "discusses", "covers"}, "VBZ"},
      {{Relation::Other, Direction::None}, {"near", "beside", "after"}, "IN"},
  }};
  return classes;
}

inline constexpr std::array<const char*, 12> kSyntheticNouns = {
    "storm", "flood", "box", "coin", "report", "war", "bottle", "water", "letter", "engine", "book", "wind"};
inline constexpr std::array<const char*, 6> kSyntheticAdjectives = {"old", "large", "small", "red", "new", "quiet"};
inline constexpr std::array<const char*, 4> kSyntheticTails = {"yesterday", "today", "again", "there"};

}  // namespace detail

/// Every word the generator can emit, so corpora drawn with different seeds
/// share one vocabulary.
inline Vocabulary synthetic_vocabulary() {
  std::set<std::string> words = {"the", "."};
  for (const auto& cls : detail::synthetic_classes())
    for (const char* c : cls.cues) words.insert(c);
  for (const char* w : detail::kSyntheticNouns) words.insert(w);
  for (const char* w : detail::kSyntheticAdjectives) words.insert(w);
  for (const char* w : detail::kSyntheticTails) words.insert(w);
  return Vocabulary(std::vector<std::string>(words.begin(), words.end()));
}

/// `n` instances cycling through the four classes. Each sentence reads
/// "the [adj] E1 CUE the [adj] E2 [tail] ." with Penn tags attached.
inline SyntheticCorpus make_synthetic_corpus(int n = 200, std::uint64_t seed = 7) {
  std::mt19937_64 gen(seed);
  auto pick = [&gen](std::size_t size) { return std::uniform_int_distribution<std::size_t>(0, size - 1)(gen); };
  auto coin = [&gen] { return std::bernoulli_distribution(0.5)(gen); };

  SyntheticCorpus corpus;
  for (int i = 0; i < n; ++i) {
    const auto& cls = detail::synthetic_classes()[static_cast<std::size_t>(i) % 4];
    std::vector<AnnotatedToken> toks;
    auto add = [&](const std::string& surface, const char* pos) {
      toks.push_back({surface, pos, "O", static_cast<int>(toks.size())});
    };
    add("the", "DT");
    if (coin()) add(detail::kSyntheticAdjectives[pick(detail::kSyntheticAdjectives.size())], "JJ");
    const int e1 = static_cast<int>(toks.size());
    add(detail::kSyntheticNouns[pick(detail::kSyntheticNouns.size())], "NN");
    add(cls.cues[pick(cls.cues.size())], cls.cue_pos);
    add("the", "DT");
    if (coin()) add(detail::kSyntheticAdjectives[pick(detail::kSyntheticAdjectives.size())], "JJ");
    const int e2 = static_cast<int>(toks.size());
    add(detail::kSyntheticNouns[pick(detail::kSyntheticNouns.size())], "NN");
    if (coin()) add(detail::kSyntheticTails[pick(detail::kSyntheticTails.size())], "RB");
    add(".", ".");

    AnnotatedInstance inst;
    inst.raw.id = i + 1;
    inst.raw.label = cls.label;
    inst.raw.e1_span = {e1, e1 + 1};
    inst.raw.e2_span = {e2, e2 + 1};
    for (const auto& t : toks) {
      if (!inst.raw.text.empty()) inst.raw.text += ' ';
      if (t.index == e1) inst.raw.e1_chars.begin = inst.raw.text.size();
      if (t.index == e2) inst.raw.e2_chars.begin = inst.raw.text.size();
      inst.raw.text += t.surface;
      if (t.index == e1) inst.raw.e1_chars.end = inst.raw.text.size();
      if (t.index == e2) inst.raw.e2_chars.end = inst.raw.text.size();
    }
    inst.tokens = std::move(toks);
    corpus.instances.push_back(std::move(inst));
  }
  corpus.vocab = synthetic_vocabulary();
  return corpus;
}

/// Annotation blocks matching `corpus`, in the three-column TSV format.
inline std::string synthetic_annotations(const SyntheticCorpus& corpus) {
  std::string out;
  for (const auto& inst : corpus.instances) {
    for (const auto& t : inst.tokens) out += t.surface + '\t' + t.pos + '\t' + t.ner + '\n';
    out += '\n';
  }
  return out;
}

}  // namespace relex
