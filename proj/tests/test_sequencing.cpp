#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "relex/corpus.hpp"
#include "relex/indicator.hpp"
#include "relex/pipeline.hpp"
#include "relex/sequencing.hpp"
#include "relex/synthetic.hpp"
#include "relex/vocab.hpp"
#include "relex/wordpiece.hpp"

using namespace relex;

namespace {

const std::string kFixtures = RELEX_FIXTURES;

Vocabulary fixture_vocab() { return Vocabulary::from_file(kFixtures + "/vocab.txt"); }

std::vector<AnnotatedInstance> fixture() {
  return attach_annotations(parse_semeval_file(kFixtures + "/sample.txt"), kFixtures + "/sample.tsv");
}

std::vector<std::string> pieces(std::string_view word, const Vocabulary& v) {
  std::vector<std::string> out;
  wordpiece_word(word, v, out);
  return out;
}

std::vector<std::string> decode(const AggregateSequence& s, const Vocabulary& v, int begin, int end) {
  std::vector<std::string> out;
  for (int i = begin; i < end; ++i) out.push_back(v.token(s.ids[static_cast<std::size_t>(i)]));
  return out;
}

using Words = std::vector<std::string>;

}  // namespace

TEST(Vocabulary, ReservedTokensAlwaysPresentAndDistinct) {
  const Vocabulary v(Words{"hello", "[CLS]"});
  std::set<int> ids;
  for (auto r : kReservedTokens) {
    ASSERT_TRUE(v.contains(r)) << r;
    ids.insert(*v.find(r));
  }
  EXPECT_EQ(ids.size(), kReservedTokens.size());
  EXPECT_EQ(v.cls_id(), 1);
  EXPECT_EQ(v.id("nope"), v.unk_id());
  EXPECT_THROW(Vocabulary(Words{"a", "a"}), std::invalid_argument);
}

TEST(Vocabulary, FileRoundTripKeepsIdsAndHash) {
  const auto v = fixture_vocab();
  const auto path = (std::filesystem::temp_directory_path() / "relex_vocab_roundtrip.txt").string();
  v.save(path);
  const auto w = Vocabulary::from_file(path);
  EXPECT_EQ(w.tokens(), v.tokens());
  EXPECT_EQ(w.hash(), v.hash());
  EXPECT_NE(Vocabulary(Words{"a", "b"}).hash(), Vocabulary(Words{"b", "a"}).hash());
  std::filesystem::remove(path);
}

// Expected splits were produced by the HuggingFace `tokenizers` WordPiece
// model over tests/fixtures/vocab.txt.
TEST(WordPiece, MatchesReferenceImplementation) {
  const auto v = fixture_vocab();
  EXPECT_EQ(pieces("unaffordable", v), (Words{"un", "##afford", "##able"}));
  EXPECT_EQ(pieces("walkers", v), (Words{"walk", "##er", "##s"}));
  EXPECT_EQ(pieces("walked", v), (Words{"walk", "##ed"}));
  EXPECT_EQ(pieces("playfulness", v), (Words{"play", "##ful", "##ness"}));
  EXPECT_EQ(pieces("reconfigure", v), (Words{"re", "##con", "##fig", "##ure"}));
  EXPECT_EQ(pieces("affordable", v), (Words{"afford", "##able"}));
  EXPECT_EQ(pieces("café", v), (Words{"caf", "##é"}));
  EXPECT_EQ(pieces("moved", v), (Words{"moved"}));
  EXPECT_EQ(pieces("xyz", v), (Words{"[UNK]"}));
  EXPECT_EQ(pieces("unwalked", v), (Words{"[UNK]"}));
  EXPECT_EQ(pieces(std::string(101, 'x'), v), (Words{"[UNK]"}));
}

TEST(WordPiece, ReservedTokensPassThroughAndEmptyInput) {
  const auto v = fixture_vocab();
  for (auto r : {"e11", "e12", "e21", "e22", "#", "$"}) EXPECT_EQ(pieces(r, v), Words{r});
  EXPECT_TRUE(wordpiece_tokenize({}, v).empty());
  EXPECT_EQ(wordpiece_tokenize({"walkers", "e11"}, v), (Words{"walk", "##er", "##s", "e11"}));
}

TEST(Markers, RunningExampleSentence) {
  const auto inst = fixture()[4];
  EXPECT_EQ(insert_entity_markers(inst).tokens,
            (Words{"my", "new", "e11", "boss", "e12", "moved", "into", "his", "e21", "office", "e22", "yesterday", "."}));
}

TEST(Markers, IndicatorMarkers) {
  const auto inst = fixture();
  EXPECT_EQ(insert_indicator_markers(extract_indicator(inst[1])).tokens,
            (Words{"shock", "#", "caused", "by", "$", "attack"}));
  EXPECT_EQ(insert_indicator_markers(extract_indicator(inst[3])).tokens,
            (Words{"analyzer", "#", "using", "$", "method"}));
}

TEST(Markers, AdjacentEntitiesAndMultiTokenEntities) {
  AnnotatedInstance inst;
  for (const char* w : {"the", "oil", "filter", "tank", "leaked"})
    inst.tokens.push_back({w, "NN", "O", static_cast<int>(inst.tokens.size())});
  inst.raw.e1_span = {1, 3};
  inst.raw.e2_span = {3, 4};
  EXPECT_EQ(insert_entity_markers(inst).tokens,
            (Words{"the", "e11", "oil", "filter", "e12", "e21", "tank", "e22", "leaked"}));
  EXPECT_EQ(insert_indicator_markers(extract_indicator(inst)).tokens, (Words{"oil", "filter", "#", "$", "tank"}));
}

TEST(Assemble, LayoutOfShortSentence) {
  const auto v = fixture_vocab();
  const auto inst = fixture()[1];
  const auto ind = extract_indicator(inst);
  const auto s = assemble_instance(inst, ind, v, {});
  ASSERT_EQ(s.ids.size(), 128u);
  EXPECT_EQ(s.ids[0], v.cls_id());
  ASSERT_TRUE(s.markers);
  const auto mk = *s.markers;
  EXPECT_EQ(decode(s, v, mk.m, mk.m + 1), Words{"e11"});
  EXPECT_EQ(decode(s, v, mk.n, mk.n + 1), Words{"e12"});
  EXPECT_EQ(decode(s, v, mk.p, mk.p + 1), Words{"e21"});
  EXPECT_EQ(decode(s, v, mk.q, mk.q + 1), Words{"e22"});
  EXPECT_EQ(decode(s, v, s.e1_rows.begin, s.e1_rows.end), Words{"shock"});
  EXPECT_EQ(decode(s, v, s.e2_rows.begin, s.e2_rows.end), Words{"attack"});
  ASSERT_TRUE(s.indicator_segment);
  EXPECT_EQ(decode(s, v, s.indicator_segment->begin, s.indicator_segment->end),
            (Words{"shock", "#", "caused", "by", "$", "attack"}));
  Words rows;
  for (int r : s.indicator_rows) rows.push_back(v.token(s.ids[static_cast<std::size_t>(r)]));
  EXPECT_EQ(rows, (Words{"shock", "caused", "by", "attack"}));
  EXPECT_EQ(s.ids[static_cast<std::size_t>(s.indicator_segment->begin - 1)], v.sep_id());
  EXPECT_EQ(s.ids[static_cast<std::size_t>(s.indicator_segment->end)], v.sep_id());
  EXPECT_EQ(s.length(), s.indicator_segment->end + 1);
  EXPECT_FALSE(s.truncated);
  for (int i = 0; i < s.length(); ++i) EXPECT_EQ(s.segment_ids[static_cast<std::size_t>(i)], i < s.indicator_segment->begin ? 0 : 1);
  EXPECT_EQ(s.label, parse_label("Cause-Effect(e2,e1)").id());
}

TEST(Assemble, MarkerInclusionFlags) {
  const auto v = fixture_vocab();
  const auto inst = fixture()[1];
  SequencingOptions opts;
  opts.entity_span_includes_markers = true;
  opts.indicator_span_includes_markers = true;
  const auto s = assemble_instance(inst, extract_indicator(inst), v, opts);
  EXPECT_EQ(decode(s, v, s.e1_rows.begin, s.e1_rows.end), (Words{"e11", "shock", "e12"}));
  EXPECT_EQ(static_cast<int>(s.indicator_rows.size()), s.indicator_segment->size());
}

TEST(Assemble, SentenceOnlyAndIndicatorOnly) {
  const auto v = fixture_vocab();
  const auto inst = fixture()[3];
  const auto ind = extract_indicator(inst);
  SequencingOptions sent;
  sent.mode = InputMode::SentenceOnly;
  const auto a = assemble_instance(inst, ind, v, sent);
  EXPECT_FALSE(a.indicator_segment);
  EXPECT_TRUE(a.indicator_rows.empty());
  EXPECT_EQ(a.ids[static_cast<std::size_t>(a.length() - 1)], v.sep_id());
  EXPECT_EQ(decode(a, v, a.e2_rows.begin, a.e2_rows.end), Words{"method"});

  SequencingOptions only;
  only.mode = InputMode::IndicatorOnly;
  const auto b = assemble_instance(inst, ind, v, only);
  EXPECT_FALSE(b.markers);
  EXPECT_EQ(decode(b, v, 1, b.length() - 1), (Words{"analyzer", "#", "using", "$", "method"}));
  EXPECT_EQ(decode(b, v, b.e1_rows.begin, b.e1_rows.end), Words{"analyzer"});
  EXPECT_EQ(decode(b, v, b.e2_rows.begin, b.e2_rows.end), Words{"method"});
  for (int i = 0; i < b.length(); ++i) EXPECT_EQ(b.segment_ids[static_cast<std::size_t>(i)], 0);
}

namespace {

/// 200 filler words with "boss moved into office" starting at `at`.
AnnotatedInstance long_sentence(int at) {
  AnnotatedInstance inst;
  for (int i = 0; i < 200; ++i) inst.tokens.push_back({"the", "DT", "O", i});
  inst.tokens[static_cast<std::size_t>(at)] = {"boss", "NN", "O", at};
  inst.tokens[static_cast<std::size_t>(at + 1)] = {"moved", "VBD", "O", at + 1};
  inst.tokens[static_cast<std::size_t>(at + 2)] = {"into", "IN", "O", at + 2};
  inst.tokens[static_cast<std::size_t>(at + 3)] = {"office", "NN", "O", at + 3};
  inst.raw.e1_span = {at, at + 1};
  inst.raw.e2_span = {at + 3, at + 4};
  return inst;
}

}  // namespace

TEST(Assemble, TruncationKeepsMarkersAndIndicator) {
  const auto v = fixture_vocab();
  for (int at : {90, 190}) {
    const auto inst = long_sentence(at);
    const auto s = assemble_instance(inst, extract_indicator(inst), v, {});
    EXPECT_TRUE(s.truncated);
    EXPECT_EQ(s.length(), 128);
    EXPECT_EQ(decode(s, v, s.markers->m, s.markers->q + 1),
              (Words{"e11", "boss", "e12", "moved", "into", "e21", "office", "e22"}));
    EXPECT_EQ(decode(s, v, s.indicator_segment->begin, s.indicator_segment->end),
              (Words{"boss", "#", "moved", "into", "$", "office"}));
    // The kept sentence subwords are a contiguous window of the marked sentence.
    const auto marked = insert_entity_markers(inst).tokens;
    const auto kept = decode(s, v, 1, s.indicator_segment->begin - 1);
    EXPECT_EQ(kept.size(), 128u - 3u - 6u);
    // Subwords after e22 go first, then leading context.
    const int q = at + 7;  // e22 in the marked sentence
    const int first = std::max(0, q + 1 - static_cast<int>(kept.size()));
    EXPECT_EQ(kept, Words(marked.begin() + first, marked.begin() + first + static_cast<long>(kept.size())));
  }
}

TEST(Assemble, TooShortMaxLenIsLengthError) {
  const auto v = fixture_vocab();
  const auto inst = fixture()[3];
  SequencingOptions tiny;
  tiny.max_len = 12;
  try {
    assemble_instance(inst, extract_indicator(inst), v, tiny);
    FAIL() << "expected a length error";
  } catch (const LengthError& e) {
    EXPECT_EQ(e.instance_id(), inst.raw.id);
  }
}

TEST(Assemble, JsonlRoundTrip) {
  const auto v = fixture_vocab();
  auto d = preprocess(fixture(), v, {});
  const auto path = (std::filesystem::temp_directory_path() / "relex_seq.jsonl").string();
  write_jsonl(path, d.sequences);
  const auto back = read_jsonl(path);
  ASSERT_EQ(back.size(), d.sequences.size());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(to_json(back[i]), to_json(d.sequences[i]));
  std::filesystem::remove(path);
}

namespace {

void check_invariants(const AggregateSequence& s, const Vocabulary& v, const SequencingOptions& opts) {
  ASSERT_EQ(static_cast<int>(s.ids.size()), opts.max_len);
  EXPECT_EQ(s.ids[0], v.cls_id());
  const int len = s.length();
  for (int i = 0; i < opts.max_len; ++i) {
    const auto k = static_cast<std::size_t>(i);
    EXPECT_EQ(s.attention_mask[k], i < len ? 1 : 0);  // padding never precedes content
    EXPECT_EQ(s.attention_mask[k] == 0, s.ids[k] == v.pad_id());
  }
  int seps = 0;
  for (int i = 0; i < len; ++i) seps += s.ids[static_cast<std::size_t>(i)] == v.sep_id() ? 1 : 0;
  EXPECT_EQ(seps, opts.mode == InputMode::Both ? 2 : 1);
  if (s.markers) {
    const auto& mk = *s.markers;
    EXPECT_LT(mk.m, mk.n);
    EXPECT_LT(mk.n, mk.p);
    EXPECT_LT(mk.p, mk.q);
    EXPECT_EQ(v.token(s.ids[static_cast<std::size_t>(mk.m)]), "e11");
    EXPECT_EQ(v.token(s.ids[static_cast<std::size_t>(mk.n)]), "e12");
    EXPECT_EQ(v.token(s.ids[static_cast<std::size_t>(mk.p)]), "e21");
    EXPECT_EQ(v.token(s.ids[static_cast<std::size_t>(mk.q)]), "e22");
    if (s.indicator_segment) {
      EXPECT_GT(s.indicator_segment->begin, mk.q);
    }
  }
  EXPECT_GT(s.e1_rows.size(), 0);
  EXPECT_GT(s.e2_rows.size(), 0);
  if (s.indicator_segment) {
    EXPECT_FALSE(s.indicator_rows.empty());
    int hashes = 0;
    for (int i = s.indicator_segment->begin; i < s.indicator_segment->end; ++i) {
      const auto& t = v.token(s.ids[static_cast<std::size_t>(i)]);
      hashes += t == "#" || t == "$";
    }
    EXPECT_EQ(hashes, 2);
  }
}

}  // namespace

TEST(AssembleProperties, SyntheticCorpusAllModes) {
  const auto corpus = make_synthetic_corpus(200, 5);
  for (InputMode mode : {InputMode::Both, InputMode::SentenceOnly, InputMode::IndicatorOnly}) {
    SequencingOptions opts;
    opts.max_len = 32;
    opts.mode = mode;
    const auto d = preprocess(corpus.instances, corpus.vocab, opts);
    for (const auto& s : d.sequences) check_invariants(s, corpus.vocab, opts);
    EXPECT_EQ(d.truncated, 0);
    // Determinism.
    EXPECT_EQ(to_json(preprocess(corpus.instances, corpus.vocab, opts).sequences[17]), to_json(d.sequences[17]));
  }
}

TEST(AssembleProperties, FixtureCorpusAllModes) {
  const auto v = fixture_vocab();
  for (InputMode mode : {InputMode::Both, InputMode::SentenceOnly, InputMode::IndicatorOnly}) {
    SequencingOptions opts;
    opts.mode = mode;
    for (const auto& s : preprocess(fixture(), v, opts).sequences) check_invariants(s, v, opts);
  }
}
