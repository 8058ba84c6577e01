#pragma once

#include <algorithm>
#include <cctype>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "relex/corpus.hpp"

namespace relex {

enum class RemovalRule { EntityDisambiguation, PrincipalComponent, UnrelatedEntity };

inline std::string_view rule_name(RemovalRule r) {
  switch (r) {
    case RemovalRule::EntityDisambiguation: return "entity-disambiguation";
    case RemovalRule::PrincipalComponent: return "principal-component";
    case RemovalRule::UnrelatedEntity: return "unrelated-entity";
  }
  return "?";
}

struct RemovalRecord {
  int token_index = 0;  // sentence position of the removed token
  RemovalRule rule = RemovalRule::EntityDisambiguation;
  friend bool operator==(const RemovalRecord&, const RemovalRecord&) = default;
};

/// Tag sets and word lists driving the three removal rules.
struct IndicatorRules {
  std::set<std::string, std::less<>> noun_tags = {"NN", "NNS", "NNP", "NNPS"};
  std::set<std::string, std::less<>> verb_tags = {"VB", "VBD", "VBG", "VBN", "VBP", "VBZ"};
  std::set<std::string, std::less<>> modifier_tags = {"JJ", "JJR", "JJS", "RB",  "RBR",
                                                      "RBS", "DT", "PDT", "CD", "PRP$"};
  std::set<std::string, std::less<>> preposition_tags = {"IN", "TO"};
  std::set<std::string, std::less<>> conjunctions = {"and", "or"};
  /// Copulas and auxiliaries are never removed as the action of an unrelated entity.
  std::set<std::string, std::less<>> protected_verbs = {"be",  "am",   "is",  "are", "was",    "were",
                                                        "been", "being", "'s", "have", "has", "had",
                                                        "having"};
  /// When false the backward search for a governing verb stops at a
  /// preposition: a prepositional object is not governed by the verb before it.
  bool action_search_crosses_prepositions = false;
};

struct IndicatorSequence {
  long id = 0;
  std::vector<AnnotatedToken> tokens;  // each keeps its sentence index
  std::vector<RemovalRecord> trace;
  TokenSpan e1_span;  // sentence positions, copied from the instance
  TokenSpan e2_span;

  [[nodiscard]] bool in_e1(const AnnotatedToken& t) const { return e1_span.contains(t.index); }
  [[nodiscard]] bool in_e2(const AnnotatedToken& t) const { return e2_span.contains(t.index); }

  [[nodiscard]] std::string joined() const {
    std::string out;
    for (const auto& t : tokens) {
      if (!out.empty()) out += ' ';
      out += t.surface;
    }
    return out;
  }
};

/// Output of one rule: the surviving tokens plus what was removed.
struct RuleResult {
  std::vector<AnnotatedToken> tokens;
  std::vector<RemovalRecord> removed;
};

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct EntityView {
  TokenSpan e1;
  TokenSpan e2;
  [[nodiscard]] bool is_entity(const AnnotatedToken& t) const { return e1.contains(t.index) || e2.contains(t.index); }
};

inline RuleResult apply_removals(const std::vector<AnnotatedToken>& tokens, const std::vector<bool>& drop,
                                 RemovalRule rule) {
  RuleResult out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (drop[i]) {
      out.removed.push_back({tokens[i].index, rule});
    } else {
      out.tokens.push_back(tokens[i]);
    }
  }
  return out;
}

}  // namespace detail

/// Contiguous tokens from the first token of e1 through the last token of e2.
inline std::vector<AnnotatedToken> slice_between_entities(const AnnotatedInstance& instance) {
  const auto& raw = instance.raw;
  return {instance.tokens.begin() + raw.e1_span.begin, instance.tokens.begin() + raw.e2_span.end};
}

/// Rule 1. Coordinated nouns ("X and Y") keep the conjunct holding an entity
/// (the first conjunct when neither does); compound noun runs keep their
/// rightmost noun, or only the entity tokens when the run contains any.
inline RuleResult disambiguate_entities(const std::vector<AnnotatedToken>& tokens, TokenSpan e1_span,
                                        TokenSpan e2_span, const IndicatorRules& rules = {}) {
  const detail::EntityView ents{e1_span, e2_span};
  auto is_noun = [&](const AnnotatedToken& t) { return rules.noun_tags.contains(t.pos); };
  auto is_modifier = [&](const AnnotatedToken& t) { return rules.modifier_tags.contains(t.pos); };
  const int n = static_cast<int>(tokens.size());

  // Coordination.
  std::vector<bool> drop(tokens.size(), false);
  for (int k = 1; k + 1 < n; ++k) {
    const auto& cc = tokens[k];
    if (!rules.conjunctions.contains(detail::lower(cc.surface)) || ents.is_entity(cc)) continue;
    if (!is_noun(tokens[k - 1]) || drop[k - 1]) continue;

    int left_begin = k - 1;
    while (left_begin > 0 && is_noun(tokens[left_begin - 1]) && !drop[left_begin - 1]) --left_begin;
    int right_noun = k + 1;
    while (right_noun < n && is_modifier(tokens[right_noun]) && !ents.is_entity(tokens[right_noun])) ++right_noun;
    if (right_noun >= n || !is_noun(tokens[right_noun])) continue;
    int right_end = right_noun;
    while (right_end < n && is_noun(tokens[right_end])) ++right_end;

    auto has_entity = [&](int b, int e) {
      for (int i = b; i < e; ++i)
        if (ents.is_entity(tokens[i])) return true;
      return false;
    };
    const bool left_entity = has_entity(left_begin, k);
    const bool right_entity = has_entity(k + 1, right_end);
    if (left_entity && right_entity) continue;

    const int drop_begin = right_entity ? left_begin : k;
    const int drop_end = right_entity ? k + 1 : right_end;
    for (int i = drop_begin; i < drop_end; ++i)
      if (!ents.is_entity(tokens[i])) drop[i] = true;
    k = right_end - 1;
  }
  RuleResult coordinated = detail::apply_removals(tokens, drop, RemovalRule::EntityDisambiguation);

  // Compound nouns.
  const auto& cur = coordinated.tokens;
  std::vector<bool> drop2(cur.size(), false);
  for (std::size_t i = 0; i < cur.size();) {
    if (!is_noun(cur[i])) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < cur.size() && is_noun(cur[end])) ++end;
    if (end - i >= 2) {
      bool any_entity = false;
      for (std::size_t j = i; j < end; ++j) any_entity = any_entity || ents.is_entity(cur[j]);
      for (std::size_t j = i; j < end; ++j) {
        if (ents.is_entity(cur[j])) continue;
        if (!any_entity && j + 1 == end) continue;  // head noun of the run
        drop2[j] = true;
      }
    }
    i = end;
  }
  RuleResult result = detail::apply_removals(cur, drop2, RemovalRule::EntityDisambiguation);
  result.removed.insert(result.removed.begin(), coordinated.removed.begin(), coordinated.removed.end());
  return result;
}

/// Rule 2. Drops adjectives, adverbs and other modifiers outside the entities.
inline RuleResult extract_principal_components(const std::vector<AnnotatedToken>& tokens, TokenSpan e1_span,
                                               TokenSpan e2_span, const IndicatorRules& rules = {}) {
  const detail::EntityView ents{e1_span, e2_span};
  std::vector<bool> drop(tokens.size(), false);
  for (std::size_t i = 0; i < tokens.size(); ++i)
    drop[i] = !ents.is_entity(tokens[i]) && rules.modifier_tags.contains(tokens[i].pos);
  return detail::apply_removals(tokens, drop, RemovalRule::PrincipalComponent);
}

/// Rule 3. Every maximal non-target nominal group (noun tag or NER label) is
/// removed together with its governing action: the nearest preceding verb
/// with no other nominal in between.
inline RuleResult remove_unrelated_entities(const std::vector<AnnotatedToken>& tokens, TokenSpan e1_span,
                                            TokenSpan e2_span, const IndicatorRules& rules = {}) {
  const detail::EntityView ents{e1_span, e2_span};
  auto is_nominal = [&](const AnnotatedToken& t) {
    return !ents.is_entity(t) && (rules.noun_tags.contains(t.pos) || t.ner != "O");
  };
  const int n = static_cast<int>(tokens.size());
  std::vector<bool> drop(tokens.size(), false);
  for (int i = 0; i < n;) {
    if (!is_nominal(tokens[i])) {
      ++i;
      continue;
    }
    int end = i;
    while (end < n && is_nominal(tokens[end])) ++end;
    for (int j = i; j < end; ++j) drop[j] = true;

    for (int j = i - 1; j >= 0; --j) {
      const auto& t = tokens[j];
      if (ents.is_entity(t) || is_nominal(t)) break;
      if (!rules.action_search_crosses_prepositions && rules.preposition_tags.contains(t.pos)) break;
      if (rules.verb_tags.contains(t.pos)) {
        if (!rules.protected_verbs.contains(detail::lower(t.surface))) drop[j] = true;
        break;
      }
    }
    i = end;
  }
  return detail::apply_removals(tokens, drop, RemovalRule::UnrelatedEntity);
}

/// Slice, then rules 1-3 in order.
inline IndicatorSequence extract_indicator(const AnnotatedInstance& instance, const IndicatorRules& rules = {}) {
  const TokenSpan e1 = instance.raw.e1_span;
  const TokenSpan e2 = instance.raw.e2_span;
  IndicatorSequence out;
  out.id = instance.raw.id;
  out.e1_span = e1;
  out.e2_span = e2;

  auto step1 = disambiguate_entities(slice_between_entities(instance), e1, e2, rules);
  auto step2 = extract_principal_components(step1.tokens, e1, e2, rules);
  auto step3 = remove_unrelated_entities(step2.tokens, e1, e2, rules);

  out.tokens = std::move(step3.tokens);
  for (auto* removed : {&step1.removed, &step2.removed, &step3.removed})
    out.trace.insert(out.trace.end(), removed->begin(), removed->end());
  std::sort(out.trace.begin(), out.trace.end(),
            [](const RemovalRecord& a, const RemovalRecord& b) { return a.token_index < b.token_index; });
  return out;
}

/// Empty when `indicator` is a well-formed extraction from `instance`:
/// it opens inside e1 and closes inside e2, its tokens are an ordered
/// subsequence of the sentence, and kept plus removed tokens cover the slice
/// exactly once. Otherwise a description of the first violation.
inline std::string indicator_violation(const AnnotatedInstance& instance, const IndicatorSequence& indicator) {
  const auto& toks = indicator.tokens;
  if (toks.empty()) return "empty indicator";
  if (!indicator.in_e1(toks.front())) return "does not start inside e1";
  if (!indicator.in_e2(toks.back())) return "does not end inside e2";
  int prev = -1;
  for (const auto& t : toks) {
    if (t.index <= prev) return "token order is not increasing at index " + std::to_string(t.index);
    if (t.index < 0 || static_cast<std::size_t>(t.index) >= instance.tokens.size() ||
        instance.tokens[static_cast<std::size_t>(t.index)].surface != t.surface)
      return "token '" + t.surface + "' is not sentence token " + std::to_string(t.index);
    prev = t.index;
  }
  const auto slice = slice_between_entities(instance);
  if (slice.size() != toks.size() + indicator.trace.size()) return "kept and removed tokens do not cover the slice";
  for (const auto& r : indicator.trace)
    if (instance.raw.e1_span.contains(r.token_index) || instance.raw.e2_span.contains(r.token_index))
      return "entity token " + std::to_string(r.token_index) + " was removed";
  return {};
}

}  // namespace relex
