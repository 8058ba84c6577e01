#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace relex {

/// The nine SemEval-2010 Task 8 relation types plus the artificial Other class.
enum class Relation : std::uint8_t {
  CauseEffect,
  InstrumentAgency,
  ProductProducer,
  ContentContainer,
  EntityOrigin,
  EntityDestination,
  ComponentWhole,
  MemberCollection,
  MessageTopic,
  Other,
};

enum class Direction : std::uint8_t { E1ToE2, E2ToE1, None };

inline constexpr int kNumRelations = 9;
inline constexpr int kNumLabels = 2 * kNumRelations + 1;
/// Label ids are 2*relation + direction for real relations; Other is last.
inline constexpr int kOtherLabelId = kNumLabels - 1;

inline constexpr std::array<std::string_view, kNumRelations + 1> kRelationNames = {
    "Cause-Effect",     "Instrument-Agency",  "Product-Producer",
    "Content-Container", "Entity-Origin",     "Entity-Destination",
    "Component-Whole",  "Member-Collection",  "Message-Topic",
    "Other",
};

class LabelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RelationLabel {
  Relation relation = Relation::Other;
  Direction direction = Direction::None;

  [[nodiscard]] bool is_other() const { return relation == Relation::Other; }

  [[nodiscard]] int id() const {
    if (is_other()) return kOtherLabelId;
    return 2 * static_cast<int>(relation) + (direction == Direction::E2ToE1 ? 1 : 0);
  }

  static RelationLabel from_id(int id) {
    if (id < 0 || id >= kNumLabels) throw LabelError("label id out of range: " + std::to_string(id));
    if (id == kOtherLabelId) return {};
    return {static_cast<Relation>(id / 2), id % 2 == 0 ? Direction::E1ToE2 : Direction::E2ToE1};
  }

  [[nodiscard]] std::string to_string() const {
    std::string out(kRelationNames[static_cast<int>(relation)]);
    if (is_other()) return out;
    out += direction == Direction::E1ToE2 ? "(e1,e2)" : "(e2,e1)";
    return out;
  }

  friend bool operator==(const RelationLabel&, const RelationLabel&) = default;
};

inline std::string_view relation_name(Relation r) { return kRelationNames[static_cast<int>(r)]; }

/// Parses "Entity-Destination(e1,e2)", "Cause-Effect(e2,e1)" or "Other".
/// Surrounding whitespace is ignored.
inline RelationLabel parse_label(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);

  if (text == "Other") return {};

  const auto paren = text.find('(');
  if (paren == std::string_view::npos)
    throw LabelError("malformed relation label '" + std::string(text) + "'");

  const auto name = text.substr(0, paren);
  const auto suffix = text.substr(paren);
  RelationLabel label;
  bool found = false;
  for (int r = 0; r < kNumRelations; ++r) {
    if (kRelationNames[r] == name) {
      label.relation = static_cast<Relation>(r);
      found = true;
      break;
    }
  }
  if (!found) throw LabelError("unknown relation name '" + std::string(name) + "'");

  if (suffix == "(e1,e2)") {
    label.direction = Direction::E1ToE2;
  } else if (suffix == "(e2,e1)") {
    label.direction = Direction::E2ToE1;
  } else {
    throw LabelError("malformed direction suffix '" + std::string(suffix) + "'");
  }
  return label;
}

}  // namespace relex
