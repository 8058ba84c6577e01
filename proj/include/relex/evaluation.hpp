#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "relex/corpus.hpp"
#include "relex/label.hpp"

namespace relex {

struct ClassScore {
  Relation relation = Relation::Other;
  int true_positives = 0;
  int predicted = 0;  // predicted as this relation, either direction
  int gold = 0;       // gold relation, either direction
  double precision = 0.0;  // percent
  double recall = 0.0;
  double f1 = 0.0;
};

/// Per-relation scores for the nine real relations plus their macro F1.
struct ClassReport {
  std::array<ClassScore, kNumRelations> rows{};
  double macro_f1 = 0.0;

  [[nodiscard]] const ClassScore& row(Relation r) const { return rows[static_cast<std::size_t>(r)]; }
};

/// 19 x 19 counts, gold label id x predicted label id.
struct ConfusionMatrix {
  std::array<std::array<int, kNumLabels>, kNumLabels> counts{};

  [[nodiscard]] int total() const {
    int n = 0;
    for (const auto& row : counts)
      for (int c : row) n += c;
    return n;
  }
};

inline ConfusionMatrix confusion_matrix(const std::vector<int>& gold, const std::vector<int>& pred) {
  if (gold.size() != pred.size())
    throw std::invalid_argument("gold has " + std::to_string(gold.size()) + " labels but predictions have " +
                                std::to_string(pred.size()));
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] < 0 || gold[i] >= kNumLabels || pred[i] < 0 || pred[i] >= kNumLabels)
      throw std::invalid_argument("label id out of range at position " + std::to_string(i));
    ++cm.counts[static_cast<std::size_t>(gold[i])][static_cast<std::size_t>(pred[i])];
  }
  return cm;
}

/// Official SemEval-2010 Task 8 scoring with directionality: a true positive
/// needs relation and direction to match, while the precision and recall
/// denominators pool both directions. Macro F1 averages the nine relations.
inline ClassReport score_official(const std::vector<int>& gold, const std::vector<int>& pred) {
  const ConfusionMatrix cm = confusion_matrix(gold, pred);
  ClassReport report;
  double f1_sum = 0.0;
  for (int r = 0; r < kNumRelations; ++r) {
    ClassScore& s = report.rows[static_cast<std::size_t>(r)];
    s.relation = static_cast<Relation>(r);
    for (int dir = 0; dir < 2; ++dir) {
      const auto id = static_cast<std::size_t>(2 * r + dir);
      s.true_positives += cm.counts[id][id];
    }
    for (int g = 0; g < kNumLabels; ++g) {
      for (int p = 0; p < kNumLabels; ++p) {
        const int n = cm.counts[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)];
        if (p != kOtherLabelId && p / 2 == r) s.predicted += n;
        if (g != kOtherLabelId && g / 2 == r) s.gold += n;
      }
    }
    s.precision = s.predicted > 0 ? 100.0 * s.true_positives / s.predicted : 0.0;
    s.recall = s.gold > 0 ? 100.0 * s.true_positives / s.gold : 0.0;
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    f1_sum += s.f1;
  }
  report.macro_f1 = f1_sum / kNumRelations;
  return report;
}

inline ClassReport score_official(const std::vector<RelationLabel>& gold, const std::vector<RelationLabel>& pred) {
  std::vector<int> g, p;
  for (const auto& l : gold) g.push_back(l.id());
  for (const auto& l : pred) p.push_back(l.id());
  return score_official(g, p);
}

/// Relations in the alphabetical order used by the official scorer and the
/// per-class tables.
inline std::array<Relation, kNumRelations> report_order() {
  std::array<Relation, kNumRelations> order{};
  for (int r = 0; r < kNumRelations; ++r) order[static_cast<std::size_t>(r)] = static_cast<Relation>(r);
  std::sort(order.begin(), order.end(), [](Relation a, Relation b) { return relation_name(a) < relation_name(b); });
  return order;
}

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string fmt_delta(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.2f", std::abs(v) < 0.005 ? 0.0 : v);
  return buf;
}

inline nlohmann::json to_json(const ClassReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (Relation r : report_order()) {
    const auto& s = report.row(r);
    rows.push_back({{"relation", relation_name(r)},
                    {"true_positives", s.true_positives},
                    {"predicted", s.predicted},
                    {"gold", s.gold},
                    {"precision", std::round(s.precision * 100.0) / 100.0},
                    {"recall", std::round(s.recall * 100.0) / 100.0},
                    {"f1", std::round(s.f1 * 100.0) / 100.0}});
  }
  return {{"rows", rows}, {"macro_f1", std::round(report.macro_f1 * 100.0) / 100.0}};
}

/// Aligned text table of one report.
inline std::string render_report(const ClassReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(20) << "Relation" << std::right << std::setw(10) << "P" << std::setw(10) << "R"
      << std::setw(10) << "F1" << '\n';
  for (Relation r : report_order()) {
    const auto& s = report.row(r);
    out << std::left << std::setw(20) << relation_name(r) << std::right << std::setw(10) << fmt2(s.precision)
        << std::setw(10) << fmt2(s.recall) << std::setw(10) << fmt2(s.f1) << '\n';
  }
  out << std::left << std::setw(20) << "Macro-F1" << std::right << std::setw(30) << fmt2(report.macro_f1) << '\n';
  return out.str();
}

/// Two runs side by side (baseline, then candidate) with candidate - baseline deltas.
struct ReportComparison {
  ClassReport baseline;
  ClassReport candidate;

  [[nodiscard]] std::string render(const std::string& baseline_name = "-",
                                   const std::string& candidate_name = "+IS") const {
    std::ostringstream out;
    auto cell = [&](const std::string& s, int w = 9) { out << std::right << std::setw(w) << s; };
    out << std::left << std::setw(20) << "Relation";
    for (const char* metric : {"P", "R", "F1"}) {
      cell(std::string(metric) + " " + baseline_name);
      cell(std::string(metric) + " " + candidate_name);
      cell("delta");
    }
    out << '\n';
    for (Relation r : report_order()) {
      const auto& a = baseline.row(r);
      const auto& b = candidate.row(r);
      out << std::left << std::setw(20) << relation_name(r);
      for (auto [x, y] : {std::pair{a.precision, b.precision}, {a.recall, b.recall}, {a.f1, b.f1}}) {
        cell(fmt2(x));
        cell(fmt2(y));
        cell(fmt_delta(y - x));
      }
      out << '\n';
    }
    out << std::left << std::setw(20) << "Macro-F1";
    cell(fmt2(baseline.macro_f1), 45);
    cell(fmt2(candidate.macro_f1));
    cell(fmt_delta(candidate.macro_f1 - baseline.macro_f1));
    out << '\n';
    return out.str();
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (Relation r : report_order()) {
      const auto& a = baseline.row(r);
      const auto& b = candidate.row(r);
      rows.push_back({{"relation", relation_name(r)},
                      {"precision", {a.precision, b.precision, b.precision - a.precision}},
                      {"recall", {a.recall, b.recall, b.recall - a.recall}},
                      {"f1", {a.f1, b.f1, b.f1 - a.f1}}});
    }
    return {{"rows", rows}, {"macro_f1", {baseline.macro_f1, candidate.macro_f1, candidate.macro_f1 - baseline.macro_f1}}};
  }
};

inline ReportComparison per_class_report(const std::vector<int>& gold, const std::vector<int>& baseline_pred,
                                         const std::vector<int>& candidate_pred) {
  return {score_official(gold, baseline_pred), score_official(gold, candidate_pred)};
}

/// Answer-key lines `<id>\t<label>`.
struct AnswerKey {
  std::vector<long> ids;
  std::vector<RelationLabel> labels;
};

inline AnswerKey read_answer_key(std::istream& in, const std::string& source = "<stream>") {
  AnswerKey key;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = detail::trim(line);
    if (view.empty()) continue;
    const auto tab = view.find('\t');
    if (tab == std::string_view::npos) throw ParseError(source, line_no, "expected '<id><TAB><label>'");
    long id = 0;
    const auto id_text = view.substr(0, tab);
    const auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
    if (ec != std::errc() || ptr != id_text.data() + id_text.size())
      throw ParseError(source, line_no, "invalid id '" + std::string(id_text) + "'");
    try {
      key.labels.push_back(parse_label(view.substr(tab + 1)));
    } catch (const LabelError& e) {
      throw ParseError(source, line_no, e.what());
    }
    key.ids.push_back(id);
  }
  return key;
}

inline AnswerKey read_answer_key_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open answer key '" + path + "'");
  return read_answer_key(in, path);
}

inline void write_answer_key(std::ostream& out, const AnswerKey& key) {
  for (std::size_t i = 0; i < key.ids.size(); ++i) out << key.ids[i] << '\t' << key.labels[i].to_string() << '\n';
}

/// Scores a prediction key against a gold key, matching instances by id.
inline ClassReport score_answer_keys(const AnswerKey& gold, const AnswerKey& pred) {
  std::map<long, int> pred_by_id;
  for (std::size_t i = 0; i < pred.ids.size(); ++i)
    if (!pred_by_id.emplace(pred.ids[i], pred.labels[i].id()).second)
      throw std::invalid_argument("duplicate prediction for id " + std::to_string(pred.ids[i]));
  if (pred_by_id.size() != gold.ids.size())
    throw std::invalid_argument("gold has " + std::to_string(gold.ids.size()) + " instances but predictions have " +
                                std::to_string(pred_by_id.size()));
  std::vector<int> g, p;
  for (std::size_t i = 0; i < gold.ids.size(); ++i) {
    const auto it = pred_by_id.find(gold.ids[i]);
    if (it == pred_by_id.end()) throw std::invalid_argument("no prediction for id " + std::to_string(gold.ids[i]));
    g.push_back(gold.labels[i].id());
    p.push_back(it->second);
  }
  return score_official(g, p);
}

}  // namespace relex
