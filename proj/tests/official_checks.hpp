#pragma once

// Checks that need files this repository cannot ship: the SemEval-2010 Task 8
// corpus, its Perl scorer, and pretrained encoder weights. Each check reports
// Skip when the environment does not point at them.
//
//   RELEX_SEMEVAL_DIR                 directory holding the official release; the
//                                     train and test files are located by name
//   RELEX_SEMEVAL_TRAIN / _TEST       explicit corpus files (override the above)
//   RELEX_SEMEVAL_TRAIN_ANNOTATIONS   token/POS/NER blocks for the train file
//   RELEX_SEMEVAL_TEST_ANNOTATIONS    same for the test file
//   RELEX_SEMEVAL_SCORER              semeval2010_task8_scorer-v1.2.pl
//   RELEX_ENCODER_WEIGHTS             converted encoder-weights file
//   RELEX_VOCAB                       vocabulary matching those weights

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include "relex/ablation.hpp"
#include "relex/corpus.hpp"
#include "relex/evaluation.hpp"
#include "relex/indicator.hpp"

namespace relex::acceptance {

enum class Status { Pass, Fail, Skip };

struct CheckResult {
  Status status = Status::Skip;
  std::string detail;
};

inline const char* status_name(Status s) {
  switch (s) {
    case Status::Pass: return "PASS";
    case Status::Fail: return "FAIL";
    case Status::Skip: return "SKIP";
  }
  return "?";
}

inline std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

/// First file under `dir` whose name matches `name` case-insensitively.
inline std::optional<std::string> find_file(const std::string& dir, const std::string& name) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return std::nullopt;
  auto lower = [](std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  for (const auto& e : fs::recursive_directory_iterator(dir, ec))
    if (e.is_regular_file() && lower(e.path().filename().string()) == lower(name)) return e.path().string();
  return std::nullopt;
}

inline std::optional<std::string> train_corpus_path() {
  if (auto p = env("RELEX_SEMEVAL_TRAIN")) return p;
  if (auto d = env("RELEX_SEMEVAL_DIR")) return find_file(*d, "TRAIN_FILE.TXT");
  return std::nullopt;
}

inline std::optional<std::string> test_corpus_path() {
  if (auto p = env("RELEX_SEMEVAL_TEST")) return p;
  if (auto d = env("RELEX_SEMEVAL_DIR")) return find_file(*d, "TEST_FILE_FULL.TXT");
  return std::nullopt;
}

inline constexpr std::size_t kOfficialTrainSize = 8000;
inline constexpr std::size_t kOfficialTestSize = 2717;

/// Instance counts of the official files and, when annotations are given,
/// the indicator invariants over every instance.
inline CheckResult check_official_corpus() {
  const auto train_path = train_corpus_path();
  const auto test_path = test_corpus_path();
  if (!train_path || !test_path) return {Status::Skip, "official corpus not provided (RELEX_SEMEVAL_DIR)"};
  try {
    const auto train = parse_semeval_file(*train_path);
    const auto test = parse_semeval_file(*test_path);
    std::string detail = "train " + std::to_string(train.size()) + ", test " + std::to_string(test.size());
    if (train.size() != kOfficialTrainSize || test.size() != kOfficialTestSize) return {Status::Fail, detail};

    const auto train_ann = env("RELEX_SEMEVAL_TRAIN_ANNOTATIONS");
    const auto test_ann = env("RELEX_SEMEVAL_TEST_ANNOTATIONS");
    if (!train_ann || !test_ann)
      return {Status::Skip, detail + "; counts match but invariants need RELEX_SEMEVAL_*_ANNOTATIONS"};
    std::size_t checked = 0;
    for (const auto& [raw, ann] : {std::pair{&train, *train_ann}, {&test, *test_ann}}) {
      for (const auto& inst : attach_annotations(*raw, ann)) {
        const auto why = indicator_violation(inst, extract_indicator(inst));
        if (!why.empty()) return {Status::Fail, "instance " + std::to_string(inst.raw.id) + ": " + why};
        ++checked;
      }
    }
    return {Status::Pass, detail + "; invariants hold on " + std::to_string(checked) + " instances"};
  } catch (const std::exception& e) {
    return {Status::Fail, e.what()};
  }
}

/// Runs the official Perl scorer and returns its official macro-F1.
inline std::optional<double> run_official_scorer(const std::string& scorer, const std::string& pred_path,
                                                 const std::string& gold_path, std::string& log) {
  const std::string cmd = "perl '" + scorer + "' '" + pred_path + "' '" + gold_path + "' 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return std::nullopt;
  char buf[4096];
  std::string out;
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  pclose(pipe);
  log += out;
  static const std::regex official(R"(official score is[^\n]*?macro-averaged F1 = ([0-9.]+)%)");
  std::smatch m;
  if (!std::regex_search(out, m, official)) return std::nullopt;
  return std::stod(m[1].str());
}

/// Macro-F1 agreement with the official scorer on a seeded prediction file.
/// Gold comes from the official test file when available, else from the
/// generator.
inline CheckResult check_official_scorer(double tolerance) {
  const auto scorer = env("RELEX_SEMEVAL_SCORER");
  if (!scorer) return {Status::Skip, "official scorer not provided (RELEX_SEMEVAL_SCORER)"};
  try {
    AnswerKey gold;
    if (const auto test = test_corpus_path()) {
      for (const auto& r : parse_semeval_file(*test)) {
        gold.ids.push_back(r.id);
        gold.labels.push_back(r.label);
      }
    } else {
      std::mt19937_64 gen(17);
      std::uniform_int_distribution<int> label(0, kNumLabels - 1);
      for (long i = 0; i < 500; ++i) {
        gold.ids.push_back(8001 + i);
        gold.labels.push_back(RelationLabel::from_id(label(gen)));
      }
    }
    // Perturb a third of the labels: a direction flip, a random label, or Other.
    std::mt19937_64 gen(2010);
    std::uniform_int_distribution<int> label(0, kNumLabels - 1), action(0, 5);
    AnswerKey pred = gold;
    for (auto& l : pred.labels) {
      switch (action(gen)) {
        case 0: l = RelationLabel::from_id(l.id() == kOtherLabelId ? label(gen) : (l.id() ^ 1)); break;
        case 1: l = RelationLabel::from_id(label(gen)); break;
        case 2: l = RelationLabel::from_id(kOtherLabelId); break;
        default: break;
      }
    }
    const auto dir = std::filesystem::temp_directory_path() / "relex_official_scorer";
    std::filesystem::create_directories(dir);
    const auto gold_path = (dir / "gold.txt").string(), pred_path = (dir / "pred.txt").string();
    {
      std::ofstream g(gold_path), p(pred_path);
      write_answer_key(g, gold);
      write_answer_key(p, pred);
    }
    std::string log;
    const auto official = run_official_scorer(*scorer, pred_path, gold_path, log);
    if (!official) return {Status::Fail, "could not read the official score from the scorer output"};
    const double ours = score_answer_keys(gold, pred).macro_f1;
    const double diff = std::abs(ours - *official);
    char detail[160];
    std::snprintf(detail, sizeof detail, "ours %.4f, official %.2f, |diff| %.4f (tol %.2f) on %zu instances", ours,
                  *official, diff, tolerance, gold.ids.size());
    return {diff <= tolerance ? Status::Pass : Status::Fail, detail};
  } catch (const std::exception& e) {
    return {Status::Fail, e.what()};
  }
}

struct AblationTargets {
  double both = 90.36;
  double sentence = 89.30;
  double indicator = 86.79;
  double tolerance = 0.7;
};

/// Full-scale input-mode ablation with the pretrained encoder and the
/// default fine-tuning recipe.
inline CheckResult check_full_ablation(const AblationTargets& targets = {}) {
  const auto weights = env("RELEX_ENCODER_WEIGHTS");
  const auto vocab_path = env("RELEX_VOCAB");
  const auto train_path = train_corpus_path();
  const auto test_path = test_corpus_path();
  const auto train_ann = env("RELEX_SEMEVAL_TRAIN_ANNOTATIONS");
  const auto test_ann = env("RELEX_SEMEVAL_TEST_ANNOTATIONS");
  if (!weights || !vocab_path || !train_path || !test_path || !train_ann || !test_ann)
    return {Status::Skip,
            "needs pretrained weights, vocabulary, official corpus and annotations (RELEX_ENCODER_WEIGHTS, "
            "RELEX_VOCAB, RELEX_SEMEVAL_*)"};
  try {
    const auto vocab = Vocabulary::from_file(*vocab_path);
    const auto train = attach_annotations(parse_semeval_file(*train_path), *train_ann);
    const auto test = attach_annotations(parse_semeval_file(*test_path), *test_ann);
    AblationConfig cfg;
    cfg.model.encoder = read_encoder_weights_config(*weights);
    cfg.train = TrainConfig{};
    cfg.sequencing.max_len = cfg.train.max_len;
    const auto report = run_ablation(train, test, vocab, cfg);
    const double b = report.runs[0].report.macro_f1;
    const double s = report.runs[1].report.macro_f1;
    const double i = report.runs[2].report.macro_f1;
    const bool ordered = b > s && s > i;
    const bool close = std::abs(b - targets.both) <= targets.tolerance &&
                       std::abs(s - targets.sentence) <= targets.tolerance &&
                       std::abs(i - targets.indicator) <= targets.tolerance;
    char detail[200];
    std::snprintf(detail, sizeof detail, "both %.2f, sentence %.2f, indicator %.2f (targets %.2f/%.2f/%.2f +-%.1f)", b,
                  s, i, targets.both, targets.sentence, targets.indicator, targets.tolerance);
    return {ordered && close ? Status::Pass : Status::Fail, detail};
  } catch (const std::exception& e) {
    return {Status::Fail, e.what()};
  }
}

}  // namespace relex::acceptance
