// Acceptance run: one PASS/FAIL/SKIP line per criterion. Exit status is 1 if
// any criterion fails; skipped criteria (data not available) do not fail.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "official_checks.hpp"
#include "relex/relex.hpp"
#include "test_support.hpp"

using namespace relex;
using namespace relex::acceptance;

namespace {

// Pinned thresholds.
constexpr double kGoldensSeconds = 1.0;
constexpr int kScorerCases = 1000;
constexpr int kScorerMaxSize = 50;
constexpr double kOfficialScorerTolerance = 0.01;
constexpr double kScorerSeconds = 30.0;
constexpr double kGradBeta = 5.0;
constexpr double kGradLambda = 5e-3;
constexpr double kGradStep = 1e-4;
constexpr double kGradMaxRelError = 1e-4;
constexpr double kGradSeconds = 120.0;
constexpr double kBetaZeroTolerance = 1e-9;
constexpr double kOverfitAccuracy = 95.0;
constexpr int kOverfitEpochs = 200;
constexpr int kOverfitInstances = 200;
constexpr double kOverfitSeconds = 300.0;
constexpr std::uint64_t kOverfitSeeds[] = {1, 2, 3};

const std::string kFixtures = RELEX_FIXTURES;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

int failures = 0;

void report(int number, const std::string& title, const CheckResult& r) {
  std::printf("[%s] %d %s: %s\n", status_name(r.status), number, title.c_str(), r.detail.c_str());
  std::fflush(stdout);
  if (r.status == Status::Fail) ++failures;
}

CheckResult guarded(const std::function<CheckResult()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {Status::Fail, std::string("exception: ") + e.what()};
  }
}

std::vector<AnnotatedInstance> fixture_instances() {
  return attach_annotations(parse_semeval_file(kFixtures + "/sample.txt"), kFixtures + "/sample.tsv");
}

// 1 -------------------------------------------------------------------------

CheckResult indicator_goldens() {
  const auto start = Clock::now();
  const auto instances = fixture_instances();
  // Records 2-4 of the fixture are the three worked extraction examples.
  const std::vector<std::pair<long, std::string>> goldens = {
      {2, "shock caused by attack"}, {3, "coins are enclosed in case"}, {4, "analyzer using method"}};
  std::string got;
  bool ok = true;
  for (const auto& [id, want] : goldens) {
    const auto it = std::find_if(instances.begin(), instances.end(), [id](const auto& i) { return i.raw.id == id; });
    const std::string joined = it == instances.end() ? "<missing>" : extract_indicator(*it).joined();
    ok = ok && joined == want;
    got += (got.empty() ? "\"" : ", \"") + joined + "\"";
  }
  const double secs = seconds_since(start);
  ok = ok && secs < kGoldensSeconds;
  return {ok ? Status::Pass : Status::Fail, got + format(" in %.3f s (limit %.0f s)", secs, kGoldensSeconds)};
}

// 2 -------------------------------------------------------------------------

// Confusion matrix over the nine relations plus Other, with wrong-direction
// predictions moved to a separate column, as the official scorer lays it out:
// P = diagonal / (column + wrong direction), R = diagonal / row.
double xdir_matrix_macro_f1(const std::vector<int>& gold, const std::vector<int>& pred) {
  int cm[10][10] = {};
  int wrong_dir[10] = {};
  auto rel = [](int id) { return id == kOtherLabelId ? 9 : id / 2; };
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const int g = rel(gold[i]), p = rel(pred[i]);
    if (g == p && g != 9 && gold[i] != pred[i])
      ++wrong_dir[g];
    else
      ++cm[g][p];
  }
  double sum = 0.0;
  for (int r = 0; r < 9; ++r) {
    int col = 0, row = wrong_dir[r];
    for (int k = 0; k < 10; ++k) col += cm[k][r], row += cm[r][k];
    const double p = col + wrong_dir[r] ? 100.0 * cm[r][r] / (col + wrong_dir[r]) : 0.0;
    const double rc = row ? 100.0 * cm[r][r] / row : 0.0;
    sum += p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0;
  }
  return sum / 9;
}

// Per-instance counting, one relation at a time.
double brute_force_macro_f1(const std::vector<int>& gold, const std::vector<int>& pred) {
  double sum = 0.0;
  for (int r = 0; r < kNumRelations; ++r) {
    int tp = 0, np = 0, ng = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const bool g = gold[i] != kOtherLabelId && gold[i] / 2 == r;
      const bool p = pred[i] != kOtherLabelId && pred[i] / 2 == r;
      ng += g;
      np += p;
      tp += g && gold[i] == pred[i];
    }
    const double prec = np ? 100.0 * tp / np : 0.0, rec = ng ? 100.0 * tp / ng : 0.0;
    sum += prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
  }
  return sum / kNumRelations;
}

CheckResult scorer_oracles() {
  const auto start = Clock::now();
  std::mt19937_64 gen(2010);
  std::uniform_int_distribution<int> size(1, kScorerMaxSize), label(0, kNumLabels - 1), action(0, 2);
  int mismatches = 0;
  double worst_layout = 0.0;
  for (int c = 0; c < kScorerCases; ++c) {
    const int n = size(gen);
    std::vector<int> g(n), p(n);
    for (int i = 0; i < n; ++i) {
      g[i] = label(gen);
      const int a = action(gen);
      p[i] = a == 0 ? g[i] : a == 1 && g[i] != kOtherLabelId ? (g[i] ^ 1) : label(gen);
    }
    const double ours = score_official(g, p).macro_f1;
    if (ours != brute_force_macro_f1(g, p)) ++mismatches;
    worst_layout = std::max(worst_layout, std::abs(ours - xdir_matrix_macro_f1(g, p)));
  }
  const double secs = seconds_since(start);
  const auto official = check_official_scorer(kOfficialScorerTolerance);
  std::string detail = format("%d/%d exact matches with the counting oracle, max |diff| %.2g vs the wrong-direction "
                              "matrix layout, %.2f s; official scorer: ",
                              kScorerCases - mismatches, kScorerCases, worst_layout, secs) +
                       status_name(official.status) + " (" + official.detail + ")";
  const bool desk_ok = mismatches == 0 && worst_layout < 1e-9 && secs < kScorerSeconds;
  if (!desk_ok || official.status == Status::Fail) return {Status::Fail, detail};
  return {official.status == Status::Pass ? Status::Pass : Status::Skip, detail};
}

// 3 -------------------------------------------------------------------------

CheckResult gradient_check() {
  const auto start = Clock::now();
  const auto data = testing::synthetic_sequences(8);
  ModelConfig cfg;
  cfg.encoder = testing::toy_encoder(16, 2, 2);
  auto model = make_model(cfg, static_cast<int>(data.corpus.vocab.size()), 13);
  // Spread head weights so every softmax entry is far from the clamp.
  Random rng(14);
  for (auto* p : model.heads().all())
    if (p) p->value = rng.uniform(p->value.rows(), p->value.cols(), 0.2);
  // Four instances, one per class, including a gold-Other instance.
  const std::vector<AggregateSequence> batch(data.sequences.begin(), data.sequences.begin() + 4);
  LossConfig loss;
  loss.beta = kGradBeta;
  loss.lambda = kGradLambda;
  std::vector<int> negatives;
  for (const auto& seq : batch) negatives.push_back(select_negative_class(model.predict_proba(seq), seq.label));

  std::vector<ag::Parameter*> params;
  for (auto* p : model.heads().all())
    if (p) params.push_back(p);
  // Full objective, encoder included: forward from token ids every time.
  const auto res = testing::gradient_check(
      [&](ag::Tape& t) {
        ag::Var total = l2_penalty(t, model.parameters(), loss.lambda);
        for (std::size_t i = 0; i < batch.size(); ++i)
          total = ag::add(total, instance_loss(model.forward(t, batch[i]), batch[i].label, negatives[i], loss));
        return total;
      },
      params, kGradStep);
  const double secs = seconds_since(start);
  const bool ok = res.max_rel_error < kGradMaxRelError && secs < kGradSeconds;
  return {ok ? Status::Pass : Status::Fail,
          format("max relative error %.3g at %s over %zu head parameters (limit %.0e), %.1f s", res.max_rel_error,
                 res.worst.c_str(), res.checked, kGradMaxRelError, secs)};
}

// 4 -------------------------------------------------------------------------

CheckResult loss_semantics() {
  std::mt19937_64 gen(4);
  std::gamma_distribution<double> gamma(0.3, 1.0);
  std::uniform_int_distribution<int> label(0, kNumLabels - 1);
  int trials = 0, bad_negative = 0, bad_other = 0;
  double worst_ce = 0.0;
  LossConfig cfg;
  LossConfig ce_cfg;
  ce_cfg.beta = 0.0;
  ce_cfg.lambda = 0.0;
  for (int batch = 0; batch < 500; ++batch) {
    std::vector<Eigen::RowVectorXd> probs;
    std::vector<int> gold, neg;
    double ce = 0.0;
    for (int i = 0; i < 8; ++i, ++trials) {
      Eigen::RowVectorXd p(kNumLabels);
      for (int y = 0; y < kNumLabels; ++y) p(y) = gamma(gen);  // sparse Dirichlet draws, exact zeros included
      if (i == 0) p(label(gen)) = 0.0;
      if (p.sum() == 0.0) p(0) = 1.0;
      p /= p.sum();
      const int g = label(gen);
      const int n = select_negative_class(p, g);
      if (n == g || n == kOtherLabelId) ++bad_negative;
      if (g == kOtherLabelId) {
        ag::Tape t(false);
        const double got = instance_loss(t.constant(p), g, n, cfg).scalar();
        const double only_negative = -cfg.beta * std::log(1.0 - std::clamp(p(n), cfg.clamp_eps, 1 - cfg.clamp_eps));
        if (got != only_negative) ++bad_other;
      } else {
        ce -= std::log(std::clamp(p(g), ce_cfg.clamp_eps, 1 - ce_cfg.clamp_eps));
      }
      probs.push_back(p);
      gold.push_back(g);
      neg.push_back(n);
    }
    worst_ce = std::max(worst_ce, std::abs(compute_loss(probs, gold, neg, 0.0, ce_cfg) - ce));
  }
  const bool ok = bad_negative == 0 && bad_other == 0 && worst_ce <= kBetaZeroTolerance;
  return {ok ? Status::Pass : Status::Fail,
          format("%d distributions: y- in {gold, Other} %d times, gold-Other positive term seen %d times, "
                 "beta=0 vs cross-entropy max |diff| %.2g (limit %.0e)",
                 trials, bad_negative, bad_other, worst_ce, kBetaZeroTolerance)};
}

// 5 -------------------------------------------------------------------------

CheckResult overfit() {
  const auto start = Clock::now();
  const auto data = testing::synthetic_sequences(kOverfitInstances);
  ModelConfig mc;  // default toy transformer
  std::string detail;
  bool ok = true;
  for (const auto seed : kOverfitSeeds) {
    auto model = make_model(mc, static_cast<int>(data.corpus.vocab.size()), seed);
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.max_len = 32;
    tc.epochs = kOverfitEpochs;
    tc.seed = seed;
    double best = 0.0;
    int reached = 0;
    train(model, data.sequences, {}, tc, {}, [&](const EpochMetrics& m) {
      best = std::max(best, m.train_accuracy);
      if (m.train_accuracy >= kOverfitAccuracy) reached = m.epoch;
      return reached == 0;
    });
    ok = ok && reached > 0;
    detail += format("%sseed %llu: %s", detail.empty() ? "" : "; ", static_cast<unsigned long long>(seed),
                     reached ? format("%.1f%% at epoch %d", best, reached).c_str()
                             : format("best %.1f%% after %d epochs", best, kOverfitEpochs).c_str());
  }
  const double secs = seconds_since(start);
  ok = ok && secs < kOverfitSeconds;
  return {ok ? Status::Pass : Status::Fail,
          detail + format("; %.1f s (limit %.0f s, target %.0f%%)", secs, kOverfitSeconds, kOverfitAccuracy)};
}

// 6 -------------------------------------------------------------------------

CheckResult corpus_integrity() {
  // Invariants on the corpora at hand first; the official counts need the release.
  std::size_t checked = 0;
  std::vector<AnnotatedInstance> all = fixture_instances();
  const auto synthetic = make_synthetic_corpus(kOverfitInstances, 7);
  all.insert(all.end(), synthetic.instances.begin(), synthetic.instances.end());
  for (const auto& inst : all) {
    const auto why = indicator_violation(inst, extract_indicator(inst));
    if (!why.empty()) return {Status::Fail, "instance " + std::to_string(inst.raw.id) + ": " + why};
    ++checked;
  }
  const auto official = check_official_corpus();
  std::string detail = format("invariants hold on %zu fixture and synthetic instances; official files: ", checked) +
                       status_name(official.status) + " (" + official.detail + ")";
  return {official.status, detail};
}

// 7 -------------------------------------------------------------------------

CheckResult full_ablation() {
  auto r = check_full_ablation();
  r.detail = "STRETCH: " + r.detail;
  return r;
}

// 8 -------------------------------------------------------------------------

CheckResult nonbert_wiring() {
  const auto start = Clock::now();
  const auto train_set = make_synthetic_corpus(kOverfitInstances, 7);
  const auto test_set = make_synthetic_corpus(kOverfitInstances / 4, 8);
  AblationConfig cfg;
  cfg.model.encoder = testing::small_nonbert();
  cfg.train.learning_rate = 1e-3;
  cfg.train.max_len = 32;
  cfg.train.epochs = 15;
  cfg.train.seed = 1;
  cfg.sequencing.max_len = 32;
  const auto report = run_ablation(train_set.instances, test_set.instances, train_set.vocab, cfg);

  using S = NonBertSource;
  const std::vector<std::pair<S, S>> expected = {
      {S::Sentence, S::Indicator}, {S::Sentence, S::None}, {S::None, S::Indicator}, {S::Sentence, S::Sentence}};
  bool structure = !report.transformer && report.runs.size() == expected.size();
  for (std::size_t i = 0; structure && i < expected.size(); ++i)
    structure = report.runs[i].recurrent == expected[i].first && report.runs[i].convolutional == expected[i].second;
  const auto text = report.render();
  structure = structure && text.find("Entire Sentence     Entire Sentence") != std::string::npos &&
              report.to_json().at("rows").size() == expected.size();
  // Training went through the shared loss: the loss fell in every row.
  bool learned = true;
  std::string losses;
  for (const auto& run : report.runs) {
    const auto& e = run.training.epochs;
    learned = learned && e.size() >= 2 && e.back().loss < e.front().loss;
    losses += format("%s%.1f->%.1f", losses.empty() ? "" : ", ", e.front().loss, e.back().loss);
  }
  const bool ok = structure && learned;
  return {ok ? Status::Pass : Status::Fail,
          format("%zu rows (3 + sentence-twice) %s; epoch loss %s; full-input F1 %.2f; %.1f s", report.runs.size(),
                 structure ? "as expected" : "WRONG", losses.c_str(), report.runs.front().report.macro_f1,
                 seconds_since(start))};
}

}  // namespace

int main() {
  std::printf("relex acceptance\n");
  report(1, "indicator goldens", guarded(indicator_goldens));
  report(2, "scorer oracle equivalence", guarded(scorer_oracles));
  report(3, "gradient check", guarded(gradient_check));
  report(4, "loss semantics", guarded(loss_semantics));
  report(5, "overfit synthetic set", guarded(overfit));
  report(6, "corpus integrity", guarded(corpus_integrity));
  report(7, "ablation ordering at full scale", guarded(full_ablation));
  report(8, "non-transformer wiring", guarded(nonbert_wiring));
  std::printf("%s\n", failures ? "acceptance: FAILED" : "acceptance: no failures");
  return failures ? 1 : 0;
}
