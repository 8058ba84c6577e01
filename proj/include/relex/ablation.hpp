#pragma once

#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "relex/checkpoint.hpp"
#include "relex/evaluation.hpp"
#include "relex/indicator.hpp"
#include "relex/pipeline.hpp"
#include "relex/training.hpp"

namespace relex {

struct AblationConfig {
  ModelConfig model;  // mode and non-transformer inputs are overridden per row
  TrainConfig train;
  SequencingOptions sequencing;
  IndicatorRules rules;
};

/// One trained and scored input configuration.
struct AblationRun {
  std::string name;  // transformer rows: input name; non-transformer rows: "LSTM | CNN"
  InputMode mode = InputMode::Both;
  NonBertSource recurrent = NonBertSource::None;
  NonBertSource convolutional = NonBertSource::None;
  ClassReport report;
  std::vector<int> predictions;
  TrainResult training;
};

struct AblationReport {
  bool transformer = true;
  std::vector<AblationRun> runs;

  [[nodiscard]] std::string render() const {
    std::ostringstream out;
    if (transformer) {
      out << std::left << std::setw(40) << "Input" << std::right << std::setw(8) << "F1" << '\n';
      for (const auto& r : runs) out << std::left << std::setw(40) << r.name << std::right << std::setw(8) << fmt2(r.report.macro_f1) << '\n';
    } else {
      out << std::left << std::setw(20) << "LSTM" << std::setw(20) << "CNN" << std::right << std::setw(8) << "F1" << '\n';
      auto cell = [](NonBertSource s) { return s == NonBertSource::None ? std::string("-") : source_label(s); };
      for (const auto& r : runs)
        out << std::left << std::setw(20) << cell(r.recurrent) << std::setw(20) << cell(r.convolutional) << std::right
            << std::setw(8) << fmt2(r.report.macro_f1) << '\n';
    }
    return out.str();
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : runs) {
      nlohmann::json row{{"name", r.name}, {"macro_f1", std::round(r.report.macro_f1 * 100.0) / 100.0},
                         {"report", relex::to_json(r.report)}};
      if (transformer) {
        row["mode"] = input_mode_name(r.mode);
      } else {
        row["lstm"] = nonbert_source_name(r.recurrent);
        row["cnn"] = nonbert_source_name(r.convolutional);
      }
      rows.push_back(row);
    }
    return {{"model", transformer ? "transformer" : "non-transformer"}, {"rows", rows}};
  }

  static std::string source_label(NonBertSource s) {
    return s == NonBertSource::Sentence ? "Entire Sentence" : "Indicator Sequence";
  }
};

inline std::string ablation_row_name(InputMode m) {
  switch (m) {
    case InputMode::Both: return "Entire Sentence + Indicator Sequence";
    case InputMode::SentenceOnly: return "Entire Sentence";
    case InputMode::IndicatorOnly: return "Indicator Sequence";
  }
  return "?";
}

/// Trains one configuration on `train` and scores it on `test`.
inline AblationRun train_and_score(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                                   const std::vector<AggregateSequence>& train,
                                   const std::vector<AggregateSequence>& test, int vocab_size) {
  RelationModel model = make_model(model_cfg, vocab_size, train_cfg.seed);
  if (model_cfg.encoder.variant == EncoderVariant::PretrainedTransformer)
    load_encoder_weights(model, model_cfg.encoder.weights_path);
  const auto split = split_dev(train, train_cfg.dev_fraction, train_cfg.seed);
  AblationRun run;
  run.training = train_model_best(model, split, train_cfg);
  run.predictions = predict_all(model, test);
  std::vector<int> gold;
  for (const auto& s : test) gold.push_back(s.label);
  run.report = score_official(gold, run.predictions);
  return run;
}

/// Table III harness. Transformer encoders get the three input modes; the
/// recurrent-plus-convolutional encoder gets its four module/input pairings.
/// Every row uses the same seed and hyperparameters.
inline AblationReport run_ablation(const std::vector<AnnotatedInstance>& train,
                                   const std::vector<AnnotatedInstance>& test, const Vocabulary& vocab,
                                   const AblationConfig& cfg) {
  std::vector<IndicatorSequence> train_ind, test_ind;
  for (const auto& inst : train) train_ind.push_back(extract_indicator(inst, cfg.rules));
  for (const auto& inst : test) test_ind.push_back(extract_indicator(inst, cfg.rules));
  const int vocab_size = static_cast<int>(vocab.size());

  AblationReport report;
  report.transformer = cfg.model.is_transformer();
  if (report.transformer) {
    for (InputMode mode : {InputMode::Both, InputMode::SentenceOnly, InputMode::IndicatorOnly}) {
      SequencingOptions opts = cfg.sequencing;
      opts.mode = mode;
      ModelConfig mc = cfg.model;
      mc.mode = mode;
      AblationRun run = train_and_score(mc, cfg.train, sequence_all(train, train_ind, vocab, opts),
                                        sequence_all(test, test_ind, vocab, opts), vocab_size);
      run.name = ablation_row_name(mode);
      run.mode = mode;
      report.runs.push_back(std::move(run));
    }
  } else {
    SequencingOptions opts = cfg.sequencing;
    opts.mode = InputMode::Both;
    const auto train_seqs = sequence_all(train, train_ind, vocab, opts);
    const auto test_seqs = sequence_all(test, test_ind, vocab, opts);
    using S = NonBertSource;
    for (auto [lstm, cnn] : {std::pair{S::Sentence, S::Indicator},
                             {S::Sentence, S::None},
                             {S::None, S::Indicator},
                             {S::Sentence, S::Sentence}}) {
      ModelConfig mc = cfg.model;
      mc.mode = InputMode::Both;
      mc.recurrent_input = lstm;
      mc.convolutional_input = cnn;
      AblationRun run = train_and_score(mc, cfg.train, train_seqs, test_seqs, vocab_size);
      run.recurrent = lstm;
      run.convolutional = cnn;
      auto cell = [](S s) { return s == S::None ? std::string("-") : AblationReport::source_label(s); };
      run.name = cell(lstm) + " | " + cell(cnn);
      report.runs.push_back(std::move(run));
    }
  }
  return report;
}

}  // namespace relex
