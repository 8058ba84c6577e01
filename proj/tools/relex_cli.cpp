// relex: command-line front end for the relation-extraction pipeline.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "relex/relex.hpp"

namespace fs = std::filesystem;
using namespace relex;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  int limit = 0;
  std::optional<std::string> mode;
  std::optional<std::string> encoder;
  std::optional<std::string> output;
  std::optional<double> epochs;
  int synthetic = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "JSON pipeline config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Random seed (overrides config)");
  cmd->add_option("--limit", o.limit, "Use only the first N instances of each corpus")->check(CLI::NonNegativeNumber);
  cmd->add_option("--mode", o.mode, "Input mode")->check(CLI::IsMember({"both", "sentence", "indicator"}));
  cmd->add_option("--encoder", o.encoder, "Encoder variant")->check(CLI::IsMember({"pretrained", "toy", "nonbert"}));
  cmd->add_option("--output", o.output, "Output directory (overrides config)");
  cmd->add_option("--epochs", o.epochs, "Training epochs (overrides config)");
  cmd->add_option("--synthetic", o.synthetic, "Use a generated corpus of N training instances")
      ->check(CLI::NonNegativeNumber);
}

/// Config file first, then flags.
PipelineConfig resolve(const CommonOptions& o) {
  PipelineConfig cfg;
  if (o.synthetic > 0) {
    cfg.model.encoder.variant = EncoderVariant::ToyTransformer;
    cfg.train.learning_rate = 1e-3;
    cfg.train.max_len = 32;
    cfg.sequencing.max_len = 32;
  }
  if (!o.config.empty()) cfg = load_pipeline_config(o.config);
  if (o.seed) cfg.train.seed = *o.seed;
  if (o.mode) cfg.model.mode = parse_input_mode(*o.mode);
  if (o.encoder) cfg.model.encoder.variant = parse_encoder_variant(*o.encoder);
  if (o.output) cfg.output_dir = *o.output;
  if (o.epochs) cfg.train.epochs = *o.epochs;
  cfg.sequencing.mode = cfg.model.mode;
  cfg.sequencing.max_len = cfg.train.max_len;
  if (cfg.model.encoder.variant == EncoderVariant::PretrainedTransformer) {
    if (cfg.model.encoder.weights_path.empty())
      throw ConfigError("the pretrained encoder needs encoder.weights_path");
    if (!fs::exists(cfg.model.encoder.weights_path))
      throw ConfigError("encoder.weights_path: file '" + cfg.model.encoder.weights_path + "' does not exist");
    cfg.model.encoder = read_encoder_weights_config(cfg.model.encoder.weights_path);
  }
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  return cfg;
}

struct Corpora {
  Vocabulary vocab;
  std::vector<AnnotatedInstance> train;
  std::vector<AnnotatedInstance> test;
};

void require(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("config is missing paths.") + what);
}

Corpora load_corpora(const PipelineConfig& cfg, const CommonOptions& o, bool need_train, bool need_test) {
  Corpora c;
  if (o.synthetic > 0) {
    auto train = make_synthetic_corpus(o.synthetic, 7);
    auto test = make_synthetic_corpus(std::max(8, o.synthetic / 4), 8);
    c.vocab = train.vocab;
    c.train = std::move(train.instances);
    c.test = std::move(test.instances);
    if (o.limit > 0) {
      if (c.train.size() > static_cast<std::size_t>(o.limit)) c.train.resize(static_cast<std::size_t>(o.limit));
      if (c.test.size() > static_cast<std::size_t>(o.limit)) c.test.resize(static_cast<std::size_t>(o.limit));
    }
    return c;
  }
  require(cfg.vocabulary, "vocabulary");
  c.vocab = Vocabulary::from_file(cfg.vocabulary);
  if (need_train) {
    require(cfg.train_corpus, "train_corpus");
    require(cfg.train_annotations, "train_annotations");
    c.train = load_annotated(cfg.train_corpus, cfg.train_annotations, o.limit);
  }
  if (need_test) {
    require(cfg.test_corpus, "test_corpus");
    require(cfg.test_annotations, "test_annotations");
    c.test = load_annotated(cfg.test_corpus, cfg.test_annotations, o.limit);
  }
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

AnswerKey answer_key(const std::vector<AggregateSequence>& seqs, const std::vector<int>& labels) {
  AnswerKey key;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    key.ids.push_back(seqs[i].id);
    key.labels.push_back(RelationLabel::from_id(labels[i]));
  }
  return key;
}

int cmd_preprocess(const CommonOptions& o) {
  const auto cfg = resolve(o);
  const bool synthetic = o.synthetic > 0;
  const auto corpora = load_corpora(cfg, o, true, synthetic || !cfg.test_corpus.empty());
  nlohmann::json summary;
  auto run = [&](const std::vector<AnnotatedInstance>& instances, const std::string& name) {
    const auto data = preprocess(instances, corpora.vocab, cfg.sequencing);
    write_jsonl((fs::path(cfg.output_dir) / (name + ".jsonl")).string(), data.sequences);
    summary[name] = trace_summary(data);
  };
  run(corpora.train, "train");
  if (!corpora.test.empty()) run(corpora.test, "test");
  write_text(fs::path(cfg.output_dir) / "trace_summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int cmd_extract(const CommonOptions& o, bool trace) {
  const auto cfg = resolve(o);
  const auto corpora = load_corpora(cfg, o, true, false);
  std::ofstream tsv(fs::path(cfg.output_dir) / "indicators.tsv");
  std::ofstream trace_out;
  if (trace) trace_out.open(fs::path(cfg.output_dir) / "indicator_trace.jsonl");
  for (const auto& inst : corpora.train) {
    const auto ind = extract_indicator(inst);
    tsv << inst.raw.id << '\t' << ind.joined() << '\n';
    if (trace) {
      nlohmann::json removed = nlohmann::json::array();
      for (const auto& r : ind.trace)
        removed.push_back({{"index", r.token_index},
                           {"token", inst.tokens[static_cast<std::size_t>(r.token_index)].surface},
                           {"rule", rule_name(r.rule)}});
      nlohmann::json kept = nlohmann::json::array();
      for (const auto& t : ind.tokens) kept.push_back(t.index);
      trace_out << nlohmann::json{{"id", inst.raw.id}, {"indicator", ind.joined()}, {"kept", kept}, {"removed", removed}}
                       .dump()
                << '\n';
    }
  }
  std::cout << "wrote " << corpora.train.size() << " indicators to " << (fs::path(cfg.output_dir) / "indicators.tsv")
            << '\n';
  return 0;
}

RelationModel build_model(const PipelineConfig& cfg, const Vocabulary& vocab) {
  RelationModel model = make_model(cfg.model, static_cast<int>(vocab.size()), cfg.train.seed);
  if (cfg.model.encoder.variant == EncoderVariant::PretrainedTransformer)
    load_encoder_weights(model, cfg.model.encoder.weights_path);
  return model;
}

int cmd_train(const CommonOptions& o) {
  const auto cfg = resolve(o);
  const auto corpora = load_corpora(cfg, o, true, false);
  // Non-transformer models read both segments whatever the head mode.
  SequencingOptions seq = cfg.sequencing;
  if (!cfg.model.is_transformer()) seq.mode = InputMode::Both;
  const auto data = preprocess(corpora.train, corpora.vocab, seq);
  const auto split = split_dev(data.sequences, cfg.train.dev_fraction, cfg.train.seed);
  write_text(fs::path(cfg.output_dir) / "config.json", nlohmann::json(cfg).dump(2) + "\n");
  corpora.vocab.save((fs::path(cfg.output_dir) / "vocab.txt").string());

  RelationModel model = build_model(cfg, corpora.vocab);
  const TrainOutputs outputs{cfg.output_dir, corpora.vocab.hash()};
  const auto result = train(model, split.train, split.dev, cfg.train, outputs, [](const EpochMetrics& m) {
    std::cout << to_json(m).dump() << std::endl;
    return true;
  });
  std::cout << "trained " << result.steps << " steps on " << split.train.size() << " instances ("
            << split.dev.size() << " held out); checkpoints in " << cfg.output_dir << '\n';
  return 0;
}

int cmd_evaluate(const CommonOptions& o, const std::string& checkpoint, const std::string& baseline) {
  if (checkpoint.empty()) throw ConfigError("evaluate needs --checkpoint");
  const auto cfg = resolve(o);
  const auto corpora = load_corpora(cfg, o, false, true);
  auto loaded = load_checkpoint(checkpoint, corpora.vocab.hash());
  auto evaluate = [&](const RelationModel& model) {
    SequencingOptions seq = cfg.sequencing;
    seq.mode = model.config().is_transformer() ? model.config().mode : InputMode::Both;
    const auto data = preprocess(corpora.test, corpora.vocab, seq);
    return std::pair{data.sequences, predict_all(model, data.sequences)};
  };
  const auto [seqs, pred] = evaluate(loaded.model);
  std::vector<int> gold;
  for (const auto& s : seqs) gold.push_back(s.label);
  const fs::path out = cfg.output_dir;
  {
    std::ofstream keys(out / "predictions.txt");
    write_answer_key(keys, answer_key(seqs, pred));
  }
  const auto report = score_official(gold, pred);
  write_text(out / "report.json", to_json(report).dump(2) + "\n");
  write_text(out / "report.txt", render_report(report));
  std::cout << render_report(report);
  if (!baseline.empty()) {
    auto base = load_checkpoint(baseline, corpora.vocab.hash());
    const auto base_pred = evaluate(base.model).second;
    const auto cmp = per_class_report(gold, base_pred, pred);
    write_text(out / "comparison.json", cmp.to_json().dump(2) + "\n");
    write_text(out / "comparison.txt", cmp.render());
    std::cout << '\n' << cmp.render();
  }
  return 0;
}

int cmd_ablate(const CommonOptions& o) {
  const auto cfg = resolve(o);
  const auto corpora = load_corpora(cfg, o, true, true);
  AblationConfig acfg;
  acfg.model = cfg.model;
  acfg.train = cfg.train;
  acfg.sequencing = cfg.sequencing;
  const auto report = run_ablation(corpora.train, corpora.test, corpora.vocab, acfg);
  write_text(fs::path(cfg.output_dir) / "ablation.json", report.to_json().dump(2) + "\n");
  write_text(fs::path(cfg.output_dir) / "ablation.txt", report.render());
  std::cout << report.render();
  return 0;
}

int cmd_score(const std::string& gold_path, const std::string& pred_path, bool json) {
  const auto report = score_answer_keys(read_answer_key_file(gold_path), read_answer_key_file(pred_path));
  if (json)
    std::cout << to_json(report).dump(2) << '\n';
  else
    std::cout << render_report(report);
  return 0;
}

int cmd_skeleton(const std::string& corpus, const std::string& output) {
  const auto instances = parse_semeval_file(corpus);
  if (output.empty()) {
    std::cout << annotation_skeleton(instances);
  } else {
    fs::create_directories(fs::path(output).parent_path().empty() ? "." : fs::path(output).parent_path());
    write_text(output, annotation_skeleton(instances));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Indicator-aware relation extraction for SemEval-2010 Task 8"};
  app.require_subcommand(1);

  CommonOptions pre, ext, tr, ev, ab;
  auto* preprocess_cmd = app.add_subcommand("preprocess", "Parse, annotate, extract indicators and sequence");
  add_common(preprocess_cmd, pre);

  bool trace = false;
  auto* extract_cmd = app.add_subcommand("extract-indicators", "Write one indicator sequence per instance");
  add_common(extract_cmd, ext);
  extract_cmd->add_flag("--trace", trace, "Also write a JSON removal trace per instance");

  auto* train_cmd = app.add_subcommand("train", "Train a model");
  add_common(train_cmd, tr);

  std::string checkpoint, baseline;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a checkpoint on the test corpus");
  add_common(eval_cmd, ev);
  eval_cmd->add_option("--checkpoint", checkpoint, "Model checkpoint");
  eval_cmd->add_option("--baseline", baseline, "Second checkpoint for a side-by-side per-class report");

  auto* ablate_cmd = app.add_subcommand("ablate", "Train and score the input-mode ablation");
  add_common(ablate_cmd, ab);

  std::string gold, pred;
  bool json = false;
  auto* score_cmd = app.add_subcommand("score", "Official scoring of two answer keys");
  score_cmd->add_option("gold", gold, "Gold answer key")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("pred", pred, "Predicted answer key")->required()->check(CLI::ExistingFile);
  score_cmd->add_flag("--json", json, "Print the report as JSON");

  std::string corpus, skeleton_out;
  auto* skel_cmd = app.add_subcommand("annotation-skeleton", "Emit a token/tag skeleton for an external tagger");
  skel_cmd->add_option("corpus", corpus, "SemEval-format corpus")->required()->check(CLI::ExistingFile);
  skel_cmd->add_option("--output", skeleton_out, "Write to this file instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*preprocess_cmd) return cmd_preprocess(pre);
    if (*extract_cmd) return cmd_extract(ext, trace);
    if (*train_cmd) return cmd_train(tr);
    if (*eval_cmd) return cmd_evaluate(ev, checkpoint, baseline);
    if (*ablate_cmd) return cmd_ablate(ab);
    if (*score_cmd) return cmd_score(gold, pred, json);
    if (*skel_cmd) return cmd_skeleton(corpus, skeleton_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
