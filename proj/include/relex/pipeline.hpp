#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "relex/corpus.hpp"
#include "relex/indicator.hpp"
#include "relex/model.hpp"
#include "relex/sequencing.hpp"
#include "relex/training.hpp"
#include "relex/vocab.hpp"

namespace relex {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything one CLI invocation needs. Paths may be empty when the
/// subcommand does not read them.
struct PipelineConfig {
  std::string train_corpus;
  std::string train_annotations;
  std::string test_corpus;
  std::string test_annotations;
  std::string vocabulary;
  std::string output_dir = "out";
  TrainConfig train;
  ModelConfig model;
  SequencingOptions sequencing;

  /// Checks that every named input exists.
  void validate() const {
    for (const auto& [key, path] : {std::pair<const char*, const std::string&>{"train_corpus", train_corpus},
                                    {"train_annotations", train_annotations},
                                    {"test_corpus", test_corpus},
                                    {"test_annotations", test_annotations},
                                    {"vocabulary", vocabulary},
                                    {"encoder.weights_path", model.encoder.weights_path}}) {
      if (!path.empty() && !std::filesystem::exists(path))
        throw ConfigError(std::string(key) + ": file '" + path + "' does not exist");
    }
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
    train.validate();
    model.encoder.validate();
  }
};

inline void from_json(const nlohmann::json& j, PipelineConfig& c) {
  const auto paths = j.value("paths", nlohmann::json::object());
  c.train_corpus = paths.value("train_corpus", c.train_corpus);
  c.train_annotations = paths.value("train_annotations", c.train_annotations);
  c.test_corpus = paths.value("test_corpus", c.test_corpus);
  c.test_annotations = paths.value("test_annotations", c.test_annotations);
  c.vocabulary = paths.value("vocabulary", c.vocabulary);
  c.output_dir = paths.value("output_dir", c.output_dir);
  if (j.contains("train")) c.train = j.at("train").get<TrainConfig>();
  if (j.contains("model")) c.model = j.at("model").get<ModelConfig>();
  if (j.contains("encoder")) c.model.encoder = j.at("encoder").get<EncoderConfig>();
  if (j.contains("mode")) c.model.mode = parse_input_mode(j.at("mode").get<std::string>());
  c.sequencing.max_len = c.train.max_len;
  c.sequencing.mode = c.model.mode;
  c.sequencing.entity_span_includes_markers = j.value("entity_span_includes_markers", false);
  c.sequencing.indicator_span_includes_markers = j.value("indicator_span_includes_markers", false);
}

inline void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = nlohmann::json{{"paths",
                      {{"train_corpus", c.train_corpus},
                       {"train_annotations", c.train_annotations},
                       {"test_corpus", c.test_corpus},
                       {"test_annotations", c.test_annotations},
                       {"vocabulary", c.vocabulary},
                       {"output_dir", c.output_dir}}},
                     {"train", c.train},
                     {"model", c.model},
                     {"mode", input_mode_name(c.model.mode)},
                     {"entity_span_includes_markers", c.sequencing.entity_span_includes_markers},
                     {"indicator_span_includes_markers", c.sequencing.indicator_span_includes_markers}};
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    return nlohmann::json::parse(in).get<PipelineConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid config '" + path + "': " + e.what());
  }
}

/// Parsed and annotated corpus; `limit` > 0 keeps the first `limit` instances.
inline std::vector<AnnotatedInstance> load_annotated(const std::string& corpus, const std::string& annotations,
                                                     int limit = 0) {
  auto raw = parse_semeval_file(corpus);
  if (limit > 0 && static_cast<std::size_t>(limit) < raw.size()) raw.resize(static_cast<std::size_t>(limit));
  std::ifstream in(annotations);
  if (!in) throw std::runtime_error("cannot open annotations '" + annotations + "'");
  auto blocks = parse_annotations(in, annotations);
  if (limit > 0 && blocks.size() > raw.size()) blocks.resize(raw.size());
  return attach_annotations(raw, blocks);
}

struct PreprocessedDataset {
  std::vector<AggregateSequence> sequences;
  std::vector<IndicatorSequence> indicators;
  std::map<std::string, int> removals_per_rule;
  int truncated = 0;
};

/// Indicator extraction plus sequencing for every instance, in corpus order.
inline PreprocessedDataset preprocess(const std::vector<AnnotatedInstance>& instances, const Vocabulary& vocab,
                                      const SequencingOptions& opts, const IndicatorRules& rules = {}) {
  PreprocessedDataset out;
  for (auto r : {RemovalRule::EntityDisambiguation, RemovalRule::PrincipalComponent, RemovalRule::UnrelatedEntity})
    out.removals_per_rule[std::string(rule_name(r))] = 0;
  for (const auto& inst : instances) {
    auto indicator = extract_indicator(inst, rules);
    for (const auto& rec : indicator.trace) ++out.removals_per_rule[std::string(rule_name(rec.rule))];
    out.sequences.push_back(assemble_instance(inst, indicator, vocab, opts));
    out.truncated += out.sequences.back().truncated ? 1 : 0;
    out.indicators.push_back(std::move(indicator));
  }
  return out;
}

inline nlohmann::json trace_summary(const PreprocessedDataset& d) {
  return {{"instances", d.sequences.size()}, {"truncated", d.truncated}, {"removals_per_rule", d.removals_per_rule}};
}

/// Re-sequences already extracted indicators under different options.
inline std::vector<AggregateSequence> sequence_all(const std::vector<AnnotatedInstance>& instances,
                                                   const std::vector<IndicatorSequence>& indicators,
                                                   const Vocabulary& vocab, const SequencingOptions& opts) {
  std::vector<AggregateSequence> out;
  out.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i)
    out.push_back(assemble_instance(instances[i], indicators[i], vocab, opts));
  return out;
}

}  // namespace relex
