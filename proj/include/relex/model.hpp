#pragma once

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "relex/autograd.hpp"
#include "relex/encoder.hpp"
#include "relex/heads.hpp"
#include "relex/label.hpp"
#include "relex/random.hpp"
#include "relex/sequencing.hpp"

namespace relex {

/// What the recurrent and convolutional modules of the non-transformer
/// variant read.
enum class NonBertSource { None, Sentence, Indicator };

inline std::string_view nonbert_source_name(NonBertSource s) {
  switch (s) {
    case NonBertSource::None: return "none";
    case NonBertSource::Sentence: return "sentence";
    case NonBertSource::Indicator: return "indicator";
  }
  return "?";
}

inline NonBertSource parse_nonbert_source(std::string_view s) {
  if (s == "none") return NonBertSource::None;
  if (s == "sentence") return NonBertSource::Sentence;
  if (s == "indicator") return NonBertSource::Indicator;
  throw std::invalid_argument("unknown non-transformer input '" + std::string(s) + "'");
}

struct ModelConfig {
  EncoderConfig encoder;
  InputMode mode = InputMode::Both;
  NonBertSource recurrent_input = NonBertSource::Sentence;
  NonBertSource convolutional_input = NonBertSource::Indicator;
  int num_labels = kNumLabels;

  [[nodiscard]] bool is_transformer() const { return encoder.variant != EncoderVariant::RecurrentConvolutional; }
  [[nodiscard]] int fused_parts() const { return mode == InputMode::SentenceOnly ? 3 : 4; }
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"encoder", c.encoder},
                     {"mode", input_mode_name(c.mode)},
                     {"recurrent_input", nonbert_source_name(c.recurrent_input)},
                     {"convolutional_input", nonbert_source_name(c.convolutional_input)},
                     {"num_labels", c.num_labels}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  if (j.contains("encoder")) c.encoder = j.at("encoder").get<EncoderConfig>();
  c.mode = parse_input_mode(j.value("mode", std::string("both")));
  c.recurrent_input = parse_nonbert_source(j.value("recurrent_input", std::string("sentence")));
  c.convolutional_input = parse_nonbert_source(j.value("convolutional_input", std::string("indicator")));
  c.num_labels = j.value("num_labels", kNumLabels);
}

/// Encoder plus heads. The transformer variants produce r through the four
/// (three in sentence-only mode) heads and the fusion layers; the
/// recurrent-plus-convolutional variant concatenates its two module outputs.
class RelationModel {
 public:
  RelationModel(const ModelConfig& cfg, int vocab_size, Random& rng)
      : cfg_(cfg), store_(std::make_unique<ag::ParameterStore>()), vocab_size_(vocab_size) {
    cfg_.encoder.validate();
    if (cfg_.is_transformer()) {
      transformer_ = std::make_unique<TransformerEncoder>(cfg_.encoder, vocab_size, *store_, rng);
      heads_ = make_head_parameters(*store_, cfg_.encoder.hidden_dim, cfg_.fused_parts(), cfg_.num_labels,
                                    cfg_.encoder.init_range, rng);
    } else {
      if (cfg_.recurrent_input == NonBertSource::None && cfg_.convolutional_input == NonBertSource::None)
        throw std::invalid_argument("non-transformer model needs at least one input");
      nonbert_ = std::make_unique<RecurrentConvolutionalEncoder>(cfg_.encoder, vocab_size, *store_, rng);
      const int dim = cfg_.encoder.representation_dim();
      heads_.ws = &store_->add("head.ws", rng.uniform(cfg_.num_labels, dim, cfg_.encoder.init_range), true);
      heads_.bs = &store_->add("head.bs", ag::Matrix::Zero(1, cfg_.num_labels), false);
    }
  }

  [[nodiscard]] const ModelConfig& config() const { return cfg_; }
  [[nodiscard]] ag::ParameterStore& parameters() const { return *store_; }
  [[nodiscard]] const HeadParameters& heads() const { return heads_; }
  [[nodiscard]] int vocab_size() const { return vocab_size_; }

  /// Hidden states of the unpadded prefix (transformer variants).
  ag::Var encode(ag::Tape& t, const AggregateSequence& seq) const {
    require_transformer();
    return transformer_->forward(t, seq.ids, seq.segment_ids, seq.length());
  }

  /// Relation representation r from encoder output.
  ag::Var represent_from_hidden(ag::Tape& t, ag::Var hidden, const AggregateSequence& seq) const {
    require_transformer();
    (void)t;
    std::vector<ag::Var> parts;
    parts.push_back(aggregate_head(ag::slice_rows(hidden, seq.cls_index, 1), heads_));
    parts.push_back(entity_head(hidden, seq.e1_rows, heads_));
    parts.push_back(entity_head(hidden, seq.e2_rows, heads_));
    if (cfg_.mode != InputMode::SentenceOnly) {
      if (seq.indicator_rows.empty())
        throw std::invalid_argument("instance " + std::to_string(seq.id) + " has no indicator segment");
      parts.push_back(indicator_head(hidden, seq.indicator_rows, heads_));
    }
    return fuse(parts, heads_);
  }

  ag::Var represent(ag::Tape& t, const AggregateSequence& seq) const {
    if (cfg_.is_transformer()) return represent_from_hidden(t, encode(t, seq), seq);
    return represent_nonbert(t, seq);
  }

  /// Class distribution (1 x |Y|). Dropout on r is applied when `dropout_rng`
  /// is given and `dropout_rate` > 0.
  ag::Var forward(ag::Tape& t, const AggregateSequence& seq, Random* dropout_rng = nullptr,
                  double dropout_rate = 0.0) const {
    return classify_representation(represent(t, seq), dropout_rng, dropout_rate);
  }

  ag::Var forward_from_hidden(ag::Tape& t, ag::Var hidden, const AggregateSequence& seq,
                              Random* dropout_rng = nullptr, double dropout_rate = 0.0) const {
    return classify_representation(represent_from_hidden(t, hidden, seq), dropout_rng, dropout_rate);
  }

  ag::Var classify_representation(ag::Var r, Random* dropout_rng, double dropout_rate) const {
    if (dropout_rng && dropout_rate > 0.0) {
      const ag::Matrix mask = dropout_rng->dropout_mask(r.rows(), r.cols(), dropout_rate);
      return classify(r, *heads_.ws, *heads_.bs, &mask);
    }
    return classify(r, *heads_.ws, *heads_.bs);
  }

  /// Evaluation-mode distribution.
  [[nodiscard]] Eigen::RowVectorXd predict_proba(const AggregateSequence& seq) const {
    ag::Tape t(false);
    return forward(t, seq).value().row(0);
  }

  [[nodiscard]] int predict(const AggregateSequence& seq) const {
    Eigen::Index best = 0;
    predict_proba(seq).maxCoeff(&best);
    return static_cast<int>(best);
  }

  // Non-transformer building blocks, exposed for tests and ablations.
  [[nodiscard]] const RecurrentConvolutionalEncoder* nonbert() const { return nonbert_.get(); }

  /// Snapshot of every parameter value, in store order.
  [[nodiscard]] std::vector<ag::Matrix> snapshot() const {
    std::vector<ag::Matrix> out;
    for (const auto& p : *store_) out.push_back(p->value);
    return out;
  }

  void restore(const std::vector<ag::Matrix>& values) {
    if (values.size() != store_->size()) throw std::invalid_argument("snapshot size mismatch");
    std::size_t i = 0;
    for (const auto& p : *store_) p->value = values[i++];
  }

 private:
  void require_transformer() const {
    if (!transformer_) throw std::logic_error("operation requires a transformer encoder");
  }

  static std::vector<int> segment_ids(const AggregateSequence& seq, NonBertSource src) {
    std::vector<int> ids;
    if (src == NonBertSource::Sentence) {
      if (!seq.markers) throw std::invalid_argument("instance " + std::to_string(seq.id) + " has no sentence segment");
      for (int i = seq.cls_index + 1; i < static_cast<int>(seq.ids.size()) && seq.attention_mask[i]; ++i) {
        if (seq.indicator_segment && i >= seq.indicator_segment->begin - 1) break;  // stop at first [SEP]
        ids.push_back(seq.ids[i]);
      }
      if (!seq.indicator_segment) ids.pop_back();  // trailing [SEP]
    } else if (src == NonBertSource::Indicator) {
      if (!seq.indicator_segment)
        throw std::invalid_argument("instance " + std::to_string(seq.id) + " has no indicator segment");
      for (int i = seq.indicator_segment->begin; i < seq.indicator_segment->end; ++i) ids.push_back(seq.ids[i]);
    }
    return ids;
  }

  ag::Var represent_nonbert(ag::Tape& t, const AggregateSequence& seq) const {
    const auto& enc = *nonbert_;
    ag::Var context = t.constant(ag::Matrix::Zero(1, enc.context_dim()));
    ag::Var feature = t.constant(ag::Matrix::Zero(1, enc.feature_dim()));
    if (cfg_.recurrent_input != NonBertSource::None)
      context = enc.encode_sentence_recurrent(enc.embed(t, segment_ids(seq, cfg_.recurrent_input)));
    if (cfg_.convolutional_input != NonBertSource::None)
      feature = enc.encode_indicator_convolutional(enc.embed(t, segment_ids(seq, cfg_.convolutional_input)));
    return fuse_nonbert(context, feature);
  }

  ModelConfig cfg_;
  std::unique_ptr<ag::ParameterStore> store_;
  int vocab_size_ = 0;
  std::unique_ptr<TransformerEncoder> transformer_;
  std::unique_ptr<RecurrentConvolutionalEncoder> nonbert_;
  HeadParameters heads_;
};

/// Evaluation-mode hidden states for a batch, one matrix per instance.
inline std::vector<ag::Matrix> encode_batch(const RelationModel& model, std::span<const AggregateSequence> batch) {
  std::vector<ag::Matrix> out;
  out.reserve(batch.size());
  for (const auto& seq : batch) {
    ag::Tape t(false);
    out.push_back(model.encode(t, seq).value());
  }
  return out;
}

}  // namespace relex
