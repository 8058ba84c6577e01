#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "relex/autograd.hpp"
#include "relex/random.hpp"

namespace relex {

enum class EncoderVariant { PretrainedTransformer, ToyTransformer, RecurrentConvolutional };

inline std::string_view encoder_variant_name(EncoderVariant v) {
  switch (v) {
    case EncoderVariant::PretrainedTransformer: return "pretrained-bidirectional-transformer";
    case EncoderVariant::ToyTransformer: return "toy-transformer";
    case EncoderVariant::RecurrentConvolutional: return "recurrent-plus-convolutional";
  }
  return "?";
}

inline EncoderVariant parse_encoder_variant(std::string_view s) {
  if (s == "pretrained-bidirectional-transformer" || s == "pretrained") return EncoderVariant::PretrainedTransformer;
  if (s == "toy-transformer" || s == "toy") return EncoderVariant::ToyTransformer;
  if (s == "recurrent-plus-convolutional" || s == "nonbert") return EncoderVariant::RecurrentConvolutional;
  throw std::invalid_argument("unknown encoder variant '" + std::string(s) + "'");
}

struct EncoderConfig {
  EncoderVariant variant = EncoderVariant::ToyTransformer;
  int hidden_dim = 64;
  int layers = 2;
  int heads = 4;
  int intermediate_dim = 128;
  int max_positions = 512;
  int type_vocab_size = 2;
  double layer_norm_eps = 1e-12;
  double init_range = 0.05;
  std::string weights_path;  // pretrained variant only

  // recurrent-plus-convolutional variant
  int embedding_dim = 64;
  int lstm_hidden = 48;
  int conv_filters = 64;
  int conv_window = 3;

  void validate() const {
    if (hidden_dim <= 0) throw std::invalid_argument("encoder hidden_dim must be positive");
    if (variant != EncoderVariant::RecurrentConvolutional) {
      if (layers <= 0 || heads <= 0 || intermediate_dim <= 0 || max_positions <= 0)
        throw std::invalid_argument("transformer layers, heads, intermediate_dim and max_positions must be positive");
      if (hidden_dim % heads != 0) throw std::invalid_argument("hidden_dim must be divisible by heads");
    } else if (embedding_dim <= 0 || lstm_hidden <= 0 || conv_filters <= 0 || conv_window <= 0) {
      throw std::invalid_argument("recurrent/convolutional dimensions must be positive");
    }
  }

  /// Width of the relation representation the classifier sees.
  [[nodiscard]] int representation_dim() const {
    return variant == EncoderVariant::RecurrentConvolutional ? 2 * lstm_hidden + conv_filters : hidden_dim;
  }
};

inline void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = nlohmann::json{{"variant", encoder_variant_name(c.variant)},
                     {"hidden_dim", c.hidden_dim},
                     {"layers", c.layers},
                     {"heads", c.heads},
                     {"intermediate_dim", c.intermediate_dim},
                     {"max_positions", c.max_positions},
                     {"type_vocab_size", c.type_vocab_size},
                     {"layer_norm_eps", c.layer_norm_eps},
                     {"init_range", c.init_range},
                     {"weights_path", c.weights_path},
                     {"embedding_dim", c.embedding_dim},
                     {"lstm_hidden", c.lstm_hidden},
                     {"conv_filters", c.conv_filters},
                     {"conv_window", c.conv_window}};
}

inline void from_json(const nlohmann::json& j, EncoderConfig& c) {
  EncoderConfig d;
  c.variant = parse_encoder_variant(j.value("variant", std::string(encoder_variant_name(d.variant))));
  c.hidden_dim = j.value("hidden_dim", d.hidden_dim);
  c.layers = j.value("layers", d.layers);
  c.heads = j.value("heads", d.heads);
  c.intermediate_dim = j.value("intermediate_dim", d.intermediate_dim);
  c.max_positions = j.value("max_positions", d.max_positions);
  c.type_vocab_size = j.value("type_vocab_size", d.type_vocab_size);
  c.layer_norm_eps = j.value("layer_norm_eps", d.layer_norm_eps);
  c.init_range = j.value("init_range", d.init_range);
  c.weights_path = j.value("weights_path", d.weights_path);
  c.embedding_dim = j.value("embedding_dim", d.embedding_dim);
  c.lstm_hidden = j.value("lstm_hidden", d.lstm_hidden);
  c.conv_filters = j.value("conv_filters", d.conv_filters);
  c.conv_window = j.value("conv_window", d.conv_window);
}

/// Post-LN bidirectional transformer with learned positions and token types
/// (the BERT layout). Parameter names follow "encoder.*".
class TransformerEncoder {
 public:
  TransformerEncoder(const EncoderConfig& cfg, int vocab_size, ag::ParameterStore& store, Random& rng)
      : cfg_(cfg) {
    const int d = cfg.hidden_dim;
    const double r = cfg.init_range;
    auto ln = [&](const std::string& prefix) {
      store.add(prefix + ".gamma", ag::Matrix::Ones(1, d));
      store.add(prefix + ".beta", ag::Matrix::Zero(1, d));
    };
    auto dense = [&](const std::string& prefix, int out, int in) {
      store.add(prefix + ".weight", rng.uniform(out, in, r));
      store.add(prefix + ".bias", ag::Matrix::Zero(1, out));
    };
    word_ = &store.add("encoder.embeddings.word", rng.uniform(vocab_size, d, r));
    position_ = &store.add("encoder.embeddings.position", rng.uniform(cfg.max_positions, d, r));
    token_type_ = &store.add("encoder.embeddings.token_type", rng.uniform(cfg.type_vocab_size, d, r));
    ln("encoder.embeddings.ln");
    for (int l = 0; l < cfg.layers; ++l) {
      const std::string p = "encoder.layer." + std::to_string(l);
      dense(p + ".attention.query", d, d);
      dense(p + ".attention.key", d, d);
      dense(p + ".attention.value", d, d);
      dense(p + ".attention.output", d, d);
      ln(p + ".attention.ln");
      dense(p + ".ffn.intermediate", cfg.intermediate_dim, d);
      dense(p + ".ffn.output", d, cfg.intermediate_dim);
      ln(p + ".ffn.ln");
    }
    store_ = &store;
  }

  /// Hidden states for the first `length` positions (L x d_h).
  ag::Var forward(ag::Tape& t, const std::vector<int>& ids, const std::vector<int>& segments, int length) const {
    if (length > cfg_.max_positions)
      throw std::invalid_argument("sequence length " + std::to_string(length) + " exceeds max_positions");
    std::vector<int> tok(ids.begin(), ids.begin() + length);
    std::vector<int> seg(segments.begin(), segments.begin() + length);
    std::vector<int> pos(static_cast<std::size_t>(length));
    for (int i = 0; i < length; ++i) pos[i] = i;
    for (int v : tok)
      if (v < 0 || v >= word_->value.rows()) throw std::out_of_range("token id " + std::to_string(v) + " outside vocabulary");

    ag::Var x = ag::add(ag::add(ag::gather_rows(t.param(*word_), tok), ag::gather_rows(t.param(*position_), pos)),
                        ag::gather_rows(t.param(*token_type_), seg));
    x = norm(t, x, "encoder.embeddings.ln");

    const int d = cfg_.hidden_dim;
    const int dk = d / cfg_.heads;
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
    for (int l = 0; l < cfg_.layers; ++l) {
      const std::string p = "encoder.layer." + std::to_string(l);
      const auto q = dense(t, x, p + ".attention.query");
      const auto k = dense(t, x, p + ".attention.key");
      const auto v = dense(t, x, p + ".attention.value");
      std::vector<ag::Var> heads;
      heads.reserve(static_cast<std::size_t>(cfg_.heads));
      for (int h = 0; h < cfg_.heads; ++h) {
        const auto qh = ag::slice_cols(q, h * dk, dk);
        const auto kh = ag::slice_cols(k, h * dk, dk);
        const auto vh = ag::slice_cols(v, h * dk, dk);
        const auto attn = ag::softmax_rows(ag::scale(ag::matmul_nt(qh, kh), inv_sqrt_dk));
        heads.push_back(ag::matmul(attn, vh));
      }
      const auto ctx = dense(t, ag::concat_cols(std::span<const ag::Var>(heads)), p + ".attention.output");
      x = norm(t, ag::add(x, ctx), p + ".attention.ln");
      const auto ff = dense(t, ag::gelu(dense(t, x, p + ".ffn.intermediate")), p + ".ffn.output");
      x = norm(t, ag::add(x, ff), p + ".ffn.ln");
    }
    return x;
  }

 private:
  ag::Var dense(ag::Tape& t, ag::Var x, const std::string& prefix) const {
    return ag::linear(x, t.param(store_->get(prefix + ".weight")), t.param(store_->get(prefix + ".bias")));
  }
  ag::Var norm(ag::Tape& t, ag::Var x, const std::string& prefix) const {
    return ag::layer_norm(x, t.param(store_->get(prefix + ".gamma")), t.param(store_->get(prefix + ".beta")),
                          cfg_.layer_norm_eps);
  }

  EncoderConfig cfg_;
  ag::ParameterStore* store_ = nullptr;
  ag::Parameter* word_ = nullptr;
  ag::Parameter* position_ = nullptr;
  ag::Parameter* token_type_ = nullptr;
};

/// Bidirectional LSTM over the sentence plus a convolution with
/// max-over-time pooling over the indicator. Names follow "nonbert.*".
class RecurrentConvolutionalEncoder {
 public:
  RecurrentConvolutionalEncoder(const EncoderConfig& cfg, int vocab_size, ag::ParameterStore& store, Random& rng)
      : cfg_(cfg), store_(&store) {
    const double r = cfg.init_range;
    const int e = cfg.embedding_dim;
    const int h = cfg.lstm_hidden;
    store.add("nonbert.embeddings", rng.uniform(vocab_size, e, r));
    for (const char* dir : {"forward", "backward"}) {
      const std::string p = std::string("nonbert.lstm.") + dir;
      store.add(p + ".input", rng.uniform(4 * h, e, r));
      store.add(p + ".recurrent", rng.uniform(4 * h, h, r));
      store.add(p + ".bias", ag::Matrix::Zero(1, 4 * h));
    }
    store.add("nonbert.conv.weight", rng.uniform(cfg.conv_filters, cfg.conv_window * e, r));
    store.add("nonbert.conv.bias", ag::Matrix::Zero(1, cfg.conv_filters));
  }

  ag::Var embed(ag::Tape& t, const std::vector<int>& ids) const {
    auto& table = store_->get("nonbert.embeddings");
    for (int v : ids)
      if (v < 0 || v >= table.value.rows()) throw std::out_of_range("token id " + std::to_string(v) + " outside vocabulary");
    return ag::gather_rows(t.param(table), ids);
  }

  /// Final forward and backward hidden states, concatenated (1 x 2h).
  ag::Var encode_sentence_recurrent(ag::Var embeddings) const {
    ag::Tape& t = *embeddings.tape;
    return ag::concat_cols({run_lstm(t, embeddings, "forward", false), run_lstm(t, embeddings, "backward", true)});
  }

  /// Convolution over windows of `conv_window` rows, tanh, max over time (1 x filters).
  /// Inputs shorter than the window are zero-padded at the end.
  ag::Var encode_indicator_convolutional(ag::Var embeddings) const {
    ag::Tape& t = *embeddings.tape;
    const int w = cfg_.conv_window;
    ag::Var x = embeddings;
    if (x.rows() < w) x = ag::concat_rows({x, t.constant(ag::Matrix::Zero(w - x.rows(), x.cols()))});
    const Eigen::Index positions = x.rows() - w + 1;
    std::vector<ag::Var> shifted;
    for (int s = 0; s < w; ++s) shifted.push_back(ag::slice_rows(x, s, positions));
    const auto windows = ag::concat_cols(std::span<const ag::Var>(shifted));
    const auto conv = ag::tanh(ag::linear(windows, t.param(store_->get("nonbert.conv.weight")),
                                          t.param(store_->get("nonbert.conv.bias"))));
    return ag::max_rows(conv);
  }

  int context_dim() const { return 2 * cfg_.lstm_hidden; }
  int feature_dim() const { return cfg_.conv_filters; }

 private:
  ag::Var run_lstm(ag::Tape& t, ag::Var x, const std::string& dir, bool reverse) const {
    const std::string p = "nonbert.lstm." + dir;
    const int h = cfg_.lstm_hidden;
    const auto projected = ag::linear(x, t.param(store_->get(p + ".input")), t.param(store_->get(p + ".bias")));
    const auto recurrent = t.param(store_->get(p + ".recurrent"));
    ag::Var state = t.constant(ag::Matrix::Zero(1, h));
    ag::Var cell = t.constant(ag::Matrix::Zero(1, h));
    const auto steps = x.rows();
    for (Eigen::Index s = 0; s < steps; ++s) {
      const Eigen::Index row = reverse ? steps - 1 - s : s;
      const auto z = ag::add(ag::slice_rows(projected, row, 1), ag::matmul_nt(state, recurrent));
      const auto in_gate = ag::sigmoid(ag::slice_cols(z, 0, h));
      const auto forget_gate = ag::sigmoid(ag::slice_cols(z, h, h));
      const auto candidate = ag::tanh(ag::slice_cols(z, 2 * h, h));
      const auto out_gate = ag::sigmoid(ag::slice_cols(z, 3 * h, h));
      cell = ag::add(ag::mul(forget_gate, cell), ag::mul(in_gate, candidate));
      state = ag::mul(out_gate, ag::tanh(cell));
    }
    return state;
  }

  EncoderConfig cfg_;
  ag::ParameterStore* store_;
};

/// Concatenation of the recurrent context and the convolutional feature.
inline ag::Var fuse_nonbert(ag::Var context, ag::Var feature) { return ag::concat_cols({context, feature}); }

}  // namespace relex
