#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "relex/autograd.hpp"
#include "relex/corpus.hpp"
#include "relex/label.hpp"
#include "relex/random.hpp"

namespace relex {

/// Task-specific weights on top of the encoder. The two entity heads read the
/// same We/be storage.
struct HeadParameters {
  ag::Parameter* w0 = nullptr;  // aggregate ([CLS]) head
  ag::Parameter* b0 = nullptr;
  ag::Parameter* we = nullptr;  // shared entity head
  ag::Parameter* be = nullptr;
  ag::Parameter* wz = nullptr;  // indicator head
  ag::Parameter* bz = nullptr;
  ag::Parameter* w1 = nullptr;  // fusion layers
  ag::Parameter* b1 = nullptr;
  ag::Parameter* w2 = nullptr;
  ag::Parameter* b2 = nullptr;
  ag::Parameter* ws = nullptr;  // softmax classifier, |Y| x d_h
  ag::Parameter* bs = nullptr;

  [[nodiscard]] std::vector<ag::Parameter*> all() const { return {w0, b0, we, be, wz, bz, w1, b1, w2, b2, ws, bs}; }
};

/// Registers head parameters under "head.*". `fused_parts` is 4 with the
/// indicator head and 3 without it. Only weight matrices are regularized.
inline HeadParameters make_head_parameters(ag::ParameterStore& store, int hidden_dim, int fused_parts,
                                           int num_labels, double init_range, Random& rng) {
  const int d = hidden_dim;
  HeadParameters hp;
  auto weight = [&](const std::string& name, int rows, int cols) {
    return &store.add(name, rng.uniform(rows, cols, init_range), true);
  };
  auto bias = [&](const std::string& name, int cols) { return &store.add(name, ag::Matrix::Zero(1, cols), false); };
  hp.w0 = weight("head.w0", d, d);
  hp.b0 = bias("head.b0", d);
  hp.we = weight("head.we", d, d);
  hp.be = bias("head.be", d);
  if (fused_parts == 4) {
    hp.wz = weight("head.wz", d, d);
    hp.bz = bias("head.bz", d);
  }
  hp.w1 = weight("head.w1", d, fused_parts * d);
  hp.b1 = bias("head.b1", d);
  hp.w2 = weight("head.w2", d, d);
  hp.b2 = bias("head.b2", d);
  hp.ws = weight("head.ws", num_labels, d);
  hp.bs = bias("head.bs", num_labels);
  return hp;
}

inline HeadParameters find_head_parameters(const ag::ParameterStore& store) {
  HeadParameters hp;
  hp.w0 = store.find("head.w0");
  hp.b0 = store.find("head.b0");
  hp.we = store.find("head.we");
  hp.be = store.find("head.be");
  hp.wz = store.find("head.wz");
  hp.bz = store.find("head.bz");
  hp.w1 = store.find("head.w1");
  hp.b1 = store.find("head.b1");
  hp.w2 = store.find("head.w2");
  hp.b2 = store.find("head.b2");
  hp.ws = store.find("head.ws");
  hp.bs = store.find("head.bs");
  return hp;
}

/// H0' = W0 tanh(H0) + b0
inline ag::Var aggregate_head(ag::Var h0, const HeadParameters& hp) {
  ag::Tape& t = *h0.tape;
  return ag::linear(ag::tanh(h0), t.param(*hp.w0), t.param(*hp.b0));
}

/// We tanh(mean of rows) + be
inline ag::Var entity_head(ag::Var hidden, TokenSpan rows, const HeadParameters& hp) {
  if (rows.size() <= 0) throw std::invalid_argument("entity head over an empty span");
  ag::Tape& t = *hidden.tape;
  const auto avg = ag::mean_rows(ag::slice_rows(hidden, rows.begin, rows.size()));
  return ag::linear(ag::tanh(avg), t.param(*hp.we), t.param(*hp.be));
}

/// z = Wz tanh(mean of indicator rows) + bz
inline ag::Var indicator_head(ag::Var hidden, const std::vector<int>& rows, const HeadParameters& hp) {
  if (rows.empty()) throw std::invalid_argument("indicator head over an empty span");
  ag::Tape& t = *hidden.tape;
  const auto avg = ag::mean_rows(ag::gather_rows(hidden, rows));
  return ag::linear(ag::tanh(avg), t.param(*hp.wz), t.param(*hp.bz));
}

/// r = W2 (W1 concat(parts) + b1) + b2; two affine maps, no nonlinearity between.
inline ag::Var fuse(std::span<const ag::Var> parts, const HeadParameters& hp) {
  ag::Tape& t = *parts.front().tape;
  const auto joined = ag::concat_cols(parts);
  const auto inner = ag::linear(joined, t.param(*hp.w1), t.param(*hp.b1));
  return ag::linear(inner, t.param(*hp.w2), t.param(*hp.b2));
}

/// softmax(W* r + b*), with inverted dropout on r when `dropout_mask` is given.
inline ag::Var classify(ag::Var r, ag::Parameter& ws, ag::Parameter& bs, const ag::Matrix* dropout_mask = nullptr) {
  ag::Tape& t = *r.tape;
  if (dropout_mask) r = ag::mask_mul(r, *dropout_mask);
  return ag::softmax_rows(ag::linear(r, t.param(ws), t.param(bs)));
}

}  // namespace relex
