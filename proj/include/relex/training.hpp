#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "relex/checkpoint.hpp"
#include "relex/evaluation.hpp"
#include "relex/loss.hpp"
#include "relex/model.hpp"
#include "relex/optimizer.hpp"
#include "relex/random.hpp"
#include "relex/sequencing.hpp"

namespace relex {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Optimization recipe; defaults are the fine-tuning settings for the pretrained encoder.
struct TrainConfig {
  int max_len = 128;
  int batch_size = 16;
  double learning_rate = 2e-5;
  double epochs = 5.0;
  double dropout = 0.1;
  double lambda = 5e-3;
  double beta = 5.0;
  std::uint64_t seed = 0;
  double dev_fraction = 0.1;
  int warmup_steps = 0;  // linear warmup; 0 keeps the rate constant
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool track_train_accuracy = true;

  void validate() const {
    if (max_len <= 0 || batch_size <= 0) throw std::invalid_argument("max_len and batch_size must be positive");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (!(epochs >= 0.0) || std::floor(epochs) != epochs)
      throw std::invalid_argument("epochs must be a non-negative whole number of passes");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must be in [0,1)");
    if (!(lambda >= 0.0) || !(beta >= 0.0)) throw std::invalid_argument("lambda and beta must be non-negative");
    if (!(dev_fraction >= 0.0 && dev_fraction < 1.0)) throw std::invalid_argument("dev_fraction must be in [0,1)");
    if (warmup_steps < 0) throw std::invalid_argument("warmup_steps must be non-negative");
  }

  [[nodiscard]] LossConfig loss() const {
    LossConfig l;
    l.beta = beta;
    l.lambda = lambda;
    return l;
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"max_len", c.max_len},
                     {"batch_size", c.batch_size},
                     {"learning_rate", c.learning_rate},
                     {"epochs", c.epochs},
                     {"dropout", c.dropout},
                     {"lambda", c.lambda},
                     {"beta", c.beta},
                     {"seed", c.seed},
                     {"dev_fraction", c.dev_fraction},
                     {"warmup_steps", c.warmup_steps},
                     {"adam_beta1", c.adam_beta1},
                     {"adam_beta2", c.adam_beta2},
                     {"adam_eps", c.adam_eps},
                     {"track_train_accuracy", c.track_train_accuracy}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  const TrainConfig d;
  c.max_len = j.value("max_len", d.max_len);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.epochs = j.value("epochs", d.epochs);
  c.dropout = j.value("dropout", d.dropout);
  c.lambda = j.value("lambda", d.lambda);
  c.beta = j.value("beta", d.beta);
  c.seed = j.value("seed", d.seed);
  c.dev_fraction = j.value("dev_fraction", d.dev_fraction);
  c.warmup_steps = j.value("warmup_steps", d.warmup_steps);
  c.adam_beta1 = j.value("adam_beta1", d.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", d.adam_beta2);
  c.adam_eps = j.value("adam_eps", d.adam_eps);
  c.track_train_accuracy = j.value("track_train_accuracy", d.track_train_accuracy);
}

/// Reseeds every stochastic component driven by `rng`.
inline void set_seed(Random& rng, std::uint64_t seed) { rng.set_seed(seed); }

/// Deterministic model construction from a seed.
inline RelationModel make_model(const ModelConfig& cfg, int vocab_size, std::uint64_t seed) {
  Random rng(seed);
  return RelationModel(cfg, vocab_size, rng);
}

struct DatasetSplit {
  std::vector<AggregateSequence> train;
  std::vector<AggregateSequence> dev;
};

/// Seeded hold-out of `fraction` of the instances; both parts keep corpus order.
inline DatasetSplit split_dev(const std::vector<AggregateSequence>& data, double fraction, std::uint64_t seed) {
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Random rng(seed);
  rng.shuffle(idx);
  const auto n_dev = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(data.size())));
  std::vector<bool> is_dev(data.size(), false);
  for (std::size_t i = 0; i < n_dev; ++i) is_dev[idx[i]] = true;
  DatasetSplit out;
  for (std::size_t i = 0; i < data.size(); ++i) (is_dev[i] ? out.dev : out.train).push_back(data[i]);
  return out;
}

struct EpochMetrics {
  int epoch = 0;
  double loss = 0.0;            // mean batch loss
  double train_accuracy = 0.0;  // evaluation mode, percent
  std::optional<double> dev_macro_f1;
};

inline nlohmann::json to_json(const EpochMetrics& m) {
  nlohmann::json j{{"epoch", m.epoch}, {"loss", m.loss}, {"train_accuracy", m.train_accuracy}};
  j["dev_macro_f1"] = m.dev_macro_f1 ? nlohmann::json(*m.dev_macro_f1) : nlohmann::json(nullptr);
  return j;
}

struct TrainResult {
  std::vector<EpochMetrics> epochs;
  long steps = 0;
  int best_epoch = 0;  // 0 = initialization
  double best_dev_macro_f1 = -1.0;
  std::vector<ag::Matrix> best_parameters;
};

/// Where train() writes artifacts; empty directory disables writing.
struct TrainOutputs {
  std::string output_dir;
  std::uint64_t vocab_hash = 0;
};

struct BatchResult {
  double loss = 0.0;
  int correct = 0;
};

/// Forward/backward over one batch; gradients are left in the parameter store.
/// The negative class of each instance is chosen from its current distribution.
inline BatchResult accumulate_batch_gradients(const RelationModel& model, std::span<const AggregateSequence> batch,
                                              const LossConfig& loss_cfg, Random* dropout_rng, double dropout) {
  BatchResult out;
  for (const auto& seq : batch) {
    ag::Tape tape;
    const auto probs = model.forward(tape, seq, dropout_rng, dropout);
    const Eigen::RowVectorXd p = probs.value().row(0);
    const int negative = select_negative_class(p, seq.label, loss_cfg.other_class_id);
    const auto loss = instance_loss(probs, seq.label, negative, loss_cfg);
    out.loss += loss.scalar();
    Eigen::Index best = 0;
    p.maxCoeff(&best);
    out.correct += static_cast<int>(best) == seq.label ? 1 : 0;
    tape.backward(loss);
  }
  if (loss_cfg.lambda > 0.0) {
    ag::Tape tape;
    const auto penalty = l2_penalty(tape, model.parameters(), loss_cfg.lambda);
    out.loss += penalty.scalar();
    tape.backward(penalty);
  }
  return out;
}

/// Total loss of a batch in evaluation mode (no dropout), including the L2 term.
inline double batch_loss(const RelationModel& model, std::span<const AggregateSequence> batch,
                         const LossConfig& loss_cfg) {
  std::vector<Eigen::RowVectorXd> probs;
  std::vector<int> gold, neg;
  for (const auto& seq : batch) {
    probs.push_back(model.predict_proba(seq));
    gold.push_back(seq.label);
    neg.push_back(select_negative_class(probs.back(), seq.label, loss_cfg.other_class_id));
  }
  return compute_loss(probs, gold, neg, model.parameters().regularized_norm_sq(), loss_cfg);
}

inline std::vector<int> predict_all(const RelationModel& model, std::span<const AggregateSequence> data) {
  std::vector<int> out;
  out.reserve(data.size());
  for (const auto& seq : data) out.push_back(model.predict(seq));
  return out;
}

inline double accuracy(const RelationModel& model, std::span<const AggregateSequence> data) {
  if (data.empty()) return 0.0;
  int correct = 0;
  for (const auto& seq : data) correct += model.predict(seq) == seq.label ? 1 : 0;
  return 100.0 * correct / static_cast<double>(data.size());
}

inline double macro_f1(const RelationModel& model, std::span<const AggregateSequence> data) {
  std::vector<int> gold;
  for (const auto& seq : data) gold.push_back(seq.label);
  return score_official(gold, predict_all(model, data)).macro_f1;
}

/// Mini-batch Adam training. Writes metrics.jsonl and the final and best
/// checkpoints when an output directory is given. `on_epoch` may return false
/// to stop after the current epoch.
inline TrainResult train(RelationModel& model, const std::vector<AggregateSequence>& train_set,
                         const std::vector<AggregateSequence>& dev_set, const TrainConfig& cfg,
                         const TrainOutputs& outputs = {},
                         const std::function<bool(const EpochMetrics&)>& on_epoch = {}) {
  cfg.validate();
  Random rng(cfg.seed);
  Adam adam(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  const LossConfig loss_cfg = cfg.loss();
  TrainResult result;
  result.best_parameters = model.snapshot();

  std::ofstream metrics_log;
  const bool write = !outputs.output_dir.empty();
  if (write) {
    std::filesystem::create_directories(outputs.output_dir);
    metrics_log.open(outputs.output_dir + "/metrics.jsonl");
    if (!metrics_log) throw TrainingError("cannot write metrics log in '" + outputs.output_dir + "'");
  }
  auto checkpoint = [&](const std::string& name) {
    save_checkpoint(outputs.output_dir + "/" + name, model, {outputs.vocab_hash, result.steps, cfg.seed});
  };

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const int epochs = static_cast<int>(cfg.epochs);
  std::vector<AggregateSequence> batch;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size)); ++i)
        batch.push_back(train_set[order[i]]);
      model.parameters().zero_grad();
      const auto br = accumulate_batch_gradients(model, batch, loss_cfg, &rng, cfg.dropout);
      if (!std::isfinite(br.loss)) {
        std::string ids;
        for (const auto& s : batch) ids += (ids.empty() ? "" : ",") + std::to_string(s.id);
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batches) + " (instances " + ids + ")");
      }
      double lr = cfg.learning_rate;
      if (cfg.warmup_steps > 0 && result.steps < cfg.warmup_steps)
        lr *= static_cast<double>(result.steps + 1) / static_cast<double>(cfg.warmup_steps);
      adam.step(model.parameters(), lr);
      ++result.steps;
      loss_sum += br.loss;
      ++batches;
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.loss = batches > 0 ? loss_sum / batches : 0.0;
    if (cfg.track_train_accuracy) m.train_accuracy = accuracy(model, train_set);
    if (!dev_set.empty()) {
      m.dev_macro_f1 = macro_f1(model, dev_set);
      if (*m.dev_macro_f1 > result.best_dev_macro_f1) {
        result.best_dev_macro_f1 = *m.dev_macro_f1;
        result.best_epoch = epoch;
        result.best_parameters = model.snapshot();
        if (write) checkpoint("checkpoint_best.bin");
      }
    }
    result.epochs.push_back(m);
    if (write) metrics_log << to_json(m).dump() << '\n' << std::flush;
    if (on_epoch && !on_epoch(m)) break;
  }
  if (write) {
    checkpoint("checkpoint_final.bin");
    if (dev_set.empty() || result.best_epoch == 0) checkpoint("checkpoint_best.bin");
  }
  return result;
}

/// Trains on `split.train`, selecting on `split.dev`; the model ends with the
/// best-dev parameters (the final ones when there is no dev set).
inline TrainResult train_model_best(RelationModel& model, const DatasetSplit& split, const TrainConfig& cfg,
                                    const TrainOutputs& outputs = {}) {
  TrainResult r = train(model, split.train, split.dev, cfg, outputs);
  if (!split.dev.empty() && r.best_epoch > 0) model.restore(r.best_parameters);
  return r;
}

}  // namespace relex
