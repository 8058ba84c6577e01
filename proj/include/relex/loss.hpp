#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

#include "relex/autograd.hpp"
#include "relex/label.hpp"

namespace relex {

struct LossConfig {
  double beta = 5.0;
  double lambda = 5e-3;
  int other_class_id = kOtherLabelId;
  double clamp_eps = 1e-12;  // probabilities are clamped to [eps, 1-eps] inside logs
};

/// Highest-probability label that is neither the gold label nor Other;
/// ties go to the smallest id.
inline int select_negative_class(std::span<const double> probs, int gold, int other_id = kOtherLabelId) {
  int best = -1;
  for (int y = 0; y < static_cast<int>(probs.size()); ++y) {
    if (y == gold || y == other_id) continue;
    if (best < 0 || probs[y] > probs[best]) best = y;
  }
  if (best < 0) throw std::invalid_argument("no negative class candidate");
  return best;
}

inline int select_negative_class(const Eigen::RowVectorXd& probs, int gold, int other_id = kOtherLabelId) {
  return select_negative_class(std::span<const double>(probs.data(), static_cast<std::size_t>(probs.size())), gold,
                               other_id);
}

/// Batch loss from probabilities already computed:
///   -sum log p(y+) - beta * sum log(1 - p(y-)) + lambda * theta_norm_sq
/// Gold-Other instances contribute only the negative term.
inline double compute_loss(std::span<const Eigen::RowVectorXd> probs, std::span<const int> gold,
                           std::span<const int> negatives, double theta_norm_sq, const LossConfig& cfg) {
  if (probs.size() != gold.size() || gold.size() != negatives.size())
    throw std::invalid_argument("compute_loss: batch size mismatch");
  const double lo = cfg.clamp_eps;
  const double hi = 1.0 - cfg.clamp_eps;
  double loss = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (gold[i] != cfg.other_class_id) loss -= std::log(std::clamp(probs[i](gold[i]), lo, hi));
    loss -= cfg.beta * std::log(1.0 - std::clamp(probs[i](negatives[i]), lo, hi));
  }
  return loss + cfg.lambda * theta_norm_sq;
}

/// Per-instance ranking terms on the tape (no L2 term).
inline ag::Var instance_loss(ag::Var probs, int gold, int negative, const LossConfig& cfg) {
  const double lo = cfg.clamp_eps;
  const double hi = 1.0 - cfg.clamp_eps;
  const auto neg_term = ag::scale(ag::log(ag::one_minus(ag::clamp(ag::pick(probs, 0, negative), lo, hi))), -cfg.beta);
  if (gold == cfg.other_class_id) return neg_term;
  const auto pos_term = ag::scale(ag::log(ag::clamp(ag::pick(probs, 0, gold), lo, hi)), -1.0);
  return ag::add(pos_term, neg_term);
}

/// lambda * sum of squared regularized parameters.
inline ag::Var l2_penalty(ag::Tape& tape, const ag::ParameterStore& store, double lambda) {
  ag::Var total = tape.constant(ag::Matrix::Zero(1, 1));
  for (const auto& p : store)
    if (p->regularized) total = ag::add(total, ag::sum_squares(tape.param(*p)));
  return ag::scale(total, lambda);
}

}  // namespace relex
