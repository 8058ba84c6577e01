#pragma once

#include <cmath>
#include <vector>

#include "relex/autograd.hpp"

namespace relex {

/// Adam with bias correction. Moments are allocated lazily per parameter in
/// store order.
class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ag::ParameterStore& store, double learning_rate) {
    if (m_.empty()) {
      for (const auto& p : store) {
        m_.push_back(ag::Matrix::Zero(p->value.rows(), p->value.cols()));
        v_.push_back(ag::Matrix::Zero(p->value.rows(), p->value.cols()));
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    std::size_t i = 0;
    for (const auto& p : store) {
      auto& m = m_[i];
      auto& v = v_[i];
      ++i;
      m = beta1_ * m + (1.0 - beta1_) * p->grad;
      v = beta2_ * v + (1.0 - beta2_) * p->grad.cwiseProduct(p->grad);
      p->value.array() -= learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
    }
  }

  void step(ag::ParameterStore& store) { step(store, lr_); }

  [[nodiscard]] long steps() const { return t_; }
  [[nodiscard]] double learning_rate() const { return lr_; }

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  long t_ = 0;
  std::vector<ag::Matrix> m_;
  std::vector<ag::Matrix> v_;
};

}  // namespace relex
