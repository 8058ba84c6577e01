#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "relex/autograd.hpp"

namespace relex::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "name[index]"
  std::size_t checked = 0;
};

/// Compares tape gradients against central differences for every entry of
/// `params`. The relative error is |a - n| / max(|a| + |n|, floor).
inline GradCheckResult gradient_check(const std::function<ag::Var(ag::Tape&)>& objective,
                                      const std::vector<ag::Parameter*>& params, double step = 1e-4,
                                      double floor = 1e-8) {
  for (auto* p : params) p->grad.setZero();
  {
    ag::Tape t;
    t.backward(objective(t));
  }
  auto eval = [&] {
    ag::Tape t(false);
    return objective(t).scalar();
  };
  GradCheckResult res;
  for (auto* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double orig = p->value.data()[i];
      p->value.data()[i] = orig + step;
      const double up = eval();
      p->value.data()[i] = orig - step;
      const double down = eval();
      p->value.data()[i] = orig;
      const double numeric = (up - down) / (2 * step);
      const double analytic = p->grad.data()[i];
      const double rel = std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), floor);
      ++res.checked;
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst = p->name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return res;
}

}  // namespace relex::testing
