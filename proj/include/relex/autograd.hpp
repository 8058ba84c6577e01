#pragma once

// Minimal reverse-mode differentiation over dense row-major-by-convention
// matrices. Vectors are 1 x n rows; a sequence of vectors is an L x n matrix;
// weights are out x in and applied as x * W^T + b.

#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace relex::ag {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool regularized = false;  // enters the L2 penalty
};

/// Named parameters with stable addresses, iterated in insertion order.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Matrix init, bool regularized = false) {
    if (by_name_.contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
    auto p = std::make_unique<Parameter>();
    p->name = name;
    p->grad = Matrix::Zero(init.rows(), init.cols());
    p->value = std::move(init);
    p->regularized = regularized;
    by_name_[name] = p.get();
    params_.push_back(std::move(p));
    return *params_.back();
  }

  [[nodiscard]] Parameter* find(const std::string& name) const {
    const auto it = by_name_.find(name);
    return it == by_name_.end() ? nullptr : it->second;
  }

  Parameter& get(const std::string& name) const {
    if (auto* p = find(name)) return *p;
    throw std::out_of_range("no parameter named '" + name + "'");
  }

  void zero_grad() {
    for (auto& p : params_) p->grad.setZero();
  }

  /// Sum of squares of the regularized parameters.
  [[nodiscard]] double regularized_norm_sq() const {
    double s = 0.0;
    for (const auto& p : params_)
      if (p->regularized) s += p->value.squaredNorm();
    return s;
  }

  [[nodiscard]] std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
    return n;
  }

  [[nodiscard]] std::size_t size() const { return params_.size(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, Parameter*> by_name_;
};

class Tape;

/// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  [[nodiscard]] const Matrix& value() const;
  [[nodiscard]] Eigen::Index rows() const { return value().rows(); }
  [[nodiscard]] Eigen::Index cols() const { return value().cols(); }
  [[nodiscard]] double scalar() const { return value()(0, 0); }
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  /// With `record_gradients` false nothing on the tape requires a gradient.
  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}

  Var constant(Matrix m) { return push(std::move(m), nullptr, {}, false); }

  Var param(Parameter& p) {
    Node& node = nodes_.emplace_back();
    node.ref = &p.value;
    node.param = &p;
    node.requires_grad = record_;
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  /// Adds a computed node. `backward` receives the node id; it is skipped
  /// when no input requires a gradient.
  Var push(Matrix value, Backward backward, std::initializer_list<Var> inputs, bool any_input_grad = true) {
    bool needs = false;
    if (any_input_grad)
      for (const Var& v : inputs) needs = needs || nodes_[v.id].requires_grad;
    Node& node = nodes_.emplace_back();
    node.value = std::move(value);
    node.requires_grad = needs;
    if (needs) node.backward = std::move(backward);
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  Var push_many(Matrix value, Backward backward, std::span<const Var> inputs) {
    bool needs = false;
    for (const Var& v : inputs) needs = needs || nodes_[v.id].requires_grad;
    Node& node = nodes_.emplace_back();
    node.value = std::move(value);
    node.requires_grad = needs;
    if (needs) node.backward = std::move(backward);
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  [[nodiscard]] const Matrix& value(int id) const {
    const Node& n = nodes_[id];
    return n.ref ? *n.ref : n.value;
  }

  [[nodiscard]] bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  /// Gradient accumulator of a node, allocated on first use.
  Matrix& grad(int id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Matrix::Zero(value(id).rows(), value(id).cols());
    return n.grad;
  }

  [[nodiscard]] bool has_grad(int id) const { return nodes_[id].grad.size() != 0; }

  /// Back-propagates from a 1 x 1 node; parameter gradients accumulate into Parameter::grad.
  void backward(Var root, double seed = 1.0) {
    if (value(root.id).size() != 1) throw std::logic_error("backward() needs a scalar root");
    if (!nodes_[root.id].requires_grad) return;
    grad(root.id)(0, 0) += seed;
    for (int id = root.id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (!n.requires_grad || n.grad.size() == 0) continue;
      if (n.param) {
        n.param->grad += n.grad;
      } else if (n.backward) {
        n.backward(*this, id);
      }
    }
  }

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    const Matrix* ref = nullptr;
    Parameter* param = nullptr;
    Backward backward;
    Matrix grad;
    bool requires_grad = false;
  };
  std::deque<Node> nodes_;
  bool record_ = true;
};

inline const Matrix& Var::value() const { return tape->value(id); }

namespace detail {
inline void accumulate(Tape& t, const Var& v, const Matrix& g) {
  if (t.requires_grad(v.id)) t.grad(v.id) += g;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra

inline Var matmul(Var a, Var b) {
  Tape& t = *a.tape;
  return t.push(a.value() * b.value(),
                [a, b](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  if (t.requires_grad(a.id)) t.grad(a.id).noalias() += g * b.value().transpose();
                  if (t.requires_grad(b.id)) t.grad(b.id).noalias() += a.value().transpose() * g;
                },
                {a, b});
}

/// x * W^T + b, with b a 1 x out row broadcast over the rows of x.
inline Var linear(Var x, Var w, Var b) {
  Tape& t = *x.tape;
  Matrix y = x.value() * w.value().transpose();
  y.rowwise() += b.value().row(0);
  return t.push(std::move(y),
                [x, w, b](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  if (t.requires_grad(x.id)) t.grad(x.id).noalias() += g * w.value();
                  if (t.requires_grad(w.id)) t.grad(w.id).noalias() += g.transpose() * x.value();
                  if (t.requires_grad(b.id)) t.grad(b.id) += g.colwise().sum();
                },
                {x, w, b});
}

/// x * W^T without bias.
inline Var linear_nobias(Var x, Var w) {
  Tape& t = *x.tape;
  return t.push(x.value() * w.value().transpose(),
                [x, w](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  if (t.requires_grad(x.id)) t.grad(x.id).noalias() += g * w.value();
                  if (t.requires_grad(w.id)) t.grad(w.id).noalias() += g.transpose() * x.value();
                },
                {x, w});
}

/// a * b^T
inline Var matmul_nt(Var a, Var b) { return linear_nobias(a, b); }

inline Var transpose(Var a) {
  Tape& t = *a.tape;
  return t.push(a.value().transpose(),
                [a](Tape& t, int self) { t.grad(a.id) += t.grad(self).transpose(); }, {a});
}

// ---------------------------------------------------------------------------
// Elementwise

inline Var add(Var a, Var b) {
  Tape& t = *a.tape;
  return t.push(a.value() + b.value(),
                [a, b](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  detail::accumulate(t, a, g);
                  detail::accumulate(t, b, g);
                },
                {a, b});
}

inline Var sub(Var a, Var b) {
  Tape& t = *a.tape;
  return t.push(a.value() - b.value(),
                [a, b](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  detail::accumulate(t, a, g);
                  if (t.requires_grad(b.id)) t.grad(b.id) -= g;
                },
                {a, b});
}

inline Var mul(Var a, Var b) {
  Tape& t = *a.tape;
  return t.push(a.value().cwiseProduct(b.value()),
                [a, b](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  if (t.requires_grad(a.id)) t.grad(a.id) += g.cwiseProduct(b.value());
                  if (t.requires_grad(b.id)) t.grad(b.id) += g.cwiseProduct(a.value());
                },
                {a, b});
}

inline Var scale(Var a, double s) {
  Tape& t = *a.tape;
  return t.push(a.value() * s, [a, s](Tape& t, int self) { t.grad(a.id) += t.grad(self) * s; }, {a});
}

/// 1 - a
inline Var one_minus(Var a) {
  Tape& t = *a.tape;
  return t.push((1.0 - a.value().array()).matrix(), [a](Tape& t, int self) { t.grad(a.id) -= t.grad(self); }, {a});
}

inline Var tanh(Var a) {
  Tape& t = *a.tape;
  Matrix y = a.value().array().tanh().matrix();
  return t.push(std::move(y),
                [a](Tape& t, int self) {
                  const Matrix& y = t.value(self);
                  t.grad(a.id).array() += t.grad(self).array() * (1.0 - y.array().square());
                },
                {a});
}

inline Var sigmoid(Var a) {
  Tape& t = *a.tape;
  Matrix y = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return t.push(std::move(y),
                [a](Tape& t, int self) {
                  const Matrix& y = t.value(self);
                  t.grad(a.id).array() += t.grad(self).array() * y.array() * (1.0 - y.array());
                },
                {a});
}

inline Var relu(Var a) {
  Tape& t = *a.tape;
  return t.push(a.value().cwiseMax(0.0),
                [a](Tape& t, int self) {
                  t.grad(a.id).array() += (a.value().array() > 0.0).select(t.grad(self).array(), 0.0);
                },
                {a});
}

/// Exact (erf) GELU.
inline Var gelu(Var a) {
  Tape& t = *a.tape;
  const Matrix& x = a.value();
  Matrix y = x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2)); });
  return t.push(std::move(y),
                [a](Tape& t, int self) {
                  const Matrix& x = a.value();
                  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
                  Matrix d = x.unaryExpr([inv_sqrt_2pi](double v) {
                    return 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2)) + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
                  });
                  t.grad(a.id) += t.grad(self).cwiseProduct(d);
                },
                {a});
}

/// Clamps into [lo, hi]; the gradient is zero where clamping is active.
inline Var clamp(Var a, double lo, double hi) {
  Tape& t = *a.tape;
  return t.push(a.value().cwiseMax(lo).cwiseMin(hi),
                [a, lo, hi](Tape& t, int self) {
                  const auto x = a.value().array();
                  t.grad(a.id).array() += ((x >= lo) && (x <= hi)).select(t.grad(self).array(), 0.0);
                },
                {a});
}

inline Var log(Var a) {
  Tape& t = *a.tape;
  return t.push(a.value().array().log().matrix(),
                [a](Tape& t, int self) { t.grad(a.id).array() += t.grad(self).array() / a.value().array(); }, {a});
}

/// Elementwise product with a constant mask (used for dropout).
inline Var mask_mul(Var a, Matrix mask) {
  Tape& t = *a.tape;
  Matrix y = a.value().cwiseProduct(mask);
  return t.push(std::move(y),
                [a, mask = std::move(mask)](Tape& t, int self) { t.grad(a.id) += t.grad(self).cwiseProduct(mask); },
                {a});
}

// ---------------------------------------------------------------------------
// Reductions and reshaping

inline Var sum(Var a) {
  Tape& t = *a.tape;
  Matrix y(1, 1);
  y(0, 0) = a.value().sum();
  return t.push(std::move(y), [a](Tape& t, int self) { t.grad(a.id).array() += t.grad(self)(0, 0); }, {a});
}

inline Var sum_squares(Var a) {
  Tape& t = *a.tape;
  Matrix y(1, 1);
  y(0, 0) = a.value().squaredNorm();
  return t.push(std::move(y), [a](Tape& t, int self) { t.grad(a.id) += 2.0 * t.grad(self)(0, 0) * a.value(); },
                {a});
}

/// Column-wise mean over all rows: L x n -> 1 x n.
inline Var mean_rows(Var a) {
  Tape& t = *a.tape;
  if (a.rows() == 0) throw std::invalid_argument("mean over an empty row set");
  const double inv = 1.0 / static_cast<double>(a.rows());
  return t.push(a.value().colwise().mean(),
                [a, inv](Tape& t, int self) { t.grad(a.id).rowwise() += t.grad(self).row(0) * inv; }, {a});
}

/// Column-wise max over rows (max-over-time pooling).
inline Var max_rows(Var a) {
  Tape& t = *a.tape;
  const Matrix& x = a.value();
  Matrix y(1, x.cols());
  std::vector<Eigen::Index> arg(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index c = 0; c < x.cols(); ++c) y(0, c) = x.col(c).maxCoeff(&arg[static_cast<std::size_t>(c)]);
  return t.push(std::move(y),
                [a, arg = std::move(arg)](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  Matrix& ga = t.grad(a.id);
                  for (Eigen::Index c = 0; c < g.cols(); ++c) ga(arg[static_cast<std::size_t>(c)], c) += g(0, c);
                },
                {a});
}

inline Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count) {
  Tape& t = *a.tape;
  if (begin < 0 || count < 0 || begin + count > a.rows()) throw std::out_of_range("slice_rows out of range");
  return t.push(a.value().middleRows(begin, count),
                [a, begin, count](Tape& t, int self) { t.grad(a.id).middleRows(begin, count) += t.grad(self); }, {a});
}

inline Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count) {
  Tape& t = *a.tape;
  if (begin < 0 || count < 0 || begin + count > a.cols()) throw std::out_of_range("slice_cols out of range");
  return t.push(a.value().middleCols(begin, count),
                [a, begin, count](Tape& t, int self) { t.grad(a.id).middleCols(begin, count) += t.grad(self); }, {a});
}

/// Rows of `a` selected by index (repeats allowed); backward scatter-adds.
inline Var gather_rows(Var a, std::vector<int> rows) {
  Tape& t = *a.tape;
  const Matrix& x = a.value();
  Matrix y(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= x.rows()) throw std::out_of_range("gather_rows index out of range");
    y.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  }
  return t.push(std::move(y),
                [a, rows = std::move(rows)](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  Matrix& ga = t.grad(a.id);
                  for (std::size_t i = 0; i < rows.size(); ++i) ga.row(rows[i]) += g.row(static_cast<Eigen::Index>(i));
                },
                {a});
}

inline Var concat_cols(std::span<const Var> parts) {
  Tape& t = *parts.front().tape;
  Eigen::Index rows = parts.front().rows(), cols = 0;
  for (const Var& v : parts) {
    if (v.rows() != rows) throw std::invalid_argument("concat_cols row mismatch");
    cols += v.cols();
  }
  Matrix y(rows, cols);
  Eigen::Index c = 0;
  for (const Var& v : parts) y.middleCols(c, v.cols()) = v.value(), c += v.cols();
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.push_many(std::move(y),
                     [inputs](Tape& t, int self) {
                       const Matrix& g = t.grad(self);
                       Eigen::Index c = 0;
                       for (const Var& v : inputs) {
                         if (t.requires_grad(v.id)) t.grad(v.id) += g.middleCols(c, v.cols());
                         c += v.cols();
                       }
                     },
                     parts);
}

inline Var concat_rows(std::span<const Var> parts) {
  Tape& t = *parts.front().tape;
  Eigen::Index cols = parts.front().cols(), rows = 0;
  for (const Var& v : parts) {
    if (v.cols() != cols) throw std::invalid_argument("concat_rows column mismatch");
    rows += v.rows();
  }
  Matrix y(rows, cols);
  Eigen::Index r = 0;
  for (const Var& v : parts) y.middleRows(r, v.rows()) = v.value(), r += v.rows();
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.push_many(std::move(y),
                     [inputs](Tape& t, int self) {
                       const Matrix& g = t.grad(self);
                       Eigen::Index r = 0;
                       for (const Var& v : inputs) {
                         if (t.requires_grad(v.id)) t.grad(v.id) += g.middleRows(r, v.rows());
                         r += v.rows();
                       }
                     },
                     parts);
}

inline Var concat_cols(std::initializer_list<Var> parts) { return concat_cols(std::span<const Var>(parts.begin(), parts.size())); }
inline Var concat_rows(std::initializer_list<Var> parts) { return concat_rows(std::span<const Var>(parts.begin(), parts.size())); }

inline Var pick(Var a, Eigen::Index row, Eigen::Index col) {
  Tape& t = *a.tape;
  Matrix y(1, 1);
  y(0, 0) = a.value()(row, col);
  return t.push(std::move(y), [a, row, col](Tape& t, int self) { t.grad(a.id)(row, col) += t.grad(self)(0, 0); },
                {a});
}

// ---------------------------------------------------------------------------
// Normalization

/// Row-wise softmax with max subtraction.
inline Matrix softmax_rows_value(const Matrix& x) {
  Matrix y = x;
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    y.row(r).array() -= y.row(r).maxCoeff();
    y.row(r) = y.row(r).array().exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  return y;
}

inline Var softmax_rows(Var a) {
  Tape& t = *a.tape;
  return t.push(softmax_rows_value(a.value()),
                [a](Tape& t, int self) {
                  const Matrix& y = t.value(self);
                  const Matrix& g = t.grad(self);
                  const Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
                  Matrix ga = y.cwiseProduct(g);
                  ga -= y.cwiseProduct(dot.replicate(1, y.cols()));
                  t.grad(a.id) += ga;
                },
                {a});
}

/// Row-wise layer normalization with learned gain and bias (1 x n each).
inline Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-12) {
  Tape& t = *x.tape;
  const Matrix& xv = x.value();
  const Eigen::Index n = xv.cols();
  const Eigen::VectorXd mean = xv.rowwise().mean();
  Matrix centered = xv.colwise() - mean;
  const Eigen::VectorXd inv_std =
      ((centered.array().square().rowwise().sum() / static_cast<double>(n)) + eps).rsqrt().matrix();
  Matrix xhat = centered.array().colwise() * inv_std.array();
  Matrix y = xhat.array().rowwise() * gamma.value().row(0).array();
  y.rowwise() += beta.value().row(0);
  return t.push(std::move(y),
                [x, gamma, beta, xhat = std::move(xhat), inv_std, n](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  if (t.requires_grad(gamma.id)) t.grad(gamma.id) += g.cwiseProduct(xhat).colwise().sum();
                  if (t.requires_grad(beta.id)) t.grad(beta.id) += g.colwise().sum();
                  if (t.requires_grad(x.id)) {
                    const Matrix gx = g.array().rowwise() * gamma.value().row(0).array();
                    const Eigen::VectorXd mean_g = gx.rowwise().mean();
                    const Eigen::VectorXd mean_gx = gx.cwiseProduct(xhat).rowwise().mean();
                    Matrix dx = gx.colwise() - mean_g;
                    dx -= xhat.cwiseProduct(mean_gx.replicate(1, n));
                    dx = dx.array().colwise() * inv_std.array();
                    t.grad(x.id) += dx;
                  }
                },
                {x, gamma, beta});
}

}  // namespace relex::ag
