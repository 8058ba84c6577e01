#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace relex {

/// One seed drives independent streams for initialization, dropout and
/// shuffling so that changing one consumer never perturbs another.
class Random {
 public:
  explicit Random(std::uint64_t seed = 0) { set_seed(seed); }

  void set_seed(std::uint64_t seed) {
    seed_ = seed;
    init_.seed(mix(seed, 1));
    dropout_.seed(mix(seed, 2));
    shuffle_.seed(mix(seed, 3));
  }

  [[nodiscard]] std::uint64_t seed() const { return seed_; }

  std::mt19937_64& init_engine() { return init_; }
  std::mt19937_64& dropout_engine() { return dropout_; }
  std::mt19937_64& shuffle_engine() { return shuffle_; }

  Eigen::MatrixXd uniform(Eigen::Index rows, Eigen::Index cols, double range) {
    std::uniform_real_distribution<double> dist(-range, range);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(init_);
    return m;
  }

  /// Inverted-dropout mask: kept entries are 1/(1-rate), dropped are 0.
  Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate) {
    std::bernoulli_distribution keep(1.0 - rate);
    Eigen::MatrixXd m(rows, cols);
    const double s = 1.0 / (1.0 - rate);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = keep(dropout_) ? s : 0.0;
    return m;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    std::shuffle(v.begin(), v.end(), shuffle_);
  }

 private:
  // splitmix64 finalizer over (seed, stream)
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_ = 0;
  std::mt19937_64 init_;
  std::mt19937_64 dropout_;
  std::mt19937_64 shuffle_;
};

}  // namespace relex
