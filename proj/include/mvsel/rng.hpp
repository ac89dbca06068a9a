#pragma once

#include <cstdint>
#include <string_view>

#include <Eigen/Core>

namespace mvsel {

// Counter-based generator. The k-th 64-bit output (k = 1, 2, ...) of a stream
// with key s is splitmix64_finalize(s + k * 0x9E3779B97F4A7C15), i.e. the
// SplitMix64 sequence evaluated at an explicit counter. Named substreams use
// key' = splitmix64_finalize(key ^ fnv1a64(name)).
//
// uniform() takes the top 53 bits; normal() is Box-Muller using two uniforms
// per draw (the sine companion is discarded). Matrices are filled row by row.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(splitmix64_finalize(seed)) {}

  Rng substream(std::string_view name) const;
  Rng substream(std::string_view name, std::uint64_t index) const;

  std::uint64_t next_u64();
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  // Uniform integer in [0, n) by rejection; n must be positive.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  static std::uint64_t splitmix64_finalize(std::uint64_t z);
  static std::uint64_t fnv1a64(std::string_view bytes);

 private:
  struct FromKey {};
  Rng(std::uint64_t key, FromKey) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng);
Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi, Rng& rng);

}  // namespace mvsel
