#pragma once

#include "sage/core.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace sage {

/// Seeded generator with platform-independent output. std::mt19937_64 is
/// fully specified by the standard; the distributions in <random> are not,
/// so uniform and Gaussian variates are derived here from raw engine bits.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64+box-muller/v1";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  double normal();

  Vector normal_vector(Eigen::Index n);
  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols);
  /// Uniformly distributed point on the unit sphere in R^n.
  Vector unit_vector(Eigen::Index n);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// splitmix64 finalizer; mixes a base seed with stream identifiers.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace sage
