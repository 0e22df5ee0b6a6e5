#pragma once

#include "sage/gradient_estimator.hpp"

#include <cstdint>
#include <optional>

namespace sage {

struct BaselineConfig {
  std::optional<double> step;    // finite-difference h; default 1e-6 * max(1, |x|)
  double smoothing = 1e-3;       // Gaussian smoothing radius sigma
  std::optional<int> directions; // m; default D
  std::uint64_t seed = 0;
};

double default_fd_step(const Vector& x);

// Coordinate-wise finite differences. The overloads taking fx reuse a known
// value at x and save one evaluation.
Vector ffd(EvaluationOracle& oracle, const Vector& x, const BaselineConfig& cfg);
Vector ffd(EvaluationOracle& oracle, const Vector& x, double fx, const BaselineConfig& cfg);
Vector cfd(EvaluationOracle& oracle, const Vector& x, const BaselineConfig& cfg);

/// Standard Gaussian directions for the smoothed estimators, one per column.
Matrix gaussian_directions(Eigen::Index dim, int count, std::uint64_t seed);

// (1/m) sum_i [(f(x + s u_i) - f(x)) / s] u_i
Vector gsg(EvaluationOracle& oracle, const Vector& x, const BaselineConfig& cfg);
Vector gsg(EvaluationOracle& oracle, const Vector& x, double fx, double sigma, const Matrix& directions);
// (1/m) sum_i [(f(x + s u_i) - f(x - s u_i)) / 2s] u_i
Vector cgsg(EvaluationOracle& oracle, const Vector& x, const BaselineConfig& cfg);
Vector cgsg(EvaluationOracle& oracle, const Vector& x, double sigma, const Matrix& directions);

enum class BaselineKind { Ffd, Cfd, Gsg, Cgsg };

/// Adapter for the descent loop. Smoothed estimators draw fresh directions
/// on every call from a stream seeded by cfg.seed.
class BaselineEstimator : public GradientEstimator {
 public:
  BaselineEstimator(BaselineKind kind, BaselineConfig cfg) : kind_(kind), cfg_(cfg) {}

  std::string name() const override;
  std::optional<Vector> estimate(EvaluationOracle& oracle, Dataset& data, std::size_t center,
                                 std::size_t budget) override;

  /// Oracle calls needed per estimate when f(x) is already known.
  std::size_t calls_per_estimate(Eigen::Index dim) const;

 private:
  BaselineKind kind_;
  BaselineConfig cfg_;
  std::uint64_t calls_ = 0;
};

}  // namespace sage
