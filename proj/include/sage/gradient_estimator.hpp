#pragma once

#include "sage/core.hpp"

#include <optional>
#include <string>

namespace sage {

/// A gradient estimator as seen by the descent loop.
class GradientEstimator {
 public:
  virtual ~GradientEstimator() = default;

  virtual std::string name() const = 0;

  /// Gradient estimate at data[center]. Implementations make at most
  /// `budget` oracle calls and return nullopt when they cannot produce an
  /// estimate within it. Samples they want reused later go into `data`.
  virtual std::optional<Vector> estimate(EvaluationOracle& oracle, Dataset& data,
                                         std::size_t center, std::size_t budget) = 0;
};

}  // namespace sage
