#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace sage {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when two points coincide (within the degeneracy threshold) and no
/// direction can be formed between them.
class DegeneratePair : public std::runtime_error {
 public:
  DegeneratePair() : std::runtime_error("degenerate sample pair: points coincide") {}
};

/// One evaluated point and its (possibly noisy) observed value.
struct Sample {
  Vector point;
  double value = 0.0;
};

/// Append-only collection of samples. Indices never change once assigned.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Sample> samples);

  /// Appends a sample and returns its index. Throws std::invalid_argument on
  /// non-finite entries or a dimension mismatch.
  std::size_t append(Sample s);
  std::size_t append(const Vector& point, double value) { return append(Sample{point, value}); }

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  /// Dimension of the stored points, 0 when empty.
  Eigen::Index dimension() const { return samples_.empty() ? 0 : samples_.front().point.size(); }

  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  const Sample& at(std::size_t i) const { return samples_.at(i); }
  const std::vector<Sample>& samples() const { return samples_; }

 private:
  std::vector<Sample> samples_;
};

/// Black-box function access with an evaluation counter. Every call through
/// operator() increments the counter by exactly one.
class EvaluationOracle {
 public:
  virtual ~EvaluationOracle() = default;

  double operator()(const Vector& x) {
    ++count_;
    return evaluate(x);
  }

  std::size_t count() const { return count_; }

 protected:
  virtual double evaluate(const Vector& x) = 0;

 private:
  std::size_t count_ = 0;
};

/// Oracle backed by an arbitrary callable.
class FunctionOracle : public EvaluationOracle {
 public:
  explicit FunctionOracle(std::function<double(const Vector&)> f) : f_(std::move(f)) {}

 protected:
  double evaluate(const Vector& x) override { return f_(x); }

 private:
  std::function<double(const Vector&)> f_;
};

struct PairGeometry {
  Vector difference;  // x_j - x_i
  double distance = 0.0;
  Vector direction;   // unit vector from x_i to x_j
};

/// Distances at or below this value are treated as coincident points.
inline double degeneracy_threshold(const Vector& xi) { return 1e-12 * std::max(1.0, xi.norm()); }

/// Non-throwing variant of pair_geometry; empty for coincident points.
std::optional<PairGeometry> try_pair_geometry(const Vector& xi, const Vector& xj);

PairGeometry pair_geometry(const Vector& xi, const Vector& xj);

/// Secant slope (z_j - z_i) / |x_j - x_i|.
double directional_slope(const Sample& si, const Sample& sj);

}  // namespace sage
