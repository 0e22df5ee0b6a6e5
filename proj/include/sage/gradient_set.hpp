#pragma once

#include "sage/constraints.hpp"
#include "sage/lp.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <utility>

namespace sage {

class EstimationFailed : public std::runtime_error {
 public:
  explicit EstimationFailed(const std::string& what) : std::runtime_error("estimation failed: " + what) {}
};

/// Minimizer of the estimation LP: a gradient pick plus the smallest
/// non-negative bounds that keep the slab intersection non-empty.
struct EstimateSolution {
  Vector gradient;
  double hessian_norm = 0.0;
  double hessian_lipschitz = 0.0;
  std::optional<double> noise_bound;  // noisy systems only
};

/// { g : normals * g <= offsets }, with unit-vector rows.
struct GradientPolytope {
  Matrix normals;
  Vector offsets;
  std::optional<Vector> anchor;  // a known member; support queries are solved relative to it

  Eigen::Index dimension() const { return normals.cols(); }
  Eigen::Index rows() const { return normals.rows(); }
};

struct DiameterEstimate {
  double rho = 0.0;  // +infinity when some probe direction is unbounded
  std::optional<Vector> direction;
  std::optional<Vector> witness_high;
  std::optional<Vector> witness_low;

  bool infinite() const { return rho == std::numeric_limits<double>::infinity(); }
};

/// Default probe budget: the 2D signed axes plus 50 random directions.
inline int default_probe_budget(Eigen::Index dim) { return static_cast<int>(2 * dim + 50); }

/// Solves min H + gamma (+ eps) over the system plus non-negativity rows. For
/// noisy systems with a known bound, eps is pinned to `known_noise`. The
/// returned polytope is anchored at the LP gradient, with offsets relaxed by
/// at most rounding error so that the anchor is a member.
std::pair<EstimateSolution, GradientPolytope> estimate_gradient_set(
    const ConstraintSystem& system, std::optional<double> known_noise = std::nullopt);

/// Offsets b' = b - A_r [H gamma (eps)] for an arbitrary choice of bounds.
GradientPolytope polytope_for_bounds(const ConstraintSystem& system, const Vector& bounds);

bool polytope_contains(const GradientPolytope& p, const Vector& g, double tol = 1e-7);

/// Lower bound on the polytope diameter by support-function probing.
///
/// The budget counts signed probe directions. The 2D signed coordinate axes
/// come first; the remainder is spent on seeded random lines, each probed in
/// both senses (two directions per line). A line's candidate pair is
/// (argmax d^T g, argmax -d^T g) and rho is the largest witness distance
/// found, so the result never shrinks as the budget grows. Any unbounded
/// support LP short-circuits to rho = +infinity with that probe as direction.
DiameterEstimate estimate_diameter(const GradientPolytope& p, int direction_budget, std::uint64_t seed);

}  // namespace sage
