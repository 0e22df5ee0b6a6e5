#pragma once

#include "sage/core.hpp"

#include <span>
#include <stdexcept>

namespace sage {

class EmptySystem : public std::runtime_error {
 public:
  EmptySystem() : std::runtime_error("constraint system is empty: every sample pair was degenerate") {}
};

/// The pair of inequalities bounding u^T g between slope +/- half-width, with
/// the half-width expressed through the unknowns (H, gamma[, eps]):
///   |slope - u^T g| <= mu/2 * H + mu^2/6 * gamma [+ 2/mu * eps]
struct SlabConstraint {
  Vector direction;
  double distance = 0.0;
  double slope = 0.0;
  bool noisy = false;

  /// Number of non-gradient unknowns: 2 (H, gamma) or 3 (H, gamma, eps).
  int bound_unknowns() const { return noisy ? 3 : 2; }

  /// Coefficients on (H, gamma[, eps]); identical for both rows, all <= 0.
  Vector bound_coefficients() const;

  /// Full row over (g, H, gamma[, eps]). upper=false gives the (-u) row.
  Eigen::RowVectorXd row(bool upper) const;
  double rhs(bool upper) const { return upper ? slope : -slope; }
};

SlabConstraint build_slab(const Sample& si, const Sample& sj, bool noisy);

/// Stacked slab rows A v <= b around one center sample. Columns are the D
/// gradient components followed by H, gamma and (noisy only) eps.
struct ConstraintSystem {
  Matrix A;
  Vector b;
  std::size_t center = 0;
  std::vector<std::size_t> neighbors;  // accepted pairs, in row order
  std::size_t skipped = 0;             // degenerate pairs dropped
  bool noisy = false;

  Eigen::Index dimension() const { return A.cols() - (noisy ? 3 : 2); }
  Eigen::Index rows() const { return A.rows(); }
  auto gradient_block() const { return A.leftCols(dimension()); }
  auto bound_block() const { return A.rightCols(noisy ? 3 : 2); }

  /// Largest violation of A v <= b (negative when strictly satisfied).
  double max_violation(const Vector& v) const;
};

/// Rows for pair j come in (-u, +u) order, pairs in the order of `others`.
ConstraintSystem assemble_system(const Dataset& data, std::size_t center,
                                 std::span<const std::size_t> others, bool noisy);

/// Convenience: pack (g, H, gamma[, eps]) into the unknown vector layout.
Vector pack_unknowns(const Vector& g, double hessian_norm, double hessian_lipschitz,
                     std::optional<double> noise_bound = std::nullopt);

}  // namespace sage
