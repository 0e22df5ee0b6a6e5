#include "sage/gradient_set.hpp"

#include "sage/random.hpp"

#include <cmath>

namespace sage {

std::pair<EstimateSolution, GradientPolytope> estimate_gradient_set(const ConstraintSystem& system,
                                                                    std::optional<double> known_noise) {
  if (system.rows() == 0) throw EstimationFailed("empty constraint system");
  const Eigen::Index d = system.dimension();
  const Eigen::Index k = system.noisy ? 3 : 2;
  const Eigen::Index rows = system.rows();
  const bool pinned = system.noisy && known_noise.has_value();
  if (pinned && !(*known_noise >= 0.0)) throw std::invalid_argument("known noise bound must be >= 0");

  LinearProgram lp;
  lp.objective = Vector::Zero(d + k);
  lp.objective.tail(k).setOnes();
  const Eigen::Index extra = k + (pinned ? 1 : 0);
  lp.constraints = Matrix::Zero(rows + extra, d + k);
  lp.constraints.topRows(rows) = system.A;
  lp.constraints.block(rows, d, k, k) = -Matrix::Identity(k, k);
  lp.rhs = Vector::Zero(rows + extra);
  lp.rhs.head(rows) = system.b;
  if (pinned) {
    // eps <= bound, and the non-negativity row tightened to -eps <= -bound
    lp.constraints(rows + k, d + 2) = 1.0;
    lp.rhs[rows + k] = *known_noise;
    lp.rhs[rows + 2] = -*known_noise;
  }

  LpSolution sol;
  try {
    sol = solve_lp(lp);
  } catch (const NumericalFailure& e) {
    throw EstimationFailed(e.what());
  }
  // Large enough bounds always satisfy every slab, so only Optimal is valid.
  if (sol.status != LpStatus::Optimal) throw EstimationFailed(std::string("estimation LP ") + to_string(sol.status));

  Vector bounds = sol.x.tail(k).cwiseMax(0.0);
  EstimateSolution est;
  est.gradient = sol.x.head(d);
  est.hessian_norm = bounds[0];
  est.hessian_lipschitz = bounds[1];
  if (system.noisy) est.noise_bound = bounds[2];
  GradientPolytope poly = polytope_for_bounds(system, bounds);
  const Vector slack = poly.offsets - poly.normals * est.gradient;
  const double scale = std::max(1.0, poly.offsets.cwiseAbs().maxCoeff());
  if (slack.minCoeff() < -1e-7 * scale) throw EstimationFailed("LP gradient outside its own polytope");
  poly.offsets += (-slack).cwiseMax(0.0);
  poly.anchor = est.gradient;
  return {std::move(est), std::move(poly)};
}

GradientPolytope polytope_for_bounds(const ConstraintSystem& system, const Vector& bounds) {
  GradientPolytope p;
  p.normals = system.gradient_block();
  p.offsets = system.b - system.bound_block() * bounds;
  return p;
}

bool polytope_contains(const GradientPolytope& p, const Vector& g, double tol) {
  if (g.size() != p.dimension() && p.rows() > 0)
    throw std::invalid_argument("polytope_contains: dimension mismatch");
  if (p.rows() == 0) return true;
  return ((p.normals * g - p.offsets).array() <= tol).all();
}

namespace {

struct Support {
  bool unbounded = false;
  Vector argmax;
};

Support support_point(const GradientPolytope& p, const Vector& slack, const Vector& d) {
  LinearProgram lp{-d, p.normals, slack};
  const LpSolution sol = solve_lp(lp);
  if (sol.status == LpStatus::Infeasible) throw NumericalFailure("support query on an empty polytope");
  if (sol.status == LpStatus::Unbounded) return {true, {}};
  return {false, p.anchor ? Vector(*p.anchor + sol.x) : sol.x};
}

}  // namespace

DiameterEstimate estimate_diameter(const GradientPolytope& p, int direction_budget, std::uint64_t seed) {
  const Eigen::Index dim = p.dimension();
  if (dim < 1) throw std::invalid_argument("estimate_diameter: zero-dimensional polytope");
  if (direction_budget < 2 * dim) throw std::invalid_argument("estimate_diameter: budget below 2D");

  std::vector<Vector> lines;
  for (Eigen::Index i = 0; i < dim; ++i) lines.push_back(Vector::Unit(dim, i));
  Rng rng(seed);
  const int random_lines = (direction_budget - 2 * static_cast<int>(dim)) / 2;
  for (int i = 0; i < random_lines; ++i) lines.push_back(rng.unit_vector(dim));

  const Vector slack = p.anchor ? Vector((p.offsets - p.normals * *p.anchor).cwiseMax(0.0)) : p.offsets;

  DiameterEstimate out;
  double best = -1.0;
  for (const Vector& d : lines) {
    const Support hi = support_point(p, slack, d);
    if (hi.unbounded) {
      out.rho = std::numeric_limits<double>::infinity();
      out.direction = d;
      out.witness_high.reset();
      out.witness_low.reset();
      return out;
    }
    const Support lo = support_point(p, slack, -d);
    if (lo.unbounded) {
      out.rho = std::numeric_limits<double>::infinity();
      out.direction = -d;
      out.witness_high.reset();
      out.witness_low.reset();
      return out;
    }
    const double dist = (hi.argmax - lo.argmax).norm();
    if (dist > best) {
      best = dist;
      out.witness_high = hi.argmax;
      out.witness_low = lo.argmax;
    }
  }
  // witnesses that agree to rounding describe a single point
  if (best <= 1e-12 * std::max(1.0, out.witness_high->norm())) best = 0.0;
  out.rho = best;
  if (best > 0.0) out.direction = (*out.witness_high - *out.witness_low) / best;
  return out;
}

}  // namespace sage
