#include "sage/constraints.hpp"

#include <limits>

namespace sage {

Vector SlabConstraint::bound_coefficients() const {
  Vector c(bound_unknowns());
  c[0] = -0.5 * distance;
  c[1] = -distance * distance / 6.0;
  if (noisy) c[2] = -2.0 / distance;
  return c;
}

Eigen::RowVectorXd SlabConstraint::row(bool upper) const {
  const auto d = direction.size();
  Eigen::RowVectorXd r(d + bound_unknowns());
  r.head(d) = (upper ? 1.0 : -1.0) * direction.transpose();
  r.tail(bound_unknowns()) = bound_coefficients().transpose();
  return r;
}

SlabConstraint build_slab(const Sample& si, const Sample& sj, bool noisy) {
  PairGeometry geo = pair_geometry(si.point, sj.point);
  SlabConstraint slab;
  slab.slope = (sj.value - si.value) / geo.distance;
  slab.distance = geo.distance;
  slab.direction = std::move(geo.direction);
  slab.noisy = noisy;
  return slab;
}

double ConstraintSystem::max_violation(const Vector& v) const {
  if (A.rows() == 0) return -std::numeric_limits<double>::infinity();
  return (A * v - b).maxCoeff();
}

ConstraintSystem assemble_system(const Dataset& data, std::size_t center,
                                 std::span<const std::size_t> others, bool noisy) {
  if (center >= data.size()) throw std::out_of_range("assemble_system: center index out of range");
  const Sample& c = data[center];
  const Eigen::Index d = c.point.size();
  const Eigen::Index cols = d + (noisy ? 3 : 2);

  ConstraintSystem sys;
  sys.center = center;
  sys.noisy = noisy;
  sys.A.resize(2 * static_cast<Eigen::Index>(others.size()), cols);
  sys.b.resize(2 * static_cast<Eigen::Index>(others.size()));

  Eigen::Index r = 0;
  for (std::size_t j : others) {
    if (j == center) throw std::invalid_argument("assemble_system: center listed among neighbors");
    const Sample& s = data.at(j);
    auto geo = try_pair_geometry(c.point, s.point);
    if (!geo) {
      ++sys.skipped;
      continue;
    }
    SlabConstraint slab;
    slab.slope = (s.value - c.value) / geo->distance;
    slab.distance = geo->distance;
    slab.direction = std::move(geo->direction);
    slab.noisy = noisy;

    sys.A.row(r) = slab.row(false);
    sys.b[r] = slab.rhs(false);
    sys.A.row(r + 1) = slab.row(true);
    sys.b[r + 1] = slab.rhs(true);
    r += 2;
    sys.neighbors.push_back(j);
  }
  if (r == 0) throw EmptySystem();
  sys.A.conservativeResize(r, cols);
  sys.b.conservativeResize(r);
  return sys;
}

Vector pack_unknowns(const Vector& g, double hessian_norm, double hessian_lipschitz,
                     std::optional<double> noise_bound) {
  Vector v(g.size() + (noise_bound ? 3 : 2));
  v.head(g.size()) = g;
  v[g.size()] = hessian_norm;
  v[g.size() + 1] = hessian_lipschitz;
  if (noise_bound) v[g.size() + 2] = *noise_bound;
  return v;
}

}  // namespace sage
