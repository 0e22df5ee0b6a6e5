#include <doctest.h>

#include "oracle_values.hpp"
#include "sage/gradient_set.hpp"
#include "sage/random.hpp"

#include <cmath>
#include <numeric>

using namespace sage;

namespace {

std::vector<std::size_t> neighbours(std::size_t n) {
  std::vector<std::size_t> v(n - 1);
  std::iota(v.begin(), v.end(), 1);
  return v;
}

ConstraintSystem square_system() {
  Dataset d;
  d.append(Vector::Constant(1, 1.0), 1.0);
  d.append(Vector::Constant(1, 0.0), 0.0);
  d.append(Vector::Constant(1, 2.0), 4.0);
  return assemble_system(d, 0, neighbours(3), false);
}

GradientPolytope square_box() {
  GradientPolytope p;
  p.normals.resize(4, 2);
  p.normals << 1, 0, -1, 0, 0, 1, 0, -1;
  p.offsets = Vector::Ones(4);
  return p;
}

}  // namespace

TEST_CASE("estimation LP on x^2 around 1") {
  const auto [est, poly] = estimate_gradient_set(square_system());
  CHECK(est.gradient[0] == doctest::Approx(oracle::kSquareGradient).epsilon(1e-9));
  CHECK(est.hessian_norm == doctest::Approx(oracle::kSquareH).epsilon(1e-9));
  CHECK(est.hessian_lipschitz == doctest::Approx(oracle::kSquareGamma));
  CHECK_FALSE(est.noise_bound.has_value());
  CHECK(polytope_contains(poly, Vector::Constant(1, oracle::kSquareIntervalLo)));
  CHECK(polytope_contains(poly, Vector::Constant(1, oracle::kSquareIntervalHi)));
  CHECK_FALSE(polytope_contains(poly, Vector::Constant(1, 2.5)));
  CHECK(estimate_diameter(poly, 2, 0).rho == 0.0);
}

TEST_CASE("minimal bounds match the reference solver") {
  int index = 0;
  for (const auto& c : oracle::kEstimationCases) {
    CAPTURE(index++);
    Dataset d;
    const std::size_t n = c.values.size();
    for (std::size_t i = 0; i < n; ++i)
      d.append(Eigen::Map<const Vector>(c.points.data() + i * c.dim, c.dim), c.values[i]);
    const ConstraintSystem sys = assemble_system(d, 0, neighbours(n), c.noisy);
    const auto [est, poly] = estimate_gradient_set(sys);
    const double obj = est.hessian_norm + est.hessian_lipschitz + est.noise_bound.value_or(0.0);
    CHECK(obj == doctest::Approx(c.objective).epsilon(1e-6));
    CHECK(est.noise_bound.has_value() == c.noisy);
    // the returned gradient satisfies its own slabs
    CHECK(polytope_contains(poly, est.gradient, 1e-7 * std::max(1.0, poly.offsets.cwiseAbs().maxCoeff())));
  }
}

TEST_CASE("a known noise bound pins eps") {
  Dataset d;
  d.append(Vector::Constant(1, 1.0), 1.0);
  d.append(Vector::Constant(1, 0.0), 0.0);
  d.append(Vector::Constant(1, 2.0), 4.0);
  const ConstraintSystem sys = assemble_system(d, 0, neighbours(3), true);
  const auto [est, poly] = estimate_gradient_set(sys, 0.25);
  REQUIRE(est.noise_bound.has_value());
  CHECK(*est.noise_bound == doctest::Approx(0.25));
  CHECK_THROWS_AS(estimate_gradient_set(sys, -1.0), std::invalid_argument);
}

TEST_CASE("square polytope diameter") {
  const GradientPolytope box = square_box();
  for (int budget : {4, 6, 10, 40}) {
    const DiameterEstimate d = estimate_diameter(box, budget, 5);
    CHECK(d.rho >= 2.0 - 1e-9);
    CHECK(d.rho <= 2.0 * std::sqrt(2.0) + 1e-9);
  }
  CHECK(estimate_diameter(box, 1000, 5).rho >= 2.7);
  CHECK_THROWS_AS(estimate_diameter(box, 3, 0), std::invalid_argument);
}

TEST_CASE("more probes never shrink the diameter") {
  const GradientPolytope box = square_box();
  double last = 0.0;
  for (int budget = 4; budget <= 64; budget += 6) {
    const double rho = estimate_diameter(box, budget, 9).rho;
    CHECK(rho >= last);
    last = rho;
  }
}

TEST_CASE("witnesses are members and direction joins them") {
  Rng rng(2);
  GradientPolytope p;
  p.normals = rng.normal_matrix(12, 3);
  for (Eigen::Index i = 0; i < p.normals.rows(); ++i) p.normals.row(i).normalize();
  p.offsets = Vector::Ones(12);
  const DiameterEstimate d = estimate_diameter(p, 30, 1);
  REQUIRE(std::isfinite(d.rho));
  REQUIRE(d.witness_high.has_value());
  CHECK(polytope_contains(p, *d.witness_high, 1e-7));
  CHECK(polytope_contains(p, *d.witness_low, 1e-7));
  CHECK(((*d.witness_high - *d.witness_low) / d.rho - *d.direction).norm() < 1e-9);
}

TEST_CASE("a single slab is unbounded") {
  GradientPolytope p;
  p.normals.resize(2, 2);
  p.normals << 1, 0, -1, 0;
  p.offsets = Vector::Ones(2);
  const DiameterEstimate d = estimate_diameter(p, 4, 0);
  CHECK(d.infinite());
  CHECK(d.direction.has_value());
}

TEST_CASE("polytope_for_bounds shifts the offsets") {
  const ConstraintSystem sys = square_system();
  Vector bounds(2);
  bounds << 4.0, 0.0;
  const GradientPolytope p = polytope_for_bounds(sys, bounds);
  // |g - 1| <= 2 and |g - 3| <= 2 gives [1, 3]
  CHECK(polytope_contains(p, Vector::Constant(1, 1.0), 1e-12));
  CHECK(polytope_contains(p, Vector::Constant(1, 3.0), 1e-12));
  CHECK_FALSE(polytope_contains(p, Vector::Constant(1, 3.1)));
  CHECK(estimate_diameter(p, 2, 0).rho == doctest::Approx(2.0));
}
