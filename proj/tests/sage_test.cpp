#include <doctest.h>

#include "oracle_values.hpp"
#include "sage/random.hpp"
#include "sage/sage.hpp"

#include <cmath>

using namespace sage;

namespace {

double cubic(double mu, double h, double g, double e) { return g / 3 * mu * mu * mu + h / 2 * mu * mu - 2 * e; }

Dataset square_data() {
  Dataset d;
  d.append(Vector::Constant(1, 1.0), 1.0);
  d.append(Vector::Constant(1, 0.0), 0.0);
  d.append(Vector::Constant(1, 2.0), 4.0);
  return d;
}

}  // namespace

TEST_CASE("optimal radius against the reference roots") {
  for (const auto& c : oracle::kRadiusCases) {
    const RadiusResult r = optimal_radius(c.H, c.gamma, c.eps);
    CHECK(r.alpha_star == doctest::Approx(c.alpha).epsilon(1e-10));
    CHECK(std::abs(cubic(r.alpha_star, c.H, c.gamma, c.eps)) <= 1e-9 * std::max(1.0, 2 * c.eps));
    CHECK(r.rho_star_best == doctest::Approx(kSlabWidthFactor * slab_half_width(r.alpha_star, c.H, c.gamma, c.eps)));
  }
}

TEST_CASE("optimal radius corner cases") {
  const RadiusResult zero = optimal_radius(3.0, 1.0, 0.0);
  CHECK(zero.alpha_star == 0.0);
  CHECK(zero.rho_star_best == 0.0);
  CHECK_THROWS_AS(optimal_radius(0.0, 0.0, 1.0), NoFiniteRadius);
  CHECK_THROWS_AS(optimal_radius(-1.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("optimal radius minimises the slab width") {
  Rng rng(17);
  for (int i = 0; i < 30; ++i) {
    const double h = std::pow(10.0, rng.uniform(-3, 3)), g = std::pow(10.0, rng.uniform(-3, 3));
    const double e = std::pow(10.0, rng.uniform(-4, 1));
    const RadiusResult r = optimal_radius(h, g, e);
    const double best = slab_half_width(r.alpha_star, h, g, e);
    for (double f : {0.5, 0.9, 0.99, 1.01, 1.1, 2.0}) CHECK(slab_half_width(f * r.alpha_star, h, g, e) >= best - 1e-12 * best);
  }
}

TEST_CASE("filter orders by distance to alpha and skips the center") {
  Dataset d;
  d.append(Vector::Zero(1), 0.0);
  for (double x : {3.0, 1.0, -1.0, 0.0, 2.0, 0.5}) d.append(Vector::Constant(1, x), 0.0);
  const auto ball = filter_samples(d, 0, 0.0, 10);
  CHECK(ball == std::vector<std::size_t>{6, 2, 3, 5, 1});
  const auto shell = filter_samples(d, 0, 2.0, 3);
  CHECK(shell == std::vector<std::size_t>{5, 1, 2});
  CHECK_THROWS_AS(filter_samples(d, 0, 0.0, 0), std::invalid_argument);
}

TEST_CASE("x^2 with three samples needs no refinement") {
  Dataset d = square_data();
  FunctionOracle f([](const Vector& x) { return x.squaredNorm(); });
  SageConfig cfg;
  const SageResult r = estimate_gradient(f, d, 0, cfg);
  CHECK(r.gradient[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.rho_final == 0.0);
  CHECK(r.aux_points_used == 0);
  CHECK(f.count() == 0);
  CHECK(r.set_estimated);
  REQUIRE(r.trace.size() == 1);
  CHECK(r.trace[0].action == SageAction::Accept);
}

TEST_CASE("affine function from three independent neighbours") {
  const Vector c = (Vector(2) << 1.5, -0.25).finished();
  auto fn = [&](const Vector& x) { return c.dot(x) + 3.0; };
  Dataset d;
  for (const Vector& x : {Vector((Vector(2) << 0.3, 0.2).finished()), Vector((Vector(2) << 1.0, 0.0).finished()),
                          Vector((Vector(2) << 0.0, 1.0).finished()), Vector((Vector(2) << -0.5, -0.7).finished())})
    d.append(x, fn(x));
  FunctionOracle f(fn);
  const SageResult r = estimate_gradient(f, d, 0, SageConfig{});
  CHECK((r.gradient - c).norm() < 1e-9);
  CHECK(r.aux_points_used == 0);
}

TEST_CASE("refinement respects the auxiliary budget and is deterministic") {
  Rng rng(4);
  const Matrix B = rng.normal_matrix(4, 4);
  const Matrix P = B * B.transpose();
  auto fn = [&](const Vector& x) { return 0.5 * x.dot(P * x) + std::pow(x[0], 3); };
  const Vector x0 = rng.normal_vector(4);
  for (std::size_t limit : {0u, 1u, 3u, 8u}) {
    SageConfig cfg;
    cfg.max_aux_samples = limit;
    cfg.seed = 9;
    Dataset a, b;
    a.append(x0, fn(x0));
    b.append(x0, fn(x0));
    FunctionOracle fa(fn), fb(fn);
    const SageResult ra = estimate_gradient(fa, a, 0, cfg);
    const SageResult rb = estimate_gradient(fb, b, 0, cfg);
    CHECK(fa.count() <= limit);
    CHECK(ra.aux_points_used == fa.count());
    CHECK(a.size() == 1 + fa.count());
    REQUIRE(ra.trace.size() == rb.trace.size());
    for (std::size_t i = 0; i < ra.trace.size(); ++i) {
      CHECK(ra.trace[i].action == rb.trace[i].action);
      CHECK((ra.trace[i].rho == rb.trace[i].rho || (std::isinf(ra.trace[i].rho) && std::isinf(rb.trace[i].rho))));
    }
    CHECK(ra.gradient == rb.gradient);
  }
}

TEST_CASE("an exhausted budget is reported") {
  Dataset d;
  d.append(Vector::Zero(3), 0.0);
  FunctionOracle f([](const Vector& x) { return std::exp(x.sum()); });
  SageConfig cfg;
  cfg.max_aux_samples = 0;
  const SageResult r = estimate_gradient(f, d, 0, cfg);
  CHECK(r.budget_exhausted);
  CHECK_FALSE(r.set_estimated);
  CHECK(std::isinf(r.rho_final));
  CHECK(r.trace.back().action == SageAction::BudgetExhausted);
}

TEST_CASE("noisy mode converges on a noisy quadratic") {
  Rng noise(8);
  auto fn = [&](const Vector& x) { return x.squaredNorm() + noise.uniform(-1e-6, 1e-6); };
  Dataset d;
  const Vector x0 = Vector::Constant(2, 1.0);
  FunctionOracle f(fn);
  d.append(x0, f(x0));
  SageConfig cfg;
  cfg.noisy_mode = true;
  cfg.max_aux_samples = 12;
  const SageResult r = estimate_gradient(f, d, 0, cfg);
  REQUIRE(r.set_estimated);
  CHECK((r.gradient - 2.0 * x0).norm() < 0.1);
  CHECK(r.solution.noise_bound.has_value());
}

TEST_CASE("estimator adapter returns nullopt without a set") {
  SageConfig cfg;
  cfg.max_aux_samples = 0;
  SageEstimator est(cfg);
  Dataset d;
  d.append(Vector::Zero(2), 0.0);
  FunctionOracle f([](const Vector& x) { return x.sum(); });
  CHECK_FALSE(est.estimate(f, d, 0, 10).has_value());
  CHECK(est.name() == "sage");
}

TEST_CASE("argument validation") {
  Dataset d = square_data();
  FunctionOracle f([](const Vector& x) { return x.squaredNorm(); });
  SageConfig cfg;
  CHECK_THROWS_AS(estimate_gradient(f, d, 7, cfg), std::out_of_range);
  cfg.rho_target = 0.0;
  CHECK_THROWS_AS(estimate_gradient(f, d, 0, cfg), std::invalid_argument);
}
