#include <doctest.h>

#include "sage/core.hpp"
#include "sage/random.hpp"

#include <cmath>
#include <limits>
#include <set>

using namespace sage;

TEST_CASE("pair geometry in one dimension") {
  const PairGeometry g = pair_geometry(Vector::Constant(1, 2.0), Vector::Constant(1, 5.0));
  CHECK(g.distance == 3.0);
  CHECK(g.direction[0] == 1.0);
  CHECK(g.difference[0] == 3.0);
}

TEST_CASE("pair geometry direction is a unit vector") {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const Vector a = rng.normal_vector(4), b = rng.normal_vector(4);
    const PairGeometry g = pair_geometry(a, b);
    CHECK(g.direction.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK((a + g.distance * g.direction - b).norm() < 1e-12);
  }
}

TEST_CASE("coincident points are degenerate") {
  const Vector x = Vector::Constant(2, 1.0);
  CHECK_THROWS_AS(pair_geometry(x, x), DegeneratePair);
  CHECK_FALSE(try_pair_geometry(x, x).has_value());
  CHECK_FALSE(try_pair_geometry(x, x + Vector::Constant(2, 1e-14)).has_value());
}

TEST_CASE("secant slope of x^2") {
  CHECK(directional_slope({Vector::Constant(1, 1.0), 1.0}, {Vector::Constant(1, 2.0), 4.0}) == 3.0);
}

TEST_CASE("dataset rejects bad samples and keeps indices") {
  Dataset d;
  CHECK(d.dimension() == 0);
  CHECK(d.append(Vector::Zero(2), 1.0) == 0);
  CHECK(d.append(Vector::Ones(2), 2.0) == 1);
  CHECK_THROWS_AS(d.append(Vector::Zero(3), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(d.append(Vector::Zero(2), std::nan("")), std::invalid_argument);
  Vector inf = Vector::Zero(2);
  inf[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(d.append(inf, 0.0), std::invalid_argument);
  CHECK(d.size() == 2);
  CHECK(d[1].value == 2.0);
}

TEST_CASE("oracle counts every call") {
  FunctionOracle f([](const Vector& x) { return x.sum(); });
  for (int i = 0; i < 7; ++i) f(Vector::Ones(3));
  CHECK(f.count() == 7);
}

TEST_CASE("rng is reproducible and in range") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng r(1);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
  CHECK(r.unit_vector(7).norm() == doctest::Approx(1.0));
}

TEST_CASE("mixed seeds separate streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t t = 0; t < 100; ++t)
    for (std::uint64_t s = 0; s < 4; ++s) seen.insert(mix_seed(7, t, s));
  CHECK(seen.size() == 400);
  CHECK(mix_seed(7, 1, 2) == mix_seed(7, 1, 2));
}
