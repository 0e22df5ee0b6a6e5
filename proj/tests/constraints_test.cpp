#include <doctest.h>

#include "oracle_values.hpp"
#include "sage/constraints.hpp"
#include "sage/random.hpp"

#include <Eigen/Eigenvalues>

#include <numeric>

using namespace sage;

namespace {

Dataset square_data() {
  Dataset d;
  d.append(Vector::Constant(1, 1.0), 1.0);
  d.append(Vector::Constant(1, 0.0), 0.0);
  d.append(Vector::Constant(1, 2.0), 4.0);
  return d;
}

std::vector<std::size_t> range(std::size_t from, std::size_t to) {
  std::vector<std::size_t> v(to - from);
  std::iota(v.begin(), v.end(), from);
  return v;
}

}  // namespace

TEST_CASE("slab rows for a single 1D pair") {
  const SlabConstraint s = build_slab({Vector::Constant(1, 0.0), 0.0}, {Vector::Constant(1, 2.0), 6.0}, false);
  CHECK(s.distance == 2.0);
  CHECK(s.slope == 3.0);
  const Eigen::RowVectorXd lo = s.row(false), hi = s.row(true);
  REQUIRE(lo.size() == 3);
  CHECK(lo[0] == -1.0);
  CHECK(lo[1] == -1.0);
  CHECK(lo[2] == doctest::Approx(-2.0 / 3.0));
  CHECK(hi[0] == 1.0);
  CHECK(hi[1] == -1.0);
  CHECK(s.rhs(false) == -3.0);
  CHECK(s.rhs(true) == 3.0);
}

TEST_CASE("noisy rows carry the -2/mu column") {
  const SlabConstraint s = build_slab({Vector::Constant(1, 0.0), 0.0}, {Vector::Constant(1, 4.0), 1.0}, true);
  const Vector c = s.bound_coefficients();
  REQUIRE(c.size() == 3);
  CHECK(c[0] == -2.0);
  CHECK(c[1] == doctest::Approx(-16.0 / 6.0));
  CHECK(c[2] == -0.5);
  CHECK((c.array() <= 0.0).all());
}

TEST_CASE("assembled rhs matches the reference values") {
  const Dataset d = square_data();
  const ConstraintSystem sys = assemble_system(d, 0, range(1, 3), false);
  REQUIRE(sys.rows() == 4);
  CHECK(sys.dimension() == 1);
  for (int i = 0; i < 4; ++i) CHECK(sys.b[i] == doctest::Approx(oracle::kSquareRhs[i]).epsilon(1e-15));
}

TEST_CASE("degenerate pairs are skipped and all-degenerate systems rejected") {
  Dataset d;
  d.append(Vector::Zero(2), 0.0);
  d.append(Vector::Zero(2), 1.0);
  d.append(Vector::Ones(2), 2.0);
  const ConstraintSystem sys = assemble_system(d, 0, range(1, 3), false);
  CHECK(sys.skipped == 1);
  CHECK(sys.rows() == 2);
  CHECK(sys.neighbors == std::vector<std::size_t>{2});
  const std::vector<std::size_t> only{1};
  CHECK_THROWS_AS(assemble_system(d, 0, only, false), EmptySystem);
}

TEST_CASE("true gradient lies in every slab of a quadratic") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index dim = 1 + trial % 4;
    const Matrix B = rng.normal_matrix(dim, dim);
    const Matrix P = B * B.transpose();
    const Vector q = rng.normal_vector(dim);
    auto f = [&](const Vector& x) { return 0.5 * x.dot(P * x) + q.dot(x); };
    const double h = Eigen::SelfAdjointEigenSolver<Matrix>(P).eigenvalues().cwiseAbs().maxCoeff();
    Dataset d;
    const Vector xc = rng.normal_vector(dim);
    d.append(xc, f(xc));
    for (int j = 0; j < 6; ++j) {
      const Vector x = xc + rng.uniform(0.01, 2.0) * rng.normal_vector(dim);
      d.append(x, f(x));
    }
    const ConstraintSystem sys = assemble_system(d, 0, range(1, d.size()), false);
    const Vector g = P * xc + q;
    CHECK(sys.max_violation(pack_unknowns(g, h, 0.0)) <= 1e-9 * std::max(1.0, g.norm()));
  }
}

TEST_CASE("pack_unknowns layout") {
  const Vector v = pack_unknowns(Vector::Constant(2, 5.0), 1.0, 2.0, 3.0);
  REQUIRE(v.size() == 5);
  CHECK(v[2] == 1.0);
  CHECK(v[3] == 2.0);
  CHECK(v[4] == 3.0);
  CHECK(pack_unknowns(Vector::Zero(1), 1.0, 2.0).size() == 3);
}
