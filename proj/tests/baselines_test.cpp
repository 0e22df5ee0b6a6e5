#include <doctest.h>

#include "sage/baselines.hpp"
#include "sage/random.hpp"

using namespace sage;

namespace {

FunctionOracle square() {
  return FunctionOracle([](const Vector& x) { return x.squaredNorm(); });
}

}  // namespace

TEST_CASE("forward and central differences on x^2") {
  BaselineConfig cfg;
  cfg.step = 0.1;
  auto f = square();
  CHECK(ffd(f, Vector::Constant(1, 1.0), cfg)[0] == doctest::Approx(2.1).epsilon(1e-12));
  CHECK(f.count() == 2);
  CHECK(cfd(f, Vector::Constant(1, 1.0), cfg)[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.count() == 4);
  CHECK(ffd(f, Vector::Constant(1, 1.0), 1.0, cfg)[0] == doctest::Approx(2.1).epsilon(1e-12));
  CHECK(f.count() == 5);
}

TEST_CASE("central differences are exact on quadratics") {
  Rng rng(5);
  BaselineConfig cfg;
  cfg.step = 1e-5;
  for (int i = 0; i < 20; ++i) {
    const Matrix B = rng.normal_matrix(5, 5);
    const Matrix P = B + B.transpose();
    const Vector q = rng.normal_vector(5), x = rng.normal_vector(5);
    FunctionOracle f([&](const Vector& y) { return 0.5 * y.dot(P * y) + q.dot(y); });
    const Vector g = P * x + q;
    CHECK((cfd(f, x, cfg) - g).norm() <= 1e-9 * g.norm() + 1e-9);
  }
}

TEST_CASE("gaussian smoothing on an affine 1D function") {
  FunctionOracle f([](const Vector& x) { return 3.0 * x[0]; });
  const Matrix u = Matrix::Ones(1, 1);
  CHECK(gsg(f, Vector::Zero(1), 0.0, 1e-3, u)[0] == doctest::Approx(3.0));
  CHECK(cgsg(f, Vector::Zero(1), 1e-3, u)[0] == doctest::Approx(3.0));
}

TEST_CASE("gaussian smoothing matches direct evaluation") {
  const Matrix u = gaussian_directions(3, 6, 21);
  const double s = 1e-2;
  auto f = square();
  Vector expect = Vector::Zero(3);
  for (Eigen::Index i = 0; i < u.cols(); ++i) expect += s * u.col(i).squaredNorm() * u.col(i);
  expect /= 6.0;
  CHECK((gsg(f, Vector::Zero(3), 0.0, s, u) - expect).norm() < 1e-12);
}

TEST_CASE("central smoothing on a quadratic is a projection of the gradient") {
  Rng rng(6);
  const Matrix B = rng.normal_matrix(4, 4);
  const Matrix P = B * B.transpose();
  FunctionOracle f([&](const Vector& y) { return y.dot(P * y); });
  const Vector x = rng.normal_vector(4);
  const Matrix u = gaussian_directions(4, 5, 2);
  const Vector expect = u * u.transpose() * (2.0 * P * x) / 5.0;
  CHECK((cgsg(f, x, 1e-3, u) - expect).norm() < 1e-8 * expect.norm());
}

TEST_CASE("adapters use the expected number of calls") {
  BaselineConfig cfg;
  cfg.directions = 3;
  for (auto kind : {BaselineKind::Ffd, BaselineKind::Cfd, BaselineKind::Gsg, BaselineKind::Cgsg}) {
    BaselineEstimator est(kind, cfg);
    auto f = square();
    Dataset d;
    d.append(Vector::Ones(4), 4.0);
    const auto need = est.calls_per_estimate(4);
    CHECK_FALSE(est.estimate(f, d, 0, need - 1).has_value());
    CHECK(f.count() == 0);
    CHECK(est.estimate(f, d, 0, need).has_value());
    CHECK(f.count() == need);
  }
}

TEST_CASE("default step and validation") {
  CHECK(default_fd_step(Vector::Zero(2)) == 1e-6);
  CHECK(default_fd_step(Vector::Constant(1, 10.0)) == doctest::Approx(1e-5));
  BaselineConfig cfg;
  cfg.step = 0.0;
  auto f = square();
  CHECK_THROWS_AS(ffd(f, Vector::Zero(1), cfg), std::invalid_argument);
  BaselineConfig g;
  g.directions = 0;
  CHECK_THROWS_AS(gsg(f, Vector::Zero(1), g), std::invalid_argument);
}
