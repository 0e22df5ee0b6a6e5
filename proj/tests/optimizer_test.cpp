#include <doctest.h>

#include "sage/baselines.hpp"
#include "sage/benchmark.hpp"
#include "sage/optimizer.hpp"

using namespace sage;

TEST_CASE("armijo backtracking on x^2") {
  FunctionOracle f([](const Vector& x) { return x.squaredNorm(); });
  const LineSearchResult r =
      backtracking_line_search(f, Vector::Constant(1, 1.0), 1.0, Vector::Constant(1, 2.0), LineSearchParams{}, 10);
  CHECK(r.accepted);
  CHECK(r.evaluations == 2);
  CHECK(r.x[0] == 0.0);
  CHECK(r.fx == 0.0);
  REQUIRE(r.probes.size() == 2);
  CHECK(r.probes[0].point[0] == -1.0);
}

TEST_CASE("line search corner cases") {
  FunctionOracle f([](const Vector& x) { return x.squaredNorm(); });
  const Vector x = Vector::Constant(1, 1.0);
  const LineSearchResult zero = backtracking_line_search(f, x, 1.0, Vector::Zero(1), {}, 10);
  CHECK(zero.accepted);
  CHECK(zero.evaluations == 0);
  const LineSearchResult starved = backtracking_line_search(f, x, 1.0, Vector::Constant(1, 2.0), {}, 1);
  CHECK_FALSE(starved.accepted);
  CHECK(starved.evaluations == 1);
  // an ascent direction is never accepted
  LineSearchParams p;
  p.max_backtracks = 5;
  const LineSearchResult up = backtracking_line_search(f, x, 1.0, Vector::Constant(1, -2.0), p, 100);
  CHECK_FALSE(up.accepted);
  CHECK(up.evaluations == 6);
  CHECK(f.count() == 7);
}

TEST_CASE("descent with central differences on a small quadratic") {
  Rng rng(bench::trial_seed(0, 0, bench::SeedStream::Problem));
  const bench::ProblemSpec p = bench::make_problem(bench::ProblemId::P1, 2, 10.0, rng);
  FunctionOracle f([&](const Vector& x) { return p.value(x); });
  BaselineEstimator est(BaselineKind::Cfd, BaselineConfig{});
  const OptRun run = run_descent(f, p.x1, est, 100, {}, [&](const Vector& x) { return p.value(x); });
  CHECK(run.total_evaluations <= 100);
  CHECK(f.count() == run.total_evaluations);
  CHECK(run.history.size() == run.total_evaluations);
  CHECK(p.value(run.final_point) < 1e-3 * p.value(p.x1));
}

TEST_CASE("history records and determinism") {
  Rng rng(1);
  const bench::ProblemSpec p = bench::make_problem(bench::ProblemId::P3, 3, 10.0, rng);
  auto once = [&] {
    FunctionOracle f([&](const Vector& x) { return p.value(x); });
    BaselineConfig cfg;
    cfg.seed = 3;
    BaselineEstimator est(BaselineKind::Gsg, cfg);
    return run_descent(f, p.x1, est, 60);
  };
  const OptRun a = once(), b = once();
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].n == i + 1);
    CHECK(a.history[i].z_observed == b.history[i].z_observed);
    CHECK(a.history[i].f_iterate == b.history[i].f_iterate);
    if (i > 0) CHECK(a.history[i].k >= a.history[i - 1].k);
  }
  // iterate values never increase under exact evaluations
  for (std::size_t i = 1; i < a.history.size(); ++i) CHECK(a.history[i].f_iterate <= a.history[i - 1].f_iterate);
  CHECK(a.final_point == b.final_point);
}

TEST_CASE("descent validation") {
  FunctionOracle f([](const Vector& x) { return x.squaredNorm(); });
  BaselineEstimator est(BaselineKind::Ffd, BaselineConfig{});
  CHECK_THROWS_AS(run_descent(f, Vector::Ones(2), est, 0), std::invalid_argument);
  LineSearchParams bad;
  bad.backtrack_factor = 1.5;
  CHECK_THROWS_AS(run_descent(f, Vector::Ones(2), est, 10, bad), std::invalid_argument);
}
