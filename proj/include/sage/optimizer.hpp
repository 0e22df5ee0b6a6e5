#pragma once

#include "sage/gradient_estimator.hpp"

#include <functional>
#include <vector>

namespace sage {

struct LineSearchParams {
  double initial_step = 1.0;
  double backtrack_factor = 0.5;
  double armijo_factor = 1e-6;
  int max_backtracks = 30;
};

struct LineSearchResult {
  Vector x;
  double fx = 0.0;
  std::size_t evaluations = 0;
  bool accepted = false;
  std::vector<Sample> probes;  // every evaluated trial point, in order
};

/// Armijo backtracking along -g: accepts the first t in
/// initial_step * backtrack_factor^i (i = 0..max_backtracks) with
/// f(x - t g) <= fx - armijo_factor * t * |g|^2, never exceeding
/// remaining_budget evaluations. A zero gradient is accepted without
/// evaluating anything.
LineSearchResult backtracking_line_search(EvaluationOracle& oracle, const Vector& x, double fx, const Vector& g,
                                          const LineSearchParams& params, std::size_t remaining_budget);

struct EvaluationRecord {
  std::size_t n = 0;         // 1-based evaluation index
  std::size_t k = 0;         // 1-based index of the iterate current at that time
  double z_observed = 0.0;   // value returned by the oracle
  double f_true = 0.0;       // noiseless value at the evaluated point
  double f_iterate = 0.0;    // noiseless value of the current iterate after this evaluation
};

struct OptRun {
  std::vector<EvaluationRecord> history;
  Vector final_point;
  double final_observed = 0.0;
  std::size_t total_evaluations = 0;
  std::size_t iterations = 0;          // accepted steps
  std::size_t skipped_iterations = 0;  // non-finite gradient estimates
  std::size_t failed_line_searches = 0;
};

using TrueValue = std::function<double(const Vector&)>;

class BudgetExceeded : public std::logic_error {
 public:
  BudgetExceeded() : std::logic_error("evaluation budget exceeded") {}
};

/// Gradient descent with backtracking line search. Every oracle call, from
/// the estimator or the line search, is drawn from the single budget. The
/// iterate and line-search samples go into a dataset shared with the
/// estimator across iterations. `true_value` is used only for the history.
OptRun run_descent(EvaluationOracle& oracle, const Vector& x1, GradientEstimator& estimator, std::size_t budget,
                   const LineSearchParams& params = {}, const TrueValue& true_value = {});

}  // namespace sage
