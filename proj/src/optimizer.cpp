#include "sage/optimizer.hpp"

namespace sage {

LineSearchResult backtracking_line_search(EvaluationOracle& oracle, const Vector& x, double fx, const Vector& g,
                                          const LineSearchParams& params, std::size_t remaining_budget) {
  LineSearchResult out{x, fx, 0, false, {}};
  if (remaining_budget == 0) return out;
  const double gg = g.squaredNorm();
  if (gg == 0.0) {
    out.accepted = true;
    return out;
  }
  double t = params.initial_step;
  for (int i = 0; i <= params.max_backtracks && out.evaluations < remaining_budget; ++i) {
    Vector trial = x - t * g;
    const double ft = oracle(trial);
    ++out.evaluations;
    out.probes.push_back({trial, ft});
    if (ft <= fx - params.armijo_factor * t * gg) {
      out.x = std::move(trial);
      out.fx = ft;
      out.accepted = true;
      return out;
    }
    t *= params.backtrack_factor;
  }
  return out;
}

namespace {

// Enforces the budget and writes one history record per evaluation.
class RecordingOracle : public EvaluationOracle {
 public:
  RecordingOracle(EvaluationOracle& inner, std::size_t budget, const TrueValue& true_value)
      : inner_(inner), budget_(budget), true_value_(true_value) {}

  std::vector<EvaluationRecord> history;
  std::size_t iterate = 1;
  double iterate_value = 0.0;

 protected:
  double evaluate(const Vector& x) override {
    if (count() > budget_) throw BudgetExceeded();
    const double z = inner_(x);
    const double f = true_value_ ? true_value_(x) : z;
    if (history.empty()) iterate_value = f;
    history.push_back({count(), iterate, z, f, iterate_value});
    return z;
  }

 private:
  EvaluationOracle& inner_;
  std::size_t budget_;
  const TrueValue& true_value_;
};

}  // namespace

OptRun run_descent(EvaluationOracle& oracle, const Vector& x1, GradientEstimator& estimator, std::size_t budget,
                   const LineSearchParams& params, const TrueValue& true_value) {
  if (budget < 1) throw std::invalid_argument("run_descent: budget must be >= 1");
  if (!(params.backtrack_factor > 0.0 && params.backtrack_factor < 1.0) || !(params.armijo_factor > 0.0))
    throw std::invalid_argument("run_descent: invalid line-search parameters");

  RecordingOracle rec(oracle, budget, true_value);
  Dataset data;
  Vector x = x1;
  double fx = rec(x);
  std::size_t center = data.append(x, fx);

  OptRun run;
  while (rec.count() < budget) {
    const std::size_t before = rec.count();
    const std::optional<Vector> g = estimator.estimate(rec, data, center, budget - rec.count());
    if (!g) break;
    if (!g->allFinite()) {
      ++run.skipped_iterations;
      if (rec.count() == before) break;
      continue;
    }
    if (rec.count() >= budget) break;

    LineSearchResult ls = backtracking_line_search(rec, x, fx, *g, params, budget - rec.count());
    for (Sample& p : ls.probes) data.append(std::move(p));
    if (ls.accepted && ls.evaluations > 0) {
      x = std::move(ls.x);
      fx = ls.fx;
      center = data.size() - 1;
      ++run.iterations;
      rec.iterate = run.iterations + 1;
      rec.iterate_value = rec.history.back().f_true;
      rec.history.back().k = rec.iterate;
      rec.history.back().f_iterate = rec.iterate_value;
    } else if (!ls.accepted) {
      ++run.failed_line_searches;
    }
    // an iteration that evaluated nothing cannot change anything later either
    if (rec.count() == before) break;
  }

  run.history = std::move(rec.history);
  run.final_point = std::move(x);
  run.final_observed = fx;
  run.total_evaluations = rec.count();
  return run;
}

}  // namespace sage
