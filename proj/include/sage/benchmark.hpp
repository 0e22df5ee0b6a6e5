#pragma once

#include "sage/baselines.hpp"
#include "sage/optimizer.hpp"
#include "sage/random.hpp"
#include "sage/sage.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sage::bench {

enum class ProblemId { P1, P2, P3, P4, P5 };

std::string_view to_string(ProblemId id);
std::optional<ProblemId> parse_problem(std::string_view name);

/// One instance of a convex test problem:
///   P1  1/2 |y - Qx|^2
///   P2  P1 + lambda |x|_1
///   P3  log sum_i exp((Qx)_i - y_i) + lambda/2 |x|^2
///   P4  log(1 + exp(-y^T Q x)) + lambda |x|_1
///   P5  log(1 + exp(-y^T Q x)) + lambda/2 |x|^2
struct ProblemSpec {
  ProblemId id = ProblemId::P1;
  Eigen::Index dim = 0;
  Matrix Q;
  Vector y;
  Vector x1;
  double lambda = 0.1;
  double kappa = 1.0;

  double value(const Vector& x) const;
  /// Gradient for smooth problems; for P2/P4 the subgradient with sign(0) = 0.
  Vector gradient(const Vector& x) const;
  bool smooth() const { return id != ProblemId::P2 && id != ProblemId::P4; }
};

/// U diag(lambda) U^T with lambda log-spaced on [1, kappa] and U the Q factor
/// of a Gaussian matrix.
Matrix make_spd(Eigen::Index dim, double kappa, Rng& rng);

/// Draw order: Q, then y, then x1.
ProblemSpec make_problem(ProblemId id, Eigen::Index dim, double kappa, Rng& rng, double lambda = 0.1);

/// f(x) + e with e uniform on [-eps_bar, eps_bar], one draw per call.
class NoisyOracle : public EvaluationOracle {
 public:
  NoisyOracle(std::shared_ptr<const ProblemSpec> problem, double eps_bar, std::uint64_t seed);

  const ProblemSpec& problem() const { return *problem_; }
  double eps_bar() const { return eps_bar_; }

 protected:
  double evaluate(const Vector& x) override;

 private:
  std::shared_ptr<const ProblemSpec> problem_;
  double eps_bar_;
  Rng rng_;
};

NoisyOracle noisy_oracle(const ProblemSpec& problem, double eps_bar, std::uint64_t seed);

enum class NoisyMode { Auto, On, Off };

/// Estimator hyperparameters shared by every trial of a run.
struct EstimatorSettings {
  SageConfig sage;
  NoisyMode sage_noisy = NoisyMode::Auto;  // Auto: noisy LP iff eps_bar > 0
  BaselineConfig baseline;
  LineSearchParams line_search;
  double lambda = 0.1;
};

/// Names accepted by make_estimator, in report column order.
const std::vector<std::string>& known_estimators();
/// Estimators without an implementation; their rows are marked unavailable.
bool estimator_unavailable(std::string_view name);

/// Throws std::invalid_argument for unknown names; nullptr for unavailable ones.
std::unique_ptr<GradientEstimator> make_estimator(std::string_view name, const EstimatorSettings& settings,
                                                  double eps_bar, std::uint64_t seed);

enum class SeedStream : std::uint64_t { Problem = 1, Noise = 2, Estimator = 3 };
std::uint64_t trial_seed(std::uint64_t base, std::size_t trial, SeedStream stream);

struct TrialConfig {
  ProblemId problem = ProblemId::P1;
  Eigen::Index dim = 2;
  double kappa = 1.0;
  double eps_bar = 0.0;
  std::size_t budget = 0;  // 0 means 50 * dim
  std::uint64_t base_seed = 0;
  std::string estimator = "sage";
  EstimatorSettings settings;

  std::size_t resolved_budget() const { return budget ? budget : 50 * static_cast<std::size_t>(dim); }
};

struct MetricsRow {
  std::string problem;
  Eigen::Index dim = 0;
  double kappa = 0.0;
  double eps_bar = 0.0;
  std::string estimator;
  std::size_t trial = 0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  std::size_t evals_used = 0;
  std::string status = "ok";
};

struct Metrics {
  double sigma1 = 0.0;
  double sigma2 = 0.0;
};

/// sigma1 = F(N)/F(1), sigma2 = mean_n F(n)/F(1) over n = 1..N, with the
/// trace carried forward at its last value when shorter than N.
Metrics compute_metrics(const std::vector<double>& values, std::size_t budget);

/// Noiseless iterate values after each evaluation of a run.
std::vector<double> iterate_trace(const OptRun& run);

struct TrialResult {
  OptRun run;
  MetricsRow row;
};

TrialResult run_trial(const TrialConfig& cfg, std::size_t trial);

struct SuiteConfig {
  std::vector<ProblemId> problems{ProblemId::P1};
  std::vector<Eigen::Index> dims{10};
  std::vector<double> kappas{1.0};
  std::vector<double> eps_bars{0.0};
  std::vector<std::string> estimators{"ffd", "cfd", "gsg", "cgsg", "sage"};
  std::size_t trials = 10;
  std::uint64_t base_seed = 0;
  std::size_t budget_per_dim = 50;
  EstimatorSettings settings;
  bool keep_histories = false;
};

struct AggregateRow {
  std::string problem;
  Eigen::Index dim = 0;
  double kappa = 0.0;
  double eps_bar = 0.0;
  std::string estimator;
  double sigma1_mean = 0.0;
  double sigma1_std = 0.0;
  double sigma2_mean = 0.0;
  std::size_t n_trials = 0;
};

struct SuiteResult {
  std::vector<MetricsRow> rows;
  std::vector<AggregateRow> aggregates;
  std::vector<OptRun> histories;  // parallel to rows when keep_histories
};

using Progress = std::function<void(std::size_t done, std::size_t total, const MetricsRow& row)>;

/// Cartesian product problem x D x kappa x eps x estimator x trial, in that
/// nesting order. Trials run on `jobs` worker threads; output order does not
/// depend on scheduling.
SuiteResult run_suite(const SuiteConfig& cfg, unsigned jobs = 1, const Progress& progress = {});

/// Mean, sample standard deviation of sigma1 and mean sigma2 over the ok rows
/// of each cell.
std::vector<AggregateRow> aggregate(const std::vector<MetricsRow>& rows);

void write_trials_csv(std::ostream& os, const std::vector<MetricsRow>& rows);
void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows);
void write_history_csv(std::ostream& os, const OptRun& run);

/// Parses the aggregate schema; throws std::runtime_error on mismatch.
std::vector<AggregateRow> read_aggregate_csv(std::istream& is);

}  // namespace sage::bench
