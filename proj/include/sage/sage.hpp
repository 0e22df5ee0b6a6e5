#pragma once

#include "sage/gradient_estimator.hpp"
#include "sage/gradient_set.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace sage {

/// Which quantity the diameter is compared against, besides rho_target.
enum class StopRule {
  BestPrecision,   // rho <= max(rho_target, best achievable precision)
  SamplingRadius,  // rho <= max(rho_target, alpha*)
};

struct SageConfig {
  double rho_target = 1e-3;
  /// Additional relative target: accept once rho <= rho_relative * |g|.
  /// Zero disables it.
  double rho_relative = 0.0;
  std::optional<double> alpha_noiseless;        // default 1e-3 * max(1, |x_center|)
  std::optional<std::size_t> filter_size;       // default 4D
  bool noisy_mode = false;
  /// Known noise bound. When set (noisy mode only) the LP's noise unknown is
  /// pinned to it instead of being estimated.
  std::optional<double> noise_bound;
  std::optional<std::size_t> max_aux_samples;   // default 2D
  std::optional<int> probe_budget;              // default 2D + 50
  StopRule stop_rule = StopRule::BestPrecision;
  std::uint64_t seed = 0;
};

class NoFiniteRadius : public std::runtime_error {
 public:
  NoFiniteRadius() : std::runtime_error("no finite optimal radius: H = gamma = 0 with positive noise") {}
};

struct RadiusResult {
  double alpha_star = 0.0;
  double rho_star_best = 0.0;
};

/// Best precision is the full slab width at the optimal radius, i.e. twice
/// the half-width bound.
inline constexpr double kSlabWidthFactor = 2.0;

/// Half-width of a slab between samples at distance mu.
inline double slab_half_width(double mu, double hessian_norm, double hessian_lipschitz, double noise_bound) {
  return 0.5 * hessian_norm * mu + hessian_lipschitz * mu * mu / 6.0 + 2.0 * noise_bound / mu;
}

/// Smallest positive root of gamma/3 mu^3 + H/2 mu^2 - 2 eps = 0, found by
/// bracketing and bisection; (0, 0) when eps = 0.
RadiusResult optimal_radius(double hessian_norm, double hessian_lipschitz, double noise_bound);

/// Up to n_f non-center indices ordered by | |x_j - x_c| - alpha* |, ties by
/// insertion order. Points coinciding with the center are never selected.
std::vector<std::size_t> filter_samples(const Dataset& data, std::size_t center, double alpha_star,
                                        std::size_t n_f);

enum class SageAction { Accept, Sample, SampleRandom, BudgetExhausted };
std::string_view to_string(SageAction a);

struct SageTraceEntry {
  int iteration = 0;
  double rho = 0.0;
  double threshold = 0.0;
  SageAction action = SageAction::Accept;
};

struct SageResult {
  Vector gradient;
  EstimateSolution solution;
  double rho_final = std::numeric_limits<double>::infinity();
  std::size_t aux_points_used = 0;
  bool budget_exhausted = false;
  bool set_estimated = false;  // false when no usable neighbor was ever available
  std::vector<SageTraceEntry> trace;
};

/// Bound estimates carried between calls; they seed the sampling radius of
/// the next call's first pass.
struct SageState {
  double hessian_norm = 0.0;
  double hessian_lipschitz = 0.0;
  double noise_bound = 0.0;
  std::uint64_t calls = 0;
};

/// Set-based estimate at data[center], refined with auxiliary samples that
/// are appended to `data`. At most min(max_aux_samples, eval_limit) oracle
/// calls are made.
SageResult estimate_gradient(EvaluationOracle& oracle, Dataset& data, std::size_t center,
                             const SageConfig& config, SageState* state = nullptr,
                             std::optional<std::size_t> eval_limit = std::nullopt);

class SageEstimator : public GradientEstimator {
 public:
  explicit SageEstimator(SageConfig config) : config_(std::move(config)) {}

  std::string name() const override { return "sage"; }
  std::optional<Vector> estimate(EvaluationOracle& oracle, Dataset& data, std::size_t center,
                                 std::size_t budget) override;

  const SageState& state() const { return state_; }
  const std::optional<SageResult>& last_result() const { return last_; }

 private:
  SageConfig config_;
  SageState state_;
  std::optional<SageResult> last_;
};

}  // namespace sage
