#include "sage/sage.hpp"

#include "sage/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sage {

RadiusResult optimal_radius(double hessian_norm, double hessian_lipschitz, double noise_bound) {
  if (!(hessian_norm >= 0.0) || !(hessian_lipschitz >= 0.0) || !(noise_bound >= 0.0))
    throw std::invalid_argument("optimal_radius: inputs must be non-negative");
  if (noise_bound == 0.0) return {};
  if (hessian_norm == 0.0 && hessian_lipschitz == 0.0) throw NoFiniteRadius();

  // strictly increasing on mu > 0, negative at 0+
  auto residual = [&](double mu) {
    return hessian_lipschitz * mu * mu * mu / 3.0 + 0.5 * hessian_norm * mu * mu - 2.0 * noise_bound;
  };
  double hi = 1.0;
  while (residual(hi) < 0.0) hi *= 2.0;
  double lo = hi / 2.0;
  while (residual(lo) > 0.0) {
    hi = lo;
    lo /= 2.0;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (residual(mid) < 0.0 ? lo : hi) = mid;
  }
  const double alpha = std::abs(residual(lo)) < std::abs(residual(hi)) ? lo : hi;
  return {alpha, kSlabWidthFactor * slab_half_width(alpha, hessian_norm, hessian_lipschitz, noise_bound)};
}

std::vector<std::size_t> filter_samples(const Dataset& data, std::size_t center, double alpha_star,
                                        std::size_t n_f) {
  if (n_f < 1) throw std::invalid_argument("filter_samples: n_f must be >= 1");
  const Vector& xc = data.at(center).point;
  const double degenerate = degeneracy_threshold(xc);

  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(data.size());
  for (std::size_t j = 0; j < data.size(); ++j) {
    if (j == center) continue;
    const double dist = (data[j].point - xc).norm();
    if (!(dist > degenerate)) continue;
    scored.emplace_back(std::abs(dist - alpha_star), j);
  }
  const std::size_t keep = std::min(n_f, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end());
  std::vector<std::size_t> out(keep);
  for (std::size_t i = 0; i < keep; ++i) out[i] = scored[i].second;
  return out;
}

std::string_view to_string(SageAction a) {
  switch (a) {
    case SageAction::Accept: return "accept";
    case SageAction::Sample: return "sample";
    case SageAction::SampleRandom: return "sample_random";
    case SageAction::BudgetExhausted: return "budget_exhausted";
  }
  return "unknown";
}

namespace {

struct Radius {
  double alpha_star = 0.0;     // drives sample filtering
  double rho_best = 0.0;       // best achievable precision
  double sample_distance = 0;  // step used for the next auxiliary sample
};

Radius current_radius(const SageConfig& cfg, const SageState& st, double alpha_small) {
  Radius r;
  r.sample_distance = alpha_small;
  if (!cfg.noisy_mode) return r;
  const double eps = cfg.noise_bound.value_or(st.noise_bound);
  if (eps == 0.0) return r;
  try {
    const RadiusResult opt = optimal_radius(st.hessian_norm, st.hessian_lipschitz, eps);
    r.alpha_star = opt.alpha_star;
    r.rho_best = opt.rho_star_best;
    r.sample_distance = opt.alpha_star;
  } catch (const NoFiniteRadius&) {
    r.alpha_star = alpha_small;
    r.rho_best = kSlabWidthFactor * 2.0 * eps / alpha_small;
  }
  return r;
}

}  // namespace

SageResult estimate_gradient(EvaluationOracle& oracle, Dataset& data, std::size_t center,
                             const SageConfig& config, SageState* state,
                             std::optional<std::size_t> eval_limit) {
  if (center >= data.size()) throw std::out_of_range("estimate_gradient: center not in dataset");
  if (!(config.rho_target > 0.0)) throw std::invalid_argument("estimate_gradient: rho_target must be > 0");

  SageState local;
  SageState& st = state ? *state : local;
  const std::uint64_t call = st.calls++;

  const Vector xc = data[center].point;
  const auto dim = static_cast<std::size_t>(xc.size());
  const std::size_t n_f = config.filter_size.value_or(4 * dim);
  std::size_t aux_limit = config.max_aux_samples.value_or(2 * dim);
  if (eval_limit) aux_limit = std::min(aux_limit, *eval_limit);
  const double alpha_small = config.alpha_noiseless.value_or(1e-3 * std::max(1.0, xc.norm()));
  const int probes = config.probe_budget.value_or(default_probe_budget(xc.size()));
  Rng direction_rng(mix_seed(config.seed, call, 0x5a6e));

  SageResult result;
  result.gradient = Vector::Zero(xc.size());
  result.solution.gradient = result.gradient;

  for (int iteration = 0;; ++iteration) {
    Radius radius = current_radius(config, st, alpha_small);
    const std::vector<std::size_t> others = filter_samples(data, center, radius.alpha_star, n_f);

    double rho = std::numeric_limits<double>::infinity();
    double threshold = config.rho_target;
    std::optional<Vector> direction;
    if (!others.empty()) {
      const ConstraintSystem sys = assemble_system(data, center, others, config.noisy_mode);
      auto [est, poly] = estimate_gradient_set(
          sys, config.noisy_mode ? config.noise_bound : std::optional<double>{});
      st.hessian_norm = est.hessian_norm;
      st.hessian_lipschitz = est.hessian_lipschitz;
      if (est.noise_bound) st.noise_bound = *est.noise_bound;
      result.gradient = est.gradient;
      result.solution = std::move(est);
      result.set_estimated = true;

      radius = current_radius(config, st, alpha_small);
      DiameterEstimate diam;
      try {
        diam = estimate_diameter(poly, probes, mix_seed(config.seed, call, 1 + iteration));
      } catch (const NumericalFailure& e) {
        throw EstimationFailed(e.what());
      }
      rho = diam.rho;
      direction = std::move(diam.direction);

      threshold = std::max(config.rho_target, config.rho_relative * result.gradient.norm());
      threshold = std::max(threshold, config.stop_rule == StopRule::BestPrecision ? radius.rho_best
                                                                                  : radius.alpha_star);
    }
    result.rho_final = rho;

    if (rho <= threshold) {
      result.trace.push_back({iteration, rho, threshold, SageAction::Accept});
      return result;
    }
    if (result.aux_points_used >= aux_limit) {
      result.budget_exhausted = true;
      result.trace.push_back({iteration, rho, threshold, SageAction::BudgetExhausted});
      return result;
    }

    const SageAction action = direction ? SageAction::Sample : SageAction::SampleRandom;
    const Vector d = direction ? *direction : direction_rng.unit_vector(xc.size());
    const Vector x_new = xc + radius.sample_distance * d;
    const double z = oracle(x_new);
    data.append(x_new, z);
    ++result.aux_points_used;
    result.trace.push_back({iteration, rho, threshold, action});
  }
}

std::optional<Vector> SageEstimator::estimate(EvaluationOracle& oracle, Dataset& data, std::size_t center,
                                              std::size_t budget) {
  try {
    SageResult r = estimate_gradient(oracle, data, center, config_, &state_, budget);
    Vector g = r.gradient;
    const bool solved = r.set_estimated;
    last_ = std::move(r);
    if (!solved) return std::nullopt;
    return g;
  } catch (const EstimationFailed&) {
    last_.reset();
    return Vector::Constant(data[center].point.size(), std::numeric_limits<double>::quiet_NaN());
  }
}

}  // namespace sage
