#include "sage/baselines.hpp"

#include "sage/random.hpp"

#include <stdexcept>

namespace sage {

double default_fd_step(const Vector& x) { return 1e-6 * std::max(1.0, x.norm()); }

namespace {

double step_for(const BaselineConfig& cfg, const Vector& x) {
  const double h = cfg.step.value_or(default_fd_step(x));
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be > 0");
  return h;
}

int direction_count(const BaselineConfig& cfg, const Vector& x) {
  const int m = cfg.directions.value_or(static_cast<int>(x.size()));
  if (m < 1) throw std::invalid_argument("smoothed estimators need m >= 1");
  if (!(cfg.smoothing > 0.0)) throw std::invalid_argument("smoothing radius must be > 0");
  return m;
}

}  // namespace

Vector ffd(EvaluationOracle& oracle, const Vector& x, const BaselineConfig& cfg) {
  return ffd(oracle, x, oracle(x), cfg);
}

Vector ffd(EvaluationOracle& oracle, const Vector& x, double fx, const BaselineConfig& cfg) {
  const double h = step_for(cfg, x);
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    probe[d] = x[d] + h;
    g[d] = (oracle(probe) - fx) / h;
    probe[d] = x[d];
  }
  return g;
}

Vector cfd(EvaluationOracle& oracle, const Vector& x, const BaselineConfig& cfg) {
  const double h = step_for(cfg, x);
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    probe[d] = x[d] + h;
    const double up = oracle(probe);
    probe[d] = x[d] - h;
    const double down = oracle(probe);
    probe[d] = x[d];
    g[d] = (up - down) / (2.0 * h);
  }
  return g;
}

Matrix gaussian_directions(Eigen::Index dim, int count, std::uint64_t seed) {
  Rng rng(seed);
  return rng.normal_matrix(dim, count);
}

Vector gsg(EvaluationOracle& oracle, const Vector& x, const BaselineConfig& cfg) {
  const int m = direction_count(cfg, x);
  const double fx = oracle(x);
  return gsg(oracle, x, fx, cfg.smoothing, gaussian_directions(x.size(), m, cfg.seed));
}

Vector gsg(EvaluationOracle& oracle, const Vector& x, double fx, double sigma, const Matrix& directions) {
  Vector g = Vector::Zero(x.size());
  for (Eigen::Index i = 0; i < directions.cols(); ++i) {
    const auto u = directions.col(i);
    g += ((oracle(x + sigma * u) - fx) / sigma) * u;
  }
  return g / static_cast<double>(directions.cols());
}

Vector cgsg(EvaluationOracle& oracle, const Vector& x, const BaselineConfig& cfg) {
  const int m = direction_count(cfg, x);
  return cgsg(oracle, x, cfg.smoothing, gaussian_directions(x.size(), m, cfg.seed));
}

Vector cgsg(EvaluationOracle& oracle, const Vector& x, double sigma, const Matrix& directions) {
  Vector g = Vector::Zero(x.size());
  for (Eigen::Index i = 0; i < directions.cols(); ++i) {
    const auto u = directions.col(i);
    const double up = oracle(x + sigma * u);
    const double down = oracle(x - sigma * u);
    g += ((up - down) / (2.0 * sigma)) * u;
  }
  return g / static_cast<double>(directions.cols());
}

std::string BaselineEstimator::name() const {
  switch (kind_) {
    case BaselineKind::Ffd: return "ffd";
    case BaselineKind::Cfd: return "cfd";
    case BaselineKind::Gsg: return "gsg";
    case BaselineKind::Cgsg: return "cgsg";
  }
  return "unknown";
}

std::size_t BaselineEstimator::calls_per_estimate(Eigen::Index dim) const {
  const auto d = static_cast<std::size_t>(dim);
  const auto m = static_cast<std::size_t>(cfg_.directions.value_or(static_cast<int>(dim)));
  switch (kind_) {
    case BaselineKind::Ffd: return d;
    case BaselineKind::Cfd: return 2 * d;
    case BaselineKind::Gsg: return m;
    case BaselineKind::Cgsg: return 2 * m;
  }
  return 0;
}

std::optional<Vector> BaselineEstimator::estimate(EvaluationOracle& oracle, Dataset& data, std::size_t center,
                                                  std::size_t budget) {
  const Sample& s = data.at(center);
  if (calls_per_estimate(s.point.size()) > budget) return std::nullopt;
  const Vector x = s.point;
  const double fx = s.value;
  const std::uint64_t call = calls_++;
  switch (kind_) {
    case BaselineKind::Ffd: return ffd(oracle, x, fx, cfg_);
    case BaselineKind::Cfd: return cfd(oracle, x, cfg_);
    case BaselineKind::Gsg: {
      const int m = direction_count(cfg_, x);
      return gsg(oracle, x, fx, cfg_.smoothing, gaussian_directions(x.size(), m, mix_seed(cfg_.seed, call)));
    }
    case BaselineKind::Cgsg: {
      const int m = direction_count(cfg_, x);
      return cgsg(oracle, x, cfg_.smoothing, gaussian_directions(x.size(), m, mix_seed(cfg_.seed, call)));
    }
  }
  return std::nullopt;
}

}  // namespace sage
