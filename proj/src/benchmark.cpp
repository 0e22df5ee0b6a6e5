#include "sage/benchmark.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace sage::bench {

std::string_view to_string(ProblemId id) {
  switch (id) {
    case ProblemId::P1: return "P1";
    case ProblemId::P2: return "P2";
    case ProblemId::P3: return "P3";
    case ProblemId::P4: return "P4";
    case ProblemId::P5: return "P5";
  }
  return "?";
}

std::optional<ProblemId> parse_problem(std::string_view name) {
  for (ProblemId id : {ProblemId::P1, ProblemId::P2, ProblemId::P3, ProblemId::P4, ProblemId::P5})
    if (name == to_string(id)) return id;
  return std::nullopt;
}

namespace {

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }
double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}
Vector sign(const Vector& x) {
  return x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

}  // namespace

double ProblemSpec::value(const Vector& x) const {
  switch (id) {
    case ProblemId::P1: return 0.5 * (y - Q * x).squaredNorm();
    case ProblemId::P2: return 0.5 * (y - Q * x).squaredNorm() + lambda * x.lpNorm<1>();
    case ProblemId::P3: {
      const Vector v = Q * x - y;
      const double m = v.maxCoeff();
      return m + std::log((v.array() - m).exp().sum()) + 0.5 * lambda * x.squaredNorm();
    }
    case ProblemId::P4: return softplus(-y.dot(Q * x)) + lambda * x.lpNorm<1>();
    case ProblemId::P5: return softplus(-y.dot(Q * x)) + 0.5 * lambda * x.squaredNorm();
  }
  return 0.0;
}

Vector ProblemSpec::gradient(const Vector& x) const {
  switch (id) {
    case ProblemId::P1: return Q.transpose() * (Q * x - y);
    case ProblemId::P2: return Q.transpose() * (Q * x - y) + lambda * sign(x);
    case ProblemId::P3: {
      const Vector v = Q * x - y;
      Vector w = (v.array() - v.maxCoeff()).exp();
      w /= w.sum();
      return Q.transpose() * w + lambda * x;
    }
    case ProblemId::P4: return -sigmoid(-y.dot(Q * x)) * (Q.transpose() * y) + lambda * sign(x);
    case ProblemId::P5: return -sigmoid(-y.dot(Q * x)) * (Q.transpose() * y) + lambda * x;
  }
  return Vector::Zero(x.size());
}

Matrix make_spd(Eigen::Index dim, double kappa, Rng& rng) {
  if (dim < 1) throw std::invalid_argument("make_spd: dimension must be >= 1");
  if (!(kappa >= 1.0)) throw std::invalid_argument("make_spd: kappa must be >= 1");
  const Matrix gauss = rng.normal_matrix(dim, dim);
  const Matrix U = Eigen::HouseholderQR<Matrix>(gauss).householderQ();
  Vector spectrum(dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    spectrum[i] = dim == 1 ? 1.0 : std::pow(kappa, static_cast<double>(i) / static_cast<double>(dim - 1));
  Matrix Q = U * spectrum.asDiagonal() * U.transpose();
  return 0.5 * (Q + Q.transpose());
}

ProblemSpec make_problem(ProblemId id, Eigen::Index dim, double kappa, Rng& rng, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("make_problem: lambda must be >= 0");
  ProblemSpec p;
  p.id = id;
  p.dim = dim;
  p.kappa = kappa;
  p.lambda = lambda;
  p.Q = make_spd(dim, kappa, rng);
  p.y = rng.normal_vector(dim);
  p.x1 = rng.normal_vector(dim);
  return p;
}

NoisyOracle::NoisyOracle(std::shared_ptr<const ProblemSpec> problem, double eps_bar, std::uint64_t seed)
    : problem_(std::move(problem)), eps_bar_(eps_bar), rng_(seed) {
  if (!(eps_bar >= 0.0)) throw std::invalid_argument("noisy_oracle: eps_bar must be >= 0");
}

double NoisyOracle::evaluate(const Vector& x) {
  const double noise = rng_.uniform(-eps_bar_, eps_bar_);
  return problem_->value(x) + noise;
}

NoisyOracle noisy_oracle(const ProblemSpec& problem, double eps_bar, std::uint64_t seed) {
  return NoisyOracle(std::make_shared<const ProblemSpec>(problem), eps_bar, seed);
}

const std::vector<std::string>& known_estimators() {
  static const std::vector<std::string> names{"ffd", "cfd", "gsg", "cgsg", "nmxfd", "relizo", "sage"};
  return names;
}

bool estimator_unavailable(std::string_view name) { return name == "nmxfd" || name == "relizo"; }

std::unique_ptr<GradientEstimator> make_estimator(std::string_view name, const EstimatorSettings& settings,
                                                  double eps_bar, std::uint64_t seed) {
  BaselineConfig base = settings.baseline;
  base.seed = seed;
  if (name == "ffd") return std::make_unique<BaselineEstimator>(BaselineKind::Ffd, base);
  if (name == "cfd") return std::make_unique<BaselineEstimator>(BaselineKind::Cfd, base);
  if (name == "gsg") return std::make_unique<BaselineEstimator>(BaselineKind::Gsg, base);
  if (name == "cgsg") return std::make_unique<BaselineEstimator>(BaselineKind::Cgsg, base);
  if (name == "sage") {
    SageConfig cfg = settings.sage;
    cfg.seed = seed;
    switch (settings.sage_noisy) {
      case NoisyMode::Auto: cfg.noisy_mode = eps_bar > 0.0; break;
      case NoisyMode::On: cfg.noisy_mode = true; break;
      case NoisyMode::Off: cfg.noisy_mode = false; break;
    }
    return std::make_unique<SageEstimator>(cfg);
  }
  if (estimator_unavailable(name)) return nullptr;
  throw std::invalid_argument(fmt::format("unknown estimator '{}'", name));
}

std::uint64_t trial_seed(std::uint64_t base, std::size_t trial, SeedStream stream) {
  return mix_seed(base, trial, static_cast<std::uint64_t>(stream));
}

Metrics compute_metrics(const std::vector<double>& values, std::size_t budget) {
  if (values.empty()) throw std::invalid_argument("compute_metrics: empty trace");
  const std::size_t n = std::max(budget, values.size());
  const double first = values.front();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += (i < values.size() ? values[i] : values.back()) / first;
  return {values.back() / first, sum / static_cast<double>(n)};
}

std::vector<double> iterate_trace(const OptRun& run) {
  std::vector<double> v;
  v.reserve(run.history.size());
  for (const auto& r : run.history) v.push_back(r.f_iterate);
  return v;
}

TrialResult run_trial(const TrialConfig& cfg, std::size_t trial) {
  TrialResult out;
  MetricsRow& row = out.row;
  row.problem = std::string(to_string(cfg.problem));
  row.dim = cfg.dim;
  row.kappa = cfg.kappa;
  row.eps_bar = cfg.eps_bar;
  row.estimator = cfg.estimator;
  row.trial = trial;

  const std::size_t budget = cfg.resolved_budget();
  try {
    auto estimator = make_estimator(cfg.estimator, cfg.settings, cfg.eps_bar,
                                    trial_seed(cfg.base_seed, trial, SeedStream::Estimator));
    if (!estimator) {
      row.status = "unavailable";
      row.sigma1 = row.sigma2 = std::numeric_limits<double>::quiet_NaN();
      return out;
    }
    Rng problem_rng(trial_seed(cfg.base_seed, trial, SeedStream::Problem));
    auto problem = std::make_shared<const ProblemSpec>(
        make_problem(cfg.problem, cfg.dim, cfg.kappa, problem_rng, cfg.settings.lambda));
    NoisyOracle oracle(problem, cfg.eps_bar, trial_seed(cfg.base_seed, trial, SeedStream::Noise));
    const TrueValue truth = [&problem](const Vector& x) { return problem->value(x); };

    out.run = run_descent(oracle, problem->x1, *estimator, budget, cfg.settings.line_search, truth);
    const Metrics m = compute_metrics(iterate_trace(out.run), budget);
    row.sigma1 = m.sigma1;
    row.sigma2 = m.sigma2;
    row.evals_used = oracle.count();
    if (oracle.count() > budget) row.status = "budget_exceeded";
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception& e) {
    row.status = fmt::format("failed: {}", e.what());
    row.sigma1 = row.sigma2 = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

std::vector<AggregateRow> aggregate(const std::vector<MetricsRow>& rows) {
  using Key = std::tuple<std::string, Eigen::Index, double, double, std::string>;
  std::vector<Key> order;
  std::map<Key, std::vector<const MetricsRow*>> cells;
  for (const auto& r : rows) {
    Key k{r.problem, r.dim, r.kappa, r.eps_bar, r.estimator};
    auto [it, inserted] = cells.try_emplace(k);
    if (inserted) order.push_back(k);
    if (r.status == "ok") it->second.push_back(&r);
  }
  std::vector<AggregateRow> out;
  for (const Key& k : order) {
    const auto& members = cells[k];
    AggregateRow a;
    std::tie(a.problem, a.dim, a.kappa, a.eps_bar, a.estimator) = k;
    a.n_trials = members.size();
    if (members.empty()) {
      a.sigma1_mean = a.sigma1_std = a.sigma2_mean = std::numeric_limits<double>::quiet_NaN();
    } else {
      double s1 = 0.0, s2 = 0.0;
      for (const auto* r : members) {
        s1 += r->sigma1;
        s2 += r->sigma2;
      }
      const double n = static_cast<double>(members.size());
      a.sigma1_mean = s1 / n;
      a.sigma2_mean = s2 / n;
      double var = 0.0;
      for (const auto* r : members) var += (r->sigma1 - a.sigma1_mean) * (r->sigma1 - a.sigma1_mean);
      a.sigma1_std = members.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    }
    out.push_back(std::move(a));
  }
  return out;
}

SuiteResult run_suite(const SuiteConfig& cfg, unsigned jobs, const Progress& progress) {
  if (cfg.problems.empty() || cfg.dims.empty() || cfg.kappas.empty() || cfg.eps_bars.empty() ||
      cfg.estimators.empty() || cfg.trials == 0)
    throw std::invalid_argument("run_suite: empty grid");
  for (const auto& name : cfg.estimators)
    if (std::find(known_estimators().begin(), known_estimators().end(), name) == known_estimators().end())
      throw std::invalid_argument(fmt::format("unknown estimator '{}'", name));

  struct Job {
    TrialConfig cfg;
    std::size_t trial;
  };
  std::vector<Job> work;
  for (ProblemId p : cfg.problems)
    for (Eigen::Index d : cfg.dims)
      for (double kappa : cfg.kappas)
        for (double eps : cfg.eps_bars)
          for (const auto& est : cfg.estimators)
            for (std::size_t t = 0; t < cfg.trials; ++t) {
              TrialConfig tc;
              tc.problem = p;
              tc.dim = d;
              tc.kappa = kappa;
              tc.eps_bar = eps;
              tc.budget = cfg.budget_per_dim * static_cast<std::size_t>(d);
              tc.base_seed = cfg.base_seed;
              tc.estimator = est;
              tc.settings = cfg.settings;
              work.push_back({std::move(tc), t});
            }

  SuiteResult result;
  result.rows.resize(work.size());
  if (cfg.keep_histories) result.histories.resize(work.size());

  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex collector;
  auto worker = [&] {
    for (std::size_t i = next++; i < work.size(); i = next++) {
      TrialResult tr = run_trial(work[i].cfg, work[i].trial);
      std::lock_guard lock(collector);
      result.rows[i] = tr.row;
      if (cfg.keep_histories) result.histories[i] = std::move(tr.run);
      ++done;
      if (progress) progress(done, work.size(), result.rows[i]);
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(work.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  result.aggregates = aggregate(result.rows);
  return result;
}

namespace {
std::string num(double v) { return fmt::format("{:.17g}", v); }
}  // namespace

void write_trials_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  os << "problem,D,kappa,eps_bar,estimator,trial,sigma1,sigma2,evals_used,status\n";
  for (const auto& r : rows) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    os << r.problem << ',' << r.dim << ',' << num(r.kappa) << ',' << num(r.eps_bar) << ',' << r.estimator << ','
       << r.trial << ',' << num(r.sigma1) << ',' << num(r.sigma2) << ',' << r.evals_used << ',' << status << '\n';
  }
}

void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
  os << "problem,D,kappa,eps_bar,estimator,sigma1_mean,sigma1_std,sigma2_mean,n_trials\n";
  for (const auto& a : rows) {
    os << a.problem << ',' << a.dim << ',' << num(a.kappa) << ',' << num(a.eps_bar) << ',' << a.estimator << ','
       << num(a.sigma1_mean) << ',' << num(a.sigma1_std) << ',' << num(a.sigma2_mean) << ',' << a.n_trials << '\n';
  }
}

void write_history_csv(std::ostream& os, const OptRun& run) {
  os << "n,k,z_observed,f_true,f_iterate\n";
  for (const auto& r : run.history)
    os << r.n << ',' << r.k << ',' << num(r.z_observed) << ',' << num(r.f_true) << ',' << num(r.f_iterate) << '\n';
}

std::vector<AggregateRow> read_aggregate_csv(std::istream& is) {
  static const std::string header = "problem,D,kappa,eps_bar,estimator,sigma1_mean,sigma1_std,sigma2_mean,n_trials";
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("aggregate csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw std::runtime_error("aggregate csv: unexpected header");

  std::vector<AggregateRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 9) throw std::runtime_error(fmt::format("aggregate csv: line {} has {} fields", lineno, f.size()));
    try {
      AggregateRow a;
      a.problem = f[0];
      a.dim = std::stol(f[1]);
      a.kappa = std::stod(f[2]);
      a.eps_bar = std::stod(f[3]);
      a.estimator = f[4];
      a.sigma1_mean = std::stod(f[5]);
      a.sigma1_std = std::stod(f[6]);
      a.sigma2_mean = std::stod(f[7]);
      a.n_trials = std::stoul(f[8]);
      rows.push_back(std::move(a));
    } catch (const std::logic_error&) {
      throw std::runtime_error(fmt::format("aggregate csv: malformed number on line {}", lineno));
    }
  }
  if (rows.empty()) throw std::runtime_error("aggregate csv: no data rows");
  return rows;
}

}  // namespace sage::bench
