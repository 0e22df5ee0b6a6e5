#include "sage/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace sage::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads fields from one JSON object and rejects keys nobody asked for.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(where_, "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& raw(const std::string& key) { return has(key) ? j_.at(key) : null_; }

  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

  double number(const std::string& key, double fallback) { return has(key) ? as_number(raw(key), path(key)) : fallback; }
  std::optional<double> opt_number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return as_number(raw(key), path(key));
  }
  std::uint64_t count(const std::string& key, std::uint64_t fallback) {
    return has(key) ? as_count(raw(key), path(key)) : fallback;
  }
  std::optional<std::uint64_t> opt_count(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return as_count(raw(key), path(key));
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    if (!raw(key).is_boolean()) fail(path(key), "expected true or false");
    return raw(key).get<bool>();
  }
  std::optional<std::string> opt_string(const std::string& key) {
    if (!has(key)) return std::nullopt;
    if (!raw(key).is_string()) fail(path(key), "expected a string");
    return raw(key).get<std::string>();
  }
  const json& list(const std::string& key) {
    if (!has(key)) fail(path(key), "required list is missing");
    const json& v = raw(key);
    if (!v.is_array() || v.empty()) fail(path(key), "expected a non-empty list");
    return v;
  }

  void finish() const {
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) fail(path(key), "unknown field");
  }

  [[noreturn]] static void fail(const std::string& where, const std::string& msg) {
    throw ConfigError(fmt::format("config field '{}': {}", where.empty() ? "<root>" : where, msg));
  }

  static double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) fail(where, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(where, "expected a finite number");
    return x;
  }
  static std::uint64_t as_count(const json& v, const std::string& where) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
      fail(where, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
  inline static const json null_ = nullptr;
};

std::string index_path(const std::string& base, std::size_t i) { return fmt::format("{}[{}]", base, i); }

std::string_view to_string(StopRule r) {
  return r == StopRule::BestPrecision ? "best_precision" : "sampling_radius";
}

std::string_view to_string(bench::NoisyMode m) {
  switch (m) {
    case bench::NoisyMode::Auto: return "auto";
    case bench::NoisyMode::On: return "on";
    case bench::NoisyMode::Off: return "off";
  }
  return "auto";
}

// The "sage" block. noisy_mode accepts "auto", "on", "off" or a boolean.
std::pair<SageConfig, bench::NoisyMode> parse_sage(const json& j, const std::string& where) {
  SageConfig c;
  bench::NoisyMode mode = bench::NoisyMode::Auto;
  if (j.is_null()) return {c, mode};
  Fields f(j, where);
  c.rho_target = f.number("rho_target", c.rho_target);
  if (!(c.rho_target > 0.0)) Fields::fail(f.path("rho_target"), "must be > 0");
  c.rho_relative = f.number("rho_relative", c.rho_relative);
  if (c.rho_relative < 0.0) Fields::fail(f.path("rho_relative"), "must be >= 0");
  c.alpha_noiseless = f.opt_number("alpha_noiseless");
  if (c.alpha_noiseless && !(*c.alpha_noiseless > 0.0)) Fields::fail(f.path("alpha_noiseless"), "must be > 0");
  if (auto n = f.opt_count("filter_size")) {
    if (*n == 0) Fields::fail(f.path("filter_size"), "must be >= 1");
    c.filter_size = *n;
  }
  if (f.has("noisy_mode")) {
    const json& v = f.raw("noisy_mode");
    if (v.is_boolean()) {
      mode = v.get<bool>() ? bench::NoisyMode::On : bench::NoisyMode::Off;
    } else if (v.is_string() && v == "auto") {
      mode = bench::NoisyMode::Auto;
    } else if (v.is_string() && v == "on") {
      mode = bench::NoisyMode::On;
    } else if (v.is_string() && v == "off") {
      mode = bench::NoisyMode::Off;
    } else {
      Fields::fail(f.path("noisy_mode"), "expected \"auto\", \"on\", \"off\" or a boolean");
    }
  }
  c.noise_bound = f.opt_number("noise_bound");
  if (c.noise_bound && *c.noise_bound < 0.0) Fields::fail(f.path("noise_bound"), "must be >= 0");
  if (auto n = f.opt_count("max_aux_samples")) c.max_aux_samples = *n;
  if (auto n = f.opt_count("probe_budget")) c.probe_budget = static_cast<int>(*n);
  if (auto s = f.opt_string("stop_rule")) {
    if (*s == "best_precision") c.stop_rule = StopRule::BestPrecision;
    else if (*s == "sampling_radius") c.stop_rule = StopRule::SamplingRadius;
    else Fields::fail(f.path("stop_rule"), "expected \"best_precision\" or \"sampling_radius\"");
  }
  c.seed = f.count("seed", c.seed);
  f.finish();
  return {c, mode};
}

template <class T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json sage_json(const SageConfig& c, bench::NoisyMode mode) {
  return json{{"rho_target", c.rho_target},
              {"rho_relative", c.rho_relative},
              {"alpha_noiseless", opt_json(c.alpha_noiseless)},
              {"filter_size", opt_json(c.filter_size)},
              {"noisy_mode", to_string(mode)},
              {"noise_bound", opt_json(c.noise_bound)},
              {"max_aux_samples", opt_json(c.max_aux_samples)},
              {"probe_budget", opt_json(c.probe_budget)},
              {"stop_rule", to_string(c.stop_rule)},
              {"seed", c.seed}};
}

BaselineConfig parse_baseline(const json& j) {
  BaselineConfig c;
  if (j.is_null()) return c;
  Fields f(j, "baseline");
  c.step = f.opt_number("step");
  if (c.step && !(*c.step > 0.0)) Fields::fail("baseline.step", "must be > 0");
  c.smoothing = f.number("smoothing", c.smoothing);
  if (!(c.smoothing > 0.0)) Fields::fail("baseline.smoothing", "must be > 0");
  if (auto n = f.opt_count("directions")) {
    if (*n == 0) Fields::fail("baseline.directions", "must be >= 1");
    c.directions = static_cast<int>(*n);
  }
  c.seed = f.count("seed", c.seed);
  f.finish();
  return c;
}

LineSearchParams parse_line_search(const json& j) {
  LineSearchParams p;
  if (j.is_null()) return p;
  Fields f(j, "line_search");
  p.initial_step = f.number("initial_step", p.initial_step);
  if (!(p.initial_step > 0.0)) Fields::fail("line_search.initial_step", "must be > 0");
  p.backtrack_factor = f.number("backtrack_factor", p.backtrack_factor);
  if (!(p.backtrack_factor > 0.0 && p.backtrack_factor < 1.0))
    Fields::fail("line_search.backtrack_factor", "must lie in (0, 1)");
  p.armijo_factor = f.number("armijo_factor", p.armijo_factor);
  if (!(p.armijo_factor > 0.0 && p.armijo_factor < 1.0))
    Fields::fail("line_search.armijo_factor", "must lie in (0, 1)");
  p.max_backtracks = static_cast<int>(f.count("max_backtracks", static_cast<std::uint64_t>(p.max_backtracks)));
  f.finish();
  return p;
}

json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Trailing newline so written files end cleanly.
std::string pretty(const json& j) { return j.dump(2) + "\n"; }

bool is_manifest(const json& j) { return j.is_object() && j.contains("tool_version") && j.contains("config"); }

}  // namespace

bench::SuiteConfig parse_suite_config(const std::string& text) {
  json root = parse_json_text(text);
  if (is_manifest(root)) root = root.at("config");
  Fields f(root, "");
  bench::SuiteConfig cfg;

  cfg.problems.clear();
  const json& problems = f.list("problems");
  for (std::size_t i = 0; i < problems.size(); ++i) {
    const auto id = problems[i].is_string() ? bench::parse_problem(problems[i].get<std::string>()) : std::nullopt;
    if (!id) Fields::fail(index_path("problems", i), "unknown problem (expected P1..P5)");
    cfg.problems.push_back(*id);
  }
  cfg.dims.clear();
  const json& dims = f.list("dims");
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const auto d = Fields::as_count(dims[i], index_path("dims", i));
    if (d == 0) Fields::fail(index_path("dims", i), "dimension must be >= 1");
    cfg.dims.push_back(static_cast<Eigen::Index>(d));
  }
  cfg.kappas.clear();
  const json& kappas = f.list("kappas");
  for (std::size_t i = 0; i < kappas.size(); ++i) {
    const double k = Fields::as_number(kappas[i], index_path("kappas", i));
    if (!(k >= 1.0)) Fields::fail(index_path("kappas", i), "condition number must be >= 1");
    cfg.kappas.push_back(k);
  }
  cfg.eps_bars.clear();
  const json& eps = f.list("eps_bars");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double e = Fields::as_number(eps[i], index_path("eps_bars", i));
    if (e < 0.0) Fields::fail(index_path("eps_bars", i), "noise level must be >= 0");
    cfg.eps_bars.push_back(e);
  }
  cfg.estimators.clear();
  const auto& known = bench::known_estimators();
  const json& est = f.list("estimators");
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (!est[i].is_string()) Fields::fail(index_path("estimators", i), "expected a string");
    const std::string name = est[i].get<std::string>();
    if (std::find(known.begin(), known.end(), name) == known.end())
      Fields::fail(index_path("estimators", i), "unknown estimator '" + name + "'");
    cfg.estimators.push_back(name);
  }
  cfg.trials = f.count("trials", cfg.trials);
  if (cfg.trials == 0) Fields::fail("trials", "must be >= 1");
  cfg.base_seed = f.count("seed", cfg.base_seed);
  cfg.budget_per_dim = f.count("budget_per_dim", cfg.budget_per_dim);
  if (cfg.budget_per_dim == 0) Fields::fail("budget_per_dim", "must be >= 1");
  cfg.keep_histories = f.boolean("keep_histories", cfg.keep_histories);
  cfg.settings.lambda = f.number("lambda", cfg.settings.lambda);
  if (cfg.settings.lambda < 0.0) Fields::fail("lambda", "must be >= 0");
  if (auto rng = f.opt_string("rng"); rng && *rng != Rng::kAlgorithm)
    Fields::fail("rng", fmt::format("unsupported generator '{}' (this build provides '{}')", *rng, Rng::kAlgorithm));
  std::tie(cfg.settings.sage, cfg.settings.sage_noisy) = parse_sage(f.raw("sage"), "sage");
  cfg.settings.baseline = parse_baseline(f.raw("baseline"));
  cfg.settings.line_search = parse_line_search(f.raw("line_search"));
  f.finish();
  return cfg;
}

namespace {

json suite_json(const bench::SuiteConfig& cfg) {
  json problems = json::array();
  for (auto p : cfg.problems) problems.push_back(bench::to_string(p));
  const auto& b = cfg.settings.baseline;
  const auto& ls = cfg.settings.line_search;
  return json{{"problems", problems},
              {"dims", cfg.dims},
              {"kappas", cfg.kappas},
              {"eps_bars", cfg.eps_bars},
              {"estimators", cfg.estimators},
              {"trials", cfg.trials},
              {"seed", cfg.base_seed},
              {"budget_per_dim", cfg.budget_per_dim},
              {"keep_histories", cfg.keep_histories},
              {"lambda", cfg.settings.lambda},
              {"rng", Rng::kAlgorithm},
              {"sage", sage_json(cfg.settings.sage, cfg.settings.sage_noisy)},
              {"baseline",
               {{"step", opt_json(b.step)},
                {"smoothing", b.smoothing},
                {"directions", opt_json(b.directions)},
                {"seed", b.seed}}},
              {"line_search",
               {{"initial_step", ls.initial_step},
                {"backtrack_factor", ls.backtrack_factor},
                {"armijo_factor", ls.armijo_factor},
                {"max_backtracks", ls.max_backtracks}}}};
}

}  // namespace

std::string dump_suite_config(const bench::SuiteConfig& cfg) { return pretty(suite_json(cfg)); }

// ---- estimate -------------------------------------------------------------

namespace {

// Stand-in oracle for pure-dataset runs, where no evaluations are allowed.
class NoOracle : public EvaluationOracle {
 protected:
  double evaluate(const Vector&) override { throw std::logic_error("no oracle configured"); }
};

Vector as_vector(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) Fields::fail(where, "expected a non-empty list of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = Fields::as_number(v[i], index_path(where, i));
  return out;
}

// Header row names the coordinates; the last column holds the observed value.
std::vector<Sample> read_samples_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read dataset '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset '" + path.string() + "' is empty");
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 2) throw ConfigError("dataset '" + path.string() + "' needs at least one coordinate and a value");
  std::vector<Sample> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<double> fields;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      while (end && (*end == ' ' || *end == '\r')) ++end;
      if (cell.empty() || *end != '\0' || !std::isfinite(v))
        throw ConfigError(fmt::format("dataset '{}' line {}: '{}' is not a finite number", path.string(), lineno, cell));
      fields.push_back(v);
    }
    if (fields.size() != columns)
      throw ConfigError(fmt::format("dataset '{}' line {}: expected {} fields", path.string(), lineno, columns));
    Sample s;
    s.point = Eigen::Map<const Vector>(fields.data(), static_cast<Eigen::Index>(columns - 1));
    s.value = fields.back();
    out.push_back(std::move(s));
  }
  if (out.empty()) throw ConfigError("dataset '" + path.string() + "' has no samples");
  return out;
}

struct EstimateSetup {
  std::unique_ptr<EvaluationOracle> oracle;
  bool has_oracle = false;
  Dataset data;
  std::size_t center = 0;
  SageConfig sage;
};

EstimateSetup parse_estimate_config(const std::string& text, const fs::path& base_dir) {
  const json root = parse_json_text(text);
  Fields f(root, "");
  EstimateSetup s;
  double eps_bar = 0.0;
  Eigen::Index problem_dim = 0;

  if (f.has("problem")) {
    Fields p(f.raw("problem"), "problem");
    const auto name = p.opt_string("name");
    if (!name) Fields::fail("problem.name", "required");
    const auto dim = static_cast<Eigen::Index>(p.count("dim", 2));
    if (dim < 1) Fields::fail("problem.dim", "must be >= 1");
    problem_dim = dim;
    eps_bar = p.number("eps_bar", 0.0);
    if (eps_bar < 0.0) Fields::fail("problem.eps_bar", "must be >= 0");
    const std::uint64_t seed = p.count("seed", 0);
    std::shared_ptr<bench::ProblemSpec> spec;
    if (*name == "sphere") {
      // |x|^2, handy for hand checks
      spec = std::make_shared<bench::ProblemSpec>();
      spec->dim = dim;
      spec->x1 = Vector::Ones(dim);
      p.has("kappa");  // accepted and ignored
      p.has("lambda");
    } else if (auto id = bench::parse_problem(*name)) {
      const double kappa = p.number("kappa", 1.0);
      if (!(kappa >= 1.0)) Fields::fail("problem.kappa", "must be >= 1");
      const double lambda = p.number("lambda", 0.1);
      Rng rng(bench::trial_seed(seed, 0, bench::SeedStream::Problem));
      spec = std::make_shared<bench::ProblemSpec>(bench::make_problem(*id, dim, kappa, rng, lambda));
    } else {
      Fields::fail("problem.name", "unknown problem '" + *name + "' (expected P1..P5 or sphere)");
    }
    p.finish();
    const std::uint64_t noise = bench::trial_seed(seed, 0, bench::SeedStream::Noise);
    if (*name == "sphere") {
      auto rng = std::make_shared<Rng>(noise);
      s.oracle = std::make_unique<FunctionOracle>([rng, eps_bar](const Vector& x) {
        return x.squaredNorm() + (eps_bar > 0.0 ? rng->uniform(-eps_bar, eps_bar) : 0.0);
      });
    } else {
      s.oracle = std::make_unique<bench::NoisyOracle>(spec, eps_bar, noise);
    }
    s.has_oracle = true;

    if (f.has("center_point")) {
      const Vector xc = as_vector(f.raw("center_point"), "center_point");
      if (xc.size() != dim) Fields::fail("center_point", "dimension does not match the problem");
      spec->x1 = xc;
    }
    if (!f.has("samples") && !f.has("dataset")) {
      s.data.append(spec->x1, (*s.oracle)(spec->x1));
      s.center = 0;
    }
  } else {
    s.oracle = std::make_unique<NoOracle>();
  }

  if (f.has("samples") && f.has("dataset")) Fields::fail("samples", "give either samples or dataset, not both");
  std::vector<Sample> samples;
  if (f.has("samples")) {
    const json& list = f.list("samples");
    for (std::size_t i = 0; i < list.size(); ++i) {
      Fields item(list[i], index_path("samples", i));
      if (!item.has("x") || !item.has("z")) Fields::fail(index_path("samples", i), "needs x and z");
      const json& xv = item.raw("x");
      Sample smp;
      smp.point = xv.is_number() ? Vector::Constant(1, Fields::as_number(xv, item.path("x")))
                                 : as_vector(xv, item.path("x"));
      smp.value = Fields::as_number(item.raw("z"), item.path("z"));
      item.finish();
      samples.push_back(std::move(smp));
    }
  } else if (f.has("dataset")) {
    const auto rel = f.opt_string("dataset");
    const fs::path p = fs::path(*rel).is_absolute() ? fs::path(*rel) : base_dir / *rel;
    samples = read_samples_csv(p);
  }
  if (!samples.empty()) {
    try {
      for (auto& smp : samples) s.data.append(std::move(smp));
    } catch (const std::invalid_argument& e) {
      Fields::fail("samples", e.what());
    }
    s.center = f.count("center", 0);
    if (s.center >= s.data.size()) Fields::fail("center", "index outside the dataset");
    if (f.has("center_point")) Fields::fail("center_point", "use center (an index) together with samples");
  } else if (!s.has_oracle) {
    Fields::fail("problem", "config needs a problem, samples or a dataset");
  }
  if (s.has_oracle && s.data.dimension() != problem_dim)
    Fields::fail(f.has("samples") ? "samples" : "dataset", "dimension does not match the problem");

  bench::NoisyMode mode;
  std::tie(s.sage, mode) = parse_sage(f.raw("sage"), "sage");
  s.sage.noisy_mode = mode == bench::NoisyMode::On || (mode == bench::NoisyMode::Auto && eps_bar > 0.0);
  if (!s.has_oracle) s.sage.max_aux_samples = 0;
  f.finish();
  return s;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json estimate_report(const SageResult& r, bool has_oracle) {
  json trace = json::array();
  for (const auto& t : r.trace)
    trace.push_back({{"iteration", t.iteration},
                     {"rho", finite_or_null(t.rho)},
                     {"threshold", t.threshold},
                     {"action", to_string(t.action)}});
  std::string status = "ok";
  if (!r.set_estimated) status = has_oracle ? "no_neighbors" : "pure_dataset_infinite_rho";
  else if (!std::isfinite(r.rho_final)) status = "infinite_rho";
  else if (r.budget_exhausted) status = "budget_exhausted";
  json gradient = json::array();
  for (Eigen::Index i = 0; i < r.gradient.size(); ++i) gradient.push_back(r.gradient[i]);
  return json{{"gradient", r.set_estimated ? gradient : json(nullptr)},
              {"h_norm_est", r.set_estimated ? json(r.solution.hessian_norm) : json(nullptr)},
              {"gamma_est", r.set_estimated ? json(r.solution.hessian_lipschitz) : json(nullptr)},
              {"eps_est", opt_json(r.solution.noise_bound)},
              {"rho", finite_or_null(r.rho_final)},
              {"rho_infinite", !std::isfinite(r.rho_final)},
              {"aux_used", r.aux_points_used},
              {"status", status},
              {"trace", trace}};
}

}  // namespace

int cmd_estimate(const fs::path& config, const std::optional<fs::path>& out, std::ostream& stdout_,
                 std::ostream& stderr_) {
  EstimateSetup setup;
  try {
    setup = parse_estimate_config(read_file(config), config.parent_path());
  } catch (const ConfigError& e) {
    stderr_ << "error: " << e.what() << "\n";
    return kConfigError;
  }
  SageResult result;
  try {
    result = estimate_gradient(*setup.oracle, setup.data, setup.center, setup.sage);
  } catch (const EstimationFailed& e) {
    stderr_ << "error: " << e.what() << "\n";
    return kEstimationFailed;
  } catch (const std::invalid_argument& e) {
    stderr_ << "error: " << e.what() << "\n";
    return kConfigError;
  }
  const std::string text = pretty(estimate_report(result, setup.has_oracle));
  if (out) {
    std::ofstream os(*out, std::ios::binary);
    if (!(os << text) || !os.flush()) {
      stderr_ << "error: cannot write '" << out->string() << "'\n";
      return kOutputError;
    }
  } else {
    stdout_ << text;
  }
  return kOk;
}

// ---- bench ----------------------------------------------------------------

namespace {

unsigned resolve_jobs(std::optional<unsigned> jobs) {
  if (jobs) {
    if (*jobs == 0) throw ConfigError("--jobs must be >= 1");
    return *jobs;
  }
  if (const char* env = std::getenv(kJobsEnv); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw ConfigError(fmt::format("{} must be a positive integer, got '{}'", kJobsEnv, env));
    return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string history_name(std::size_t index) { return fmt::format("trial_{:06}.csv", index); }

}  // namespace

int cmd_bench(const fs::path& config, const fs::path& out_dir, std::optional<unsigned> jobs,
              std::optional<std::uint64_t> seed, std::ostream& stderr_) {
  bench::SuiteConfig cfg;
  unsigned workers = 1;
  try {
    cfg = parse_suite_config(read_file(config));
    if (seed) cfg.base_seed = *seed;
    workers = resolve_jobs(jobs);
  } catch (const ConfigError& e) {
    stderr_ << "error: " << e.what() << "\n";
    return kConfigError;
  }

  // Open every output before the run so an unwritable directory fails fast.
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (cfg.keep_histories && !ec) fs::create_directories(out_dir / "histories", ec);
  std::ofstream trials(out_dir / "trials.csv", std::ios::binary);
  std::ofstream agg(out_dir / "aggregate.csv", std::ios::binary);
  std::ofstream manifest(out_dir / "manifest.json", std::ios::binary);
  if (ec || !trials || !agg || !manifest) {
    stderr_ << "error: cannot write to output directory '" << out_dir.string() << "'\n";
    return kOutputError;
  }

  bench::SuiteResult result;
  try {
    result = bench::run_suite(cfg, workers, [&](std::size_t done, std::size_t total, const bench::MetricsRow& r) {
      stderr_ << fmt::format("[{}/{}] {} D={} kappa={:g} eps={:g} {} trial {}: {}\n", done, total, r.problem, r.dim,
                             r.kappa, r.eps_bar, r.estimator, r.trial, r.status);
    });
  } catch (const std::invalid_argument& e) {
    stderr_ << "error: " << e.what() << "\n";
    return kConfigError;
  }

  bench::write_trials_csv(trials, result.rows);
  bench::write_aggregate_csv(agg, result.aggregates);
  json grid = {{"problems", suite_json(cfg)["problems"]}, {"dims", cfg.dims},         {"kappas", cfg.kappas},
               {"eps_bars", cfg.eps_bars},                {"estimators", cfg.estimators}, {"trials", cfg.trials}};
  const json m = {{"tool_version", kToolVersion},
                  {"config_path", config.string()},
                  {"output_dir", out_dir.string()},
                  {"base_seed", cfg.base_seed},
                  {"grid", grid},
                  {"config", suite_json(cfg)}};
  manifest << pretty(m);
  bool ok = static_cast<bool>(trials.flush()) && static_cast<bool>(agg.flush()) && static_cast<bool>(manifest.flush());
  if (cfg.keep_histories) {
    for (std::size_t i = 0; i < result.histories.size(); ++i) {
      std::ofstream h(out_dir / "histories" / history_name(i), std::ios::binary);
      bench::write_history_csv(h, result.histories[i]);
      ok = ok && static_cast<bool>(h.flush());
    }
  }
  if (!ok) {
    stderr_ << "error: failed writing outputs in '" << out_dir.string() << "'\n";
    return kOutputError;
  }
  std::size_t flagged = 0;
  for (const auto& r : result.rows) flagged += r.status != "ok";
  stderr_ << fmt::format("wrote {} trials ({} flagged) to {}\n", result.rows.size(), flagged, out_dir.string());
  return kOk;
}

// ---- report ---------------------------------------------------------------

std::string render_report(const std::vector<bench::AggregateRow>& rows, ReportFormat format) {
  struct Cell {
    Eigen::Index dim;
    double kappa;
    double eps;
    bool operator==(const Cell&) const = default;
  };
  std::vector<Cell> cells;
  for (const auto& r : rows) {
    const Cell c{r.dim, r.kappa, r.eps_bar};
    if (std::find(cells.begin(), cells.end(), c) == cells.end()) cells.push_back(c);
  }

  const auto& known = bench::known_estimators();
  auto rank = [&](const std::string& e) {
    const auto it = std::find(known.begin(), known.end(), e);
    return static_cast<std::size_t>(it - known.begin());
  };

  std::ostringstream os;
  bool first = true;
  for (const Cell& c : cells) {
    std::vector<std::string> problems, estimators;
    std::map<std::pair<std::string, std::string>, const bench::AggregateRow*> lookup;
    for (const auto& r : rows) {
      if (!(Cell{r.dim, r.kappa, r.eps_bar} == c)) continue;
      if (std::find(problems.begin(), problems.end(), r.problem) == problems.end()) problems.push_back(r.problem);
      if (std::find(estimators.begin(), estimators.end(), r.estimator) == estimators.end())
        estimators.push_back(r.estimator);
      lookup[{r.problem, r.estimator}] = &r;
    }
    std::stable_sort(estimators.begin(), estimators.end(),
                     [&](const std::string& a, const std::string& b) { return rank(a) < rank(b); });

    std::vector<std::vector<std::string>> table;
    std::vector<std::string> header{"problem"};
    for (const auto& e : estimators) header.push_back(e);
    for (const auto& p : problems) {
      std::vector<std::string> line{p};
      double best = std::numeric_limits<double>::infinity();
      for (const auto& e : estimators) {
        const auto it = lookup.find({p, e});
        if (it != lookup.end() && std::isfinite(it->second->sigma1_mean)) best = std::min(best, it->second->sigma1_mean);
      }
      for (const auto& e : estimators) {
        const auto it = lookup.find({p, e});
        if (it == lookup.end() || !std::isfinite(it->second->sigma1_mean)) {
          line.push_back("n/a");
          continue;
        }
        const auto* r = it->second;
        std::string s = fmt::format("{:.2E} ± {:.2E}", r->sigma1_mean, std::isfinite(r->sigma1_std) ? r->sigma1_std : 0.0);
        if (r->sigma1_mean == best) s = format == ReportFormat::Markdown ? "**" + s + "**" : s + " *";
        line.push_back(std::move(s));
      }
      table.push_back(std::move(line));
    }

    if (!first) os << "\n";
    first = false;
    const std::string title = fmt::format("D={} kappa={:.2E} eps_bar={:.2E} (sigma1 mean ± std)", c.dim, c.kappa, c.eps);
    if (format == ReportFormat::Markdown) {
      os << "### " << title << "\n\n";
      auto row = [&](const std::vector<std::string>& v) {
        os << "|";
        for (const auto& s : v) os << " " << s << " |";
        os << "\n";
      };
      row(header);
      os << "|";
      for (std::size_t i = 0; i < header.size(); ++i) os << " --- |";
      os << "\n";
      for (const auto& line : table) row(line);
    } else {
      // width in code points, since "±" is two bytes
      auto width = [](const std::string& s) {
        return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char ch) { return (ch & 0xC0) != 0x80; }));
      };
      std::vector<std::size_t> w(header.size());
      for (std::size_t i = 0; i < header.size(); ++i) {
        w[i] = width(header[i]);
        for (const auto& line : table) w[i] = std::max(w[i], width(line[i]));
      }
      auto row = [&](const std::vector<std::string>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
          os << v[i] << std::string(w[i] - width(v[i]), ' ');
          os << (i + 1 < v.size() ? "  " : "");
        }
        os << "\n";
      };
      os << title << "\n";
      row(header);
      for (const auto& line : table) row(line);
    }
  }
  if (format == ReportFormat::Text && !rows.empty()) os << "\n* lowest mean in the row\n";
  return os.str();
}

int cmd_report(const fs::path& in, ReportFormat format, std::ostream& stdout_, std::ostream& stderr_) {
  std::ifstream is(in);
  if (!is) {
    stderr_ << "error: cannot read '" << in.string() << "'\n";
    return kConfigError;
  }
  std::vector<bench::AggregateRow> rows;
  try {
    rows = bench::read_aggregate_csv(is);
  } catch (const std::exception& e) {
    stderr_ << "error: " << in.string() << ": " << e.what() << "\n";
    return kConfigError;
  }
  stdout_ << render_report(rows, format);
  return kOk;
}

// ---- dispatch -------------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& stdout_, std::ostream& stderr_) {
  CLI::App app{"Set-based zeroth-order gradient estimation and benchmarks"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  std::string est_config, est_out;
  auto* estimate = app.add_subcommand("estimate", "Estimate one gradient and print a JSON report");
  estimate->add_option("--config", est_config, "JSON config file")->required();
  estimate->add_option("--out", est_out, "write the report here instead of stdout");

  std::string bench_config, bench_out;
  std::optional<unsigned> bench_jobs;
  std::optional<std::uint64_t> bench_seed;
  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark grid");
  bench_cmd->add_option("--config", bench_config, "JSON grid config or a previous manifest.json")->required();
  bench_cmd->add_option("--out", bench_out, "output directory")->required();
  bench_cmd->add_option("--jobs", bench_jobs, fmt::format("worker threads (default ${} or all cores)", kJobsEnv));
  bench_cmd->add_option("--seed", bench_seed, "override the base seed");

  std::string report_in, report_format = "text";
  auto* report = app.add_subcommand("report", "Render an aggregate CSV as tables");
  report->add_option("--in", report_in, "aggregate CSV")->required();
  report->add_option("--format", report_format, "text or markdown")
      ->check(CLI::IsMember({"text", "markdown"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream out, err;
    const int code = app.exit(e, out, err);
    stdout_ << out.str();
    stderr_ << err.str();
    return code == 0 ? kOk : kConfigError;
  }

  if (estimate->parsed())
    return cmd_estimate(est_config, est_out.empty() ? std::nullopt : std::optional<fs::path>(est_out), stdout_,
                        stderr_);
  if (bench_cmd->parsed()) return cmd_bench(bench_config, bench_out, bench_jobs, bench_seed, stderr_);
  return cmd_report(report_in, report_format == "markdown" ? ReportFormat::Markdown : ReportFormat::Text, stdout_,
                    stderr_);
}

}  // namespace sage::cli
