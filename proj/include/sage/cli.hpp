#pragma once

#include "sage/benchmark.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sage::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kEstimationFailed = 3,
  kOutputError = 4,
};

inline constexpr const char* kToolVersion = "sage 0.1.0";
/// Environment variable that sets the bench worker count when --jobs is absent.
inline constexpr const char* kJobsEnv = "SAGE_JOBS";

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Parses a bench config (JSON). A manifest written by `bench` is accepted
/// as well; its embedded config is used. Throws ConfigError naming the field.
bench::SuiteConfig parse_suite_config(const std::string& text);
/// Canonical JSON for a resolved config; parse_suite_config accepts it.
std::string dump_suite_config(const bench::SuiteConfig& cfg);

enum class ReportFormat { Text, Markdown };

/// One sigma1 table per (D, kappa, eps_bar) cell: rows are problems, columns
/// estimators, cells "mean ± std". The lowest mean per row is flagged.
std::string render_report(const std::vector<bench::AggregateRow>& rows, ReportFormat format);

int cmd_estimate(const std::filesystem::path& config, const std::optional<std::filesystem::path>& out,
                 std::ostream& stdout_, std::ostream& stderr_);
int cmd_bench(const std::filesystem::path& config, const std::filesystem::path& out_dir,
              std::optional<unsigned> jobs, std::optional<std::uint64_t> seed, std::ostream& stderr_);
int cmd_report(const std::filesystem::path& in, ReportFormat format, std::ostream& stdout_, std::ostream& stderr_);

/// Full command line dispatch; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& stdout_, std::ostream& stderr_);

}  // namespace sage::cli
