#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "biharm/problem.hpp"

namespace biharm::cli {

enum ExitCode : int {
  kOk = 0,
  kConditionsFailed = 1,
  kConfigError = 2,
  kNumericError = 3,
  kHypothesisViolated = 4,
  kNonConvergence = 5,
  kShapeNotFound = 6,
  kCollapse = 7,
  kDivergingNorms = 8,
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Certify gate failed for a command that needs it (and --force was not given).
class ConditionsFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kConfigSchema = "biharm-config/1";

struct RunConfig {
  int n_ambient = 6;
  int d_eff = 1;
  int grid_size = 128;
  std::string a = "0", h = "-1", f;
  double q = 2.5;
  double k_min = 1.0, k_max = 1e16;
  int k_steps = 48;
  int continuation_steps = 8;
  double tol = 1e-9;
  int random_starts = 3;
  std::uint64_t seed = 1;
  int path_intervals = 40;
  int max_iter = 20000;
  std::filesystem::path out = "out";
};

/// Parses and validates a config document; throws ConfigError.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& c);

/// Builds the problem and checks n >= 5, power-of-two grid and h < 0 on the
/// grid; throws ConfigError.
ProblemData make_problem(const RunConfig& c);

/// Shortest round-trip decimal form (std::to_chars).
std::string format_double(double x);
/// Finite numbers as JSON numbers, others as "inf", "-inf" or "nan".
nlohmann::json num(double x);

// Commands. Each writes its outputs under c.out and returns an exit code;
// module errors propagate as exceptions and are mapped by run().
int cmd_certify(const RunConfig& c);
int cmd_mu_curve(const RunConfig& c, bool force);
int cmd_solve_sub(const RunConfig& c, bool force);
int cmd_mountain_pass(const RunConfig& c, bool force);
int cmd_solve_critical(const RunConfig& c, bool force);

/// Maps an in-flight exception to an exit code and writes error.json into
/// `out` when the directory can be created.
int report_error(const std::filesystem::path& out, const std::exception_ptr& e);

/// Full command-line entry point.
int run(int argc, char** argv);

}  // namespace biharm::cli
