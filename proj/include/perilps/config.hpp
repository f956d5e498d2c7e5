#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "perilps/boundary.hpp"
#include "perilps/geometry.hpp"
#include "perilps/kernel.hpp"
#include "perilps/solver.hpp"

namespace perilps {

enum class Command { Solve, Converge, Validate };

const char* command_name(Command c);
Command parse_command(const std::string& name);

struct RunConfig {
  Command command{Command::Converge};
  std::string case_name{"nonlinear-static"};
  ExtensionStrategy strategy{ExtensionStrategy::Smooth};
  KernelFamily kernel{KernelFamily::InverseR};
  double nu{0.3};
  GridKind grid{GridKind::Cartesian};
  /// Unset means "mirror iff strategy is linear".
  std::optional<bool> mirror;
  /// Empty means the case's default sequence (converge) or 0.05 (solve).
  std::vector<double> deltas;
  double delta_over_h{4.0};
  double dt{0.01};
  double final_time{0.1};
  std::string out_dir{"out"};
  bool cache{false};
  int threads{0};
  bool quick{false};
  SolveMethod method{SolveMethod::Auto};
  double rel_tolerance{1e-12};
  bool snapshots{false};
  bool export_matrix{false};

  bool use_mirror() const { return mirror.value_or(strategy == ExtensionStrategy::Linear); }
  std::string cache_dir() const { return cache ? out_dir + "/cache" : std::string(); }

  bool operator==(const RunConfig&) const = default;
};

/// Recognized keys, in serialization order.
const std::vector<std::string>& config_keys();

/// Sets one key from its text value. Throws InputError naming the key.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Flat `key = value` text with `#` comments. Unknown keys are rejected.
void apply_config_text(RunConfig& config, const std::string& text);

/// Applies `PERILPS_<KEY>` variables (upper-case key) found by `lookup`.
void apply_environment(RunConfig& config, const std::function<std::optional<std::string>(const std::string&)>& lookup);

/// Cross-field checks: names resolve, numbers positive, 0 < ν < 1/2, linear
/// strategy needs mirror grids, polar grids need the annulus. Throws InputError.
void validate_config(const RunConfig& config);

/// Key = value text that re-parses to the same config (command included).
std::string serialize(const RunConfig& config);

/// Full precedence: defaults < config file < environment < flags. Throws
/// InputError on any usage problem; `help` is set when --help was requested
/// and then holds the help text.
struct ParseOutcome {
  RunConfig config;
  std::optional<std::string> help;
};
ParseOutcome parse_command_line(int argc, const char* const* argv,
                                const std::function<std::optional<std::string>(const std::string&)>& env);

/// Resolved δ sequence for a config (defaults filled from the case).
std::vector<double> resolved_deltas(const RunConfig& config);

}  // namespace perilps
