#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "rolf/filters.hpp"
#include "rolf/metrics.hpp"
#include "rolf/simulate.hpp"

// Experiment orchestration: seeded Monte Carlo comparison of named filter
// configurations on generated scenarios, with CSV/JSON/SVG outputs. The
// mapping from config bytes to output bytes is pure; every filter in a
// replica consumes the identical measurement stream.

namespace rolf {

// Fraction of largest losses evaluated as the tail statistic.
inline constexpr double kTailFraction = 0.05;

// Position components of the (x, vx, y, vy) state, the default loss mask.
inline const std::vector<Eigen::Index> kPositionMask{0, 2};

// Builds a RunResult (losses over the mask, weight/theta traces, rmse,
// top-q% tail mean) from one filter run against the true trajectory.
RunResult build_run_result(const std::vector<StepTrace>& traces, const Trajectory& truth,
                           const std::vector<Eigen::Index>& loss_mask, double tail_q,
                           std::uint64_t seed);

// Declarative filter configuration, serializable to/from the JSON config.
// Lambda/Omega are exposed here as scalar multiples of the identity; code
// driving the library directly may install arbitrary per-step providers.
struct FilterSpec {
  std::string name;
  WeightFnConfig weight;
  bool stf_enabled = false;
  bool stf_recursive = false;
  double rho = kDefaultStfRho;
  double lambda_scale = 1.0;
  double omega_scale = 1.0;

  RobustConfig to_robust_config(Eigen::Index state_dim) const;
};

struct ExperimentConfig {
  ScenarioConfig scenario;
  std::vector<FilterSpec> filters;
  int n_replicas = 20;
  std::string output_dir = "rolf_out";
  bool emit_plots = true;
};

// kf / wolf / rolf on the default scenario.
ExperimentConfig default_experiment_config();

// Stable exit codes of the experiment runner.
inline constexpr int kExitOk = 0;
inline constexpr int kExitParse = 2;       // unreadable or malformed config
inline constexpr int kExitValidation = 3;  // well-formed config, invalid values
inline constexpr int kExitIo = 4;          // output path not writable

struct ConfigParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OutputIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(const std::exception& e);

// Parses a JSON config document (// comments are allowed and ignored).
// Malformed JSON or wrong types throw ConfigParseError; value violations
// throw ConfigValidationError.
ExperimentConfig parse_experiment_config(const std::string& json_text);

// Canonical JSON serialization; parse(experiment_config_to_json(c)) == c.
std::string experiment_config_to_json(const ExperimentConfig& config);

// The documented config schema: a complete default config as commented
// JSON, with units and defaults per field. The emitted text parses back
// into a valid ExperimentConfig.
std::string print_config_schema();

// All runs of one experiment, keyed by filter name, replica-ordered.
struct ExperimentResult {
  std::vector<std::string> filter_names;  // sorted
  std::map<std::string, std::vector<RunResult>> runs;
  std::vector<ScenarioData> scenarios;  // one per replica
  std::string scenario_checksum;        // FNV-1a 64 over all measurement bytes
};

// The pure part: generates every replica, runs every filter on the shared
// measurement stream, computes RunResults. Throws ConfigValidationError on
// invalid configs.
ExperimentResult run_experiment_in_memory(const ExperimentConfig& config);

// Renders the per-step CSV (rows sorted by replica, t, filter name):
//   replica,t,filter,loss,weight,theta,outlier_flag,cum_loss
std::string render_per_step_csv(const ExperimentConfig& config, const ExperimentResult& result);

// Renders the summary JSON: records of {filter, metric, statistic, value,
// n_runs} covering mean/median/stddev per filter and pairwise win rates,
// plus the shared scenario checksum.
std::string render_summary_json(const ExperimentConfig& config, const ExperimentResult& result);

// Per-step loss traces of one replica, log scale, one polyline per filter.
std::string render_loss_trace_svg(const ExperimentConfig& config, const ExperimentResult& result);

// Median top-q% tail loss per filter as a bar chart.
std::string render_tail_loss_svg(const ExperimentConfig& config, const ExperimentResult& result);

// Full pipeline: run, then write per_step.csv, summary.json and (unless
// disabled) loss_trace.svg / tail_loss.svg under config.output_dir.
// Returns kExitOk; throws the error types above on failure.
int run_experiment(const ExperimentConfig& config);

}  // namespace rolf
