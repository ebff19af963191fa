#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

// Per-step losses, RMSE, top-q% tail statistics, and cross-seed aggregation.

namespace rolf {

// Result of running one filter on one scenario replica.
struct RunResult {
  std::vector<double> per_step_loss;   // squared position error per step
  std::vector<double> weights;         // w_t in (0,1]
  std::vector<double> fading_factors;  // theta_t >= 1
  double rmse = 0.0;                   // sqrt(mean per-step loss)
  double tail_mean = 0.0;              // mean of the top-q% losses
  std::uint64_t seed = 0;
};

// Sum of squared differences over the masked components. `mask` lists
// component indices (for the CV model, positions are {0, 2}). Throws on
// length mismatch or an out-of-range index.
double per_step_loss(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth,
                     const std::vector<Eigen::Index>& mask);

// Mean of the largest ceil(q * n) losses, q in (0,1]; q = 1 is the plain
// mean. The top block is summed in descending order, so the result depends
// only on the multiset of losses, not their arrangement. Throws on an
// empty sequence or q outside (0,1].
double tail_mean_loss(const std::vector<double>& losses, double q);

struct AggregateStats {
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single run
};

struct RunAggregate {
  AggregateStats rmse;
  AggregateStats tail_mean;
  std::size_t n_runs = 0;
};

// Mean/median/sample-stddev of rmse and tail_mean across runs. Throws on
// empty input.
RunAggregate aggregate_runs(const std::vector<RunResult>& results);

enum class RunMetric { kRmse, kTailMean };

// Fraction of matched seeds on which filter `a` strictly beats filter `b`
// (smaller metric). Requires equal lengths and pairwise-equal seeds.
double win_rate(const std::vector<RunResult>& a, const std::vector<RunResult>& b,
                RunMetric metric);

}  // namespace rolf
