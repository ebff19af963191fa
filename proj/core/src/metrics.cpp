#include "rolf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace rolf {

double per_step_loss(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth,
                     const std::vector<Eigen::Index>& mask) {
  if (estimate.size() != truth.size())
    throw std::invalid_argument("per_step_loss: length mismatch");
  double sum = 0.0;
  for (Eigen::Index idx : mask) {
    if (idx < 0 || idx >= estimate.size())
      throw std::invalid_argument("per_step_loss: mask index out of range");
    const double diff = estimate(idx) - truth(idx);
    sum += diff * diff;
  }
  return sum;
}

double tail_mean_loss(const std::vector<double>& losses, double q) {
  if (losses.empty()) throw std::invalid_argument("tail_mean_loss: empty loss sequence");
  if (!(q > 0.0) || q > 1.0) throw std::invalid_argument("tail_mean_loss: q must be in (0,1]");

  const std::size_t n = losses.size();
  const std::size_t count =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::ceil(q * static_cast<double>(n))));

  std::vector<double> work(losses);
  std::nth_element(work.begin(), work.begin() + (count - 1), work.end(), std::greater<>());
  // Canonical (descending) summation order makes the result exactly
  // permutation-invariant.
  std::sort(work.begin(), work.begin() + count, std::greater<>());
  const double sum = std::accumulate(work.begin(), work.begin() + count, 0.0);
  return sum / static_cast<double>(count);
}

namespace {

AggregateStats stats_of(std::vector<double> values) {
  AggregateStats out;
  const std::size_t n = values.size();
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);

  std::sort(values.begin(), values.end());
  out.median = (n % 2 == 1) ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);

  if (n > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(acc / static_cast<double>(n - 1));
  }
  return out;
}

}  // namespace

RunAggregate aggregate_runs(const std::vector<RunResult>& results) {
  if (results.empty()) throw std::invalid_argument("aggregate_runs: empty input");

  std::vector<double> rmse, tail;
  rmse.reserve(results.size());
  tail.reserve(results.size());
  for (const auto& r : results) {
    rmse.push_back(r.rmse);
    tail.push_back(r.tail_mean);
  }

  RunAggregate agg;
  agg.rmse = stats_of(std::move(rmse));
  agg.tail_mean = stats_of(std::move(tail));
  agg.n_runs = results.size();
  return agg;
}

double win_rate(const std::vector<RunResult>& a, const std::vector<RunResult>& b,
                RunMetric metric) {
  if (a.empty() || a.size() != b.size())
    throw std::invalid_argument("win_rate: runs must be nonempty and matched");

  std::size_t wins = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].seed != b[i].seed)
      throw std::invalid_argument("win_rate: runs are not seed-matched");
    const double va = metric == RunMetric::kRmse ? a[i].rmse : a[i].tail_mean;
    const double vb = metric == RunMetric::kRmse ? b[i].rmse : b[i].tail_mean;
    if (va < vb) ++wins;
  }
  return static_cast<double>(wins) / static_cast<double>(a.size());
}

}  // namespace rolf
