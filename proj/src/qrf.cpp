#include "qstack/qrf.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace qstack {

namespace {

constexpr double kInversionTol = 1e-12;

}  // namespace

double EmpiricalCDF::quantile(double alpha) const {
  for (std::size_t i = 0; i < support.size(); ++i)
    if (cum_weights[i] >= alpha - kInversionTol) return support[i];
  return support.back();
}

EmpiricalCDF qrf_cdf(const Forest& forest, const InputVector& query) {
  const WeightVector w = forest_weights(forest, query);
  const std::vector<double>& y = forest.training_targets;

  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });

  EmpiricalCDF cdf;
  // Compensated accumulation; the inversion tolerance relies on the running
  // sum carrying far less error than 1e-12.
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t idx = order[i];
    const double t = sum + w[idx];
    if (std::abs(sum) >= std::abs(w[idx]))
      comp += (sum - t) + w[idx];
    else
      comp += (w[idx] - t) + sum;
    sum = t;
    if (w[idx] == 0.0 && (cdf.support.empty() || cdf.support.back() != y[idx]))
      continue;  // zero-weight values need no support point of their own
    if (!cdf.support.empty() && cdf.support.back() == y[idx]) {
      cdf.cum_weights.back() = sum + comp;  // duplicate targets merge
    } else {
      cdf.support.push_back(y[idx]);
      cdf.cum_weights.push_back(sum + comp);
    }
  }
  if (cdf.support.empty())
    throw std::logic_error("empirical CDF with no positive-weight support");
  return cdf;
}

QuantileForecast qrf_quantiles(const Forest& forest, const InputVector& query,
                               const QuantileGrid& grid) {
  const EmpiricalCDF cdf = qrf_cdf(forest, query);
  QuantileForecast qf;
  qf.quantiles.resize(grid.size());
  // One sweep: the grid is ascending, so the support scan never backtracks.
  std::size_t pos = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double alpha = grid.probability(i);
    while (pos + 1 < cdf.support.size() &&
           cdf.cum_weights[pos] < alpha - kInversionTol)
      ++pos;
    qf.quantiles[i] = cdf.support[pos];
  }
  return qf;
}

}  // namespace qstack
