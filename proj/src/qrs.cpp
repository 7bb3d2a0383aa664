#include "qstack/qrs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qstack {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

// Linearly interpolated empirical quantile of sorted data.
double sorted_quantile(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

double KernelDensity::cdf(double z) const {
  double s = 0.0;
  const double inv_h = 1.0 / bandwidth;
  for (double c : centers) s += normal_cdf((z - c) * inv_h);
  return s / static_cast<double>(centers.size());
}

ResidualSet compute_residuals(const Forest& forest, const TrainingSet& train) {
  if (train.size() != forest.n_train())
    throw std::invalid_argument("forest was not fitted on this training set");
  ResidualSet res(train.size());
  for (std::size_t i = 0; i < train.size(); ++i)
    res[i] = train.targets[i] - forest_mean(forest, train.input_row(i));
  return res;
}

KernelDensity kde_fit(const std::vector<double>& samples) {
  const std::size_t n = samples.size();
  if (n == 0) throw std::invalid_argument("empty sample for density fit");

  KernelDensity kde;
  kde.centers = samples;
  auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  kde.min_center = *mn;
  kde.max_center = *mx;

  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;

  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const double iqr =
      sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);

  // Robust spread: min of the positive candidates. A zero IQR with nonzero
  // std (heavily tied center mass) falls back to the std.
  double sigma = sd;
  if (iqr > 0.0 && iqr / 1.349 < sigma) sigma = iqr / 1.349;
  if (sigma <= 0.0) {
    kde.degenerate = true;
    kde.bandwidth = 0.0;
    return kde;
  }
  kde.bandwidth =
      1.06 * sigma * std::pow(static_cast<double>(n), -1.0 / 5.0);
  return kde;
}

double kde_icdf(const KernelDensity& kde, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("probability must be in (0, 1)");
  if (kde.degenerate) return kde.centers.front();

  const double h = kde.bandwidth;
  double lo = kde.min_center - 10.0 * h;
  double hi = kde.max_center + 10.0 * h;
  const double range = kde.max_center - kde.min_center;
  const double tol = 1e-10 * (range + h);
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (kde.cdf(mid) < alpha)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

QuantileForecast qrs_quantiles(double point, const ResidualSet& residuals,
                               const QuantileGrid& grid) {
  if (!std::isfinite(point))
    throw std::invalid_argument("non-finite point forecast");
  if (residuals.empty()) throw std::invalid_argument("empty residual set");

  std::vector<double> shifted(residuals.size());
  for (std::size_t i = 0; i < residuals.size(); ++i)
    shifted[i] = point + residuals[i];
  const KernelDensity kde = kde_fit(shifted);

  QuantileForecast qf;
  qf.quantiles.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    qf.quantiles[i] = kde_icdf(kde, grid.probability(i));
  return qf;
}

}  // namespace qstack
