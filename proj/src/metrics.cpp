#include "qstack/metrics.hpp"

#include "qstack/qlr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qstack {

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double pqre(double actual, const QuantileForecast& qf,
            const QuantileGrid& grid) {
  if (!(actual > 0.0))
    throw std::invalid_argument("percentage metric undefined for nonpositive actual");
  double s = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    s += pinball(actual, qf.quantiles[i], grid.probability(i));
  return 100.0 * s / (static_cast<double>(grid.size()) * actual);
}

Aggregate aggregate(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n == 0) throw std::invalid_argument("aggregate of empty vector");
  Aggregate a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(n);

  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  a.median = (n % 2 == 1)
                 ? sorted[n / 2]
                 : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

  if (n == 1) {
    a.std = 0.0;
  } else {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.std = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return a;
}

double refr(const std::vector<double>& actuals,
            const std::vector<QuantileForecast>& qfs, const QuantileGrid& grid,
            int alpha_hundredths) {
  if (actuals.size() != qfs.size())
    throw std::invalid_argument("actuals/forecasts length mismatch");
  const int idx = grid.index_of(alpha_hundredths);
  if (idx < 0)
    throw std::invalid_argument("probability not on the quantile grid");
  std::size_t count = 0;
  for (std::size_t i = 0; i < actuals.size(); ++i)
    if (actuals[i] <= qfs[i].quantiles[static_cast<std::size_t>(idx)]) ++count;
  return static_cast<double>(count) / static_cast<double>(actuals.size());
}

std::vector<double> arfe_table(const std::vector<double>& actuals,
                               const std::vector<QuantileForecast>& qfs,
                               const QuantileGrid& grid) {
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double rf = refr(actuals, qfs, grid, grid.hundredths[i]);
    out[i] = std::abs(rf - grid.probability(i));
  }
  return out;
}

double winkler(double actual, double q_lower, double q_upper, double alpha) {
  if (q_lower > q_upper)
    throw std::invalid_argument("interval bounds out of order");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("interval miss rate must be in (0, 1)");
  const double width = q_upper - q_lower;
  if (actual < q_lower) return width + (2.0 / alpha) * (q_lower - actual);
  if (actual > q_upper) return width + (2.0 / alpha) * (actual - q_upper);
  return width;
}

double pws(double actual, const QuantileForecast& qf,
           const QuantileGrid& grid) {
  if (!(actual > 0.0))
    throw std::invalid_argument("percentage metric undefined for nonpositive actual");
  const double ql = qf.at(grid, 5);
  const double qu = qf.at(grid, 95);
  return 100.0 * winkler(actual, ql, qu, 0.1) / actual;
}

PiCoverage pi_coverage(const std::vector<double>& actuals,
                       const std::vector<QuantileForecast>& qfs,
                       const QuantileGrid& grid) {
  if (actuals.size() != qfs.size())
    throw std::invalid_argument("actuals/forecasts length mismatch");
  std::size_t below = 0, above = 0, inside = 0;
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    const double ql = qfs[i].at(grid, 5);
    const double qu = qfs[i].at(grid, 95);
    if (actuals[i] < ql)
      ++below;
    else if (actuals[i] > qu)
      ++above;
    else
      ++inside;
  }
  const double n = static_cast<double>(actuals.size());
  return {100.0 * inside / n, 100.0 * below / n, 100.0 * above / n};
}

PointMetricsReport point_metrics(const std::vector<double>& actuals,
                                 const std::vector<double>& point_preds) {
  if (actuals.size() != point_preds.size() || actuals.empty())
    throw std::invalid_argument("actuals/predictions length mismatch");
  std::vector<double> ape(actuals.size()), pe(actuals.size());
  double mse = 0.0;
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    if (!(actuals[i] > 0.0))
      throw std::invalid_argument("percentage metric undefined for nonpositive actual");
    const double err = actuals[i] - point_preds[i];
    pe[i] = 100.0 * err / actuals[i];  // positive = underforecast
    ape[i] = std::abs(pe[i]);
    mse += err * err;
  }
  const Aggregate a_ape = aggregate(ape);
  const Aggregate a_pe = aggregate(pe);
  PointMetricsReport r;
  r.MAPE = a_ape.mean;
  r.MdAPE = a_ape.median;
  r.MSE = mse / static_cast<double>(actuals.size());
  r.MPE = a_pe.mean;
  r.StdPE = a_pe.std;
  return r;
}

std::pair<double, double> median_point_metrics(
    const std::vector<double>& actuals,
    const std::vector<QuantileForecast>& qfs, const QuantileGrid& grid) {
  std::vector<double> medians(qfs.size());
  for (std::size_t i = 0; i < qfs.size(); ++i) medians[i] = qfs[i].at(grid, 50);
  const PointMetricsReport r = point_metrics(actuals, medians);
  return {r.MAPE, r.MdAPE};
}

DMResult dm_test(const std::vector<double>& loss_a,
                 const std::vector<double>& loss_b) {
  const std::size_t n = loss_a.size();
  if (n != loss_b.size() || n < 2)
    throw std::invalid_argument("loss vectors must have equal length >= 2");
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = loss_a[i] - loss_b[i];
  const Aggregate a = aggregate(d);
  DMResult res;
  res.n_obs = n;
  if (a.std == 0.0) {
    if (a.mean != 0.0)
      throw std::invalid_argument("degenerate loss differential");
    res.statistic = 0.0;
    res.p_value = 1.0;
    return res;
  }
  res.statistic = a.mean / (a.std / std::sqrt(static_cast<double>(n)));
  res.p_value = 2.0 * normal_cdf(-std::abs(res.statistic));
  return res;
}

ProbMetricsReport prob_metrics(const std::vector<double>& actuals,
                               const std::vector<QuantileForecast>& qfs,
                               const QuantileGrid& grid) {
  if (actuals.size() != qfs.size() || actuals.empty())
    throw std::invalid_argument("actuals/forecasts length mismatch");
  std::vector<double> pqres(actuals.size()), pwss(actuals.size());
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    pqres[i] = pqre(actuals[i], qfs[i], grid);
    pwss[i] = pws(actuals[i], qfs[i], grid);
  }
  const Aggregate a_pqre = aggregate(pqres);
  const Aggregate a_pws = aggregate(pwss);
  const Aggregate a_arfe = aggregate(arfe_table(actuals, qfs, grid));
  const PiCoverage cov = pi_coverage(actuals, qfs, grid);
  const auto [qmape, qmdape] = median_point_metrics(actuals, qfs, grid);

  ProbMetricsReport r;
  r.MPQRE = a_pqre.mean;
  r.MdPQRE = a_pqre.median;
  r.StdPQRE = a_pqre.std;
  r.MARFE = a_arfe.mean;
  r.MdARFE = a_arfe.median;
  r.StdARFE = a_arfe.std;
  r.MPWS = a_pws.mean;
  r.MdPWS = a_pws.median;
  r.StdPWS = a_pws.std;
  r.inPI = cov.in_pi;
  r.belowPI = cov.below_pi;
  r.abovePI = cov.above_pi;
  r.QMAPE = qmape;
  r.QMdAPE = qmdape;
  return r;
}

}  // namespace qstack
