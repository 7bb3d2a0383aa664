#pragma once

#include "qstack/types.hpp"

namespace qstack {

struct ProbMetricsReport {
  double MPQRE = 0, MdPQRE = 0, StdPQRE = 0;
  double MARFE = 0, MdARFE = 0, StdARFE = 0;
  double MPWS = 0, MdPWS = 0, StdPWS = 0;
  double inPI = 0, belowPI = 0, abovePI = 0;
  double QMAPE = 0, QMdAPE = 0;
};

struct PointMetricsReport {
  double MAPE = 0, MdAPE = 0, MSE = 0, MPE = 0, StdPE = 0;
};

struct DMResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n_obs = 0;
};

struct Aggregate {
  double mean = 0, median = 0, std = 0;
};

// Per-forecast percentage quantile regression error: the pinball loss
// averaged over the grid, normalized by the actual, times 100.
double pqre(double actual, const QuantileForecast& qf,
            const QuantileGrid& grid);

// Mean, median (midpoint rule for even N), sample std (N-1; zero for N=1).
Aggregate aggregate(const std::vector<double>& values);

// Empirical calibration: share of actuals at or below their alpha-quantile.
double refr(const std::vector<double>& actuals,
            const std::vector<QuantileForecast>& qfs, const QuantileGrid& grid,
            int alpha_hundredths);

// |ReFr(alpha) - alpha| for every grid probability.
std::vector<double> arfe_table(const std::vector<double>& actuals,
                               const std::vector<QuantileForecast>& qfs,
                               const QuantileGrid& grid);

// Interval score: width plus 2/alpha times the miss distance.
double winkler(double actual, double q_lower, double q_upper, double alpha);

// Percentage Winkler score of the 90% PI [q(0.05), q(0.95)].
double pws(double actual, const QuantileForecast& qf, const QuantileGrid& grid);

// (inPI, belowPI, abovePI) percentages for the 90% PI, boundaries inclusive.
struct PiCoverage {
  double in_pi = 0, below_pi = 0, above_pi = 0;
};
PiCoverage pi_coverage(const std::vector<double>& actuals,
                       const std::vector<QuantileForecast>& qfs,
                       const QuantileGrid& grid);

PointMetricsReport point_metrics(const std::vector<double>& actuals,
                                 const std::vector<double>& point_preds);

// MAPE/MdAPE with the median quantile standing in for the point forecast.
std::pair<double, double> median_point_metrics(
    const std::vector<double>& actuals,
    const std::vector<QuantileForecast>& qfs, const QuantileGrid& grid);

// Diebold-Mariano on per-forecast loss vectors, normal approximation.
DMResult dm_test(const std::vector<double>& loss_a,
                 const std::vector<double>& loss_b);

// Full probabilistic report for one series of forecasts.
ProbMetricsReport prob_metrics(const std::vector<double>& actuals,
                               const std::vector<QuantileForecast>& qfs,
                               const QuantileGrid& grid);

double normal_cdf(double x);

}  // namespace qstack
