#pragma once

#include "qstack/forest.hpp"
#include "qstack/types.hpp"

namespace qstack {

// Weighted empirical conditional CDF of the target given a query pattern.
struct EmpiricalCDF {
  std::vector<double> support;      // sorted distinct target values, MW
  std::vector<double> cum_weights;  // non-decreasing, last == 1

  // Smallest support value with cumulative weight >= alpha - 1e-12.
  double quantile(double alpha) const;
};

EmpiricalCDF qrf_cdf(const Forest& forest, const InputVector& query);

QuantileForecast qrf_quantiles(const Forest& forest, const InputVector& query,
                               const QuantileGrid& grid);

}  // namespace qstack
