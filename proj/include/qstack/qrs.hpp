#pragma once

#include "qstack/forest.hpp"
#include "qstack/types.hpp"

namespace qstack {

// Training residuals of the RF point meta-model, e_tau = y_tau - f(x_tau).
using ResidualSet = std::vector<double>;

// Gaussian-kernel density over sample values with a normal-reference
// bandwidth. Degenerate when the samples carry no spread.
struct KernelDensity {
  std::vector<double> centers;  // MW
  double bandwidth = 0.0;       // MW
  bool degenerate = false;

  double cdf(double z) const;
  double min_center = 0.0;
  double max_center = 0.0;
};

ResidualSet compute_residuals(const Forest& forest, const TrainingSet& train);

KernelDensity kde_fit(const std::vector<double>& samples);

// Inverse CDF by bisection; degenerate densities return the common value.
double kde_icdf(const KernelDensity& kde, double alpha);

// KDE over {point + e_tau}, evaluated at every grid probability.
QuantileForecast qrs_quantiles(double point, const ResidualSet& residuals,
                               const QuantileGrid& grid);

}  // namespace qstack
