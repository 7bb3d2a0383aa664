#pragma once

#include "qstack/types.hpp"

namespace qstack {

struct CoefficientVector {
  double a0 = 0.0;        // intercept
  std::vector<double> a;  // n slope coefficients
  double alpha = 0.5;
};

// Pinball (quantile) loss, Eq.-style: (y-q)*alpha if y >= q else (y-q)*(alpha-1).
double pinball(double y, double q, double alpha);

// Linear quantile regression: minimizes the summed pinball loss over an
// affine model. Interior-point solve followed by a vertex polish so the
// returned fit is an exact LP vertex (degenerate faces resolve to the
// inf-quantile endpoint). Throws on non-convergence.
CoefficientVector fit_qlr(const TrainingSet& train, double alpha);

double qlr_predict(const CoefficientVector& coeffs, const InputVector& query);

// One fit per grid probability, then crossing repair (when enabled).
QuantileForecast qlr_quantiles(const TrainingSet& train,
                               const InputVector& query,
                               const QuantileGrid& grid,
                               bool rearrange = true);

// Summed pinball loss of an affine model over a training set.
double qlr_objective(const TrainingSet& train, const CoefficientVector& coeffs);

}  // namespace qstack
