#pragma once

#include "qstack/types.hpp"

namespace qstack {

// The 99-point probability grid 0.01 .. 0.99.
QuantileGrid build_quantile_grid();

// All pairs with time index in [first_index, query_index - horizon], in time
// order. Throws on an empty window ("insufficient history").
TrainingSet make_training_set(const ForecastPanel& panel,
                              std::size_t query_index, int horizon,
                              std::size_t first_index = 0);

// The k pairs nearest to `query` in Euclidean distance. Ties broken by
// earlier time index; output kept in time order.
TrainingSet knn_select(const TrainingSet& train, const InputVector& query,
                       int k);

// Crossing repair for independently fitted quantiles: sorts ascending.
QuantileForecast rearrange_quantiles(const QuantileForecast& qf);

}  // namespace qstack
