#include "qstack/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qstack {

QuantileGrid build_quantile_grid() {
  QuantileGrid grid;
  grid.hundredths.resize(99);
  for (int i = 0; i < 99; ++i) grid.hundredths[i] = i + 1;
  return grid;
}

TrainingSet make_training_set(const ForecastPanel& panel,
                              std::size_t query_index, int horizon,
                              std::size_t first_index) {
  const std::size_t n = panel.n_models();
  if (query_index >= panel.size())
    throw std::invalid_argument("query index out of panel range");
  if (query_index < first_index + static_cast<std::size_t>(horizon))
    throw std::invalid_argument("insufficient history: empty training window");
  const std::size_t last = query_index - static_cast<std::size_t>(horizon);

  TrainingSet ts;
  ts.n_features = n;
  const std::size_t count = last - first_index + 1;
  ts.inputs.reserve(count * n);
  ts.targets.reserve(count);
  ts.time_indices.reserve(count);
  for (std::size_t t = first_index; t <= last; ++t) {
    ts.inputs.insert(ts.inputs.end(), panel.base_forecasts.begin() + t * n,
                     panel.base_forecasts.begin() + (t + 1) * n);
    ts.targets.push_back(panel.actuals[t]);
    ts.time_indices.push_back(t);
  }
  return ts;
}

TrainingSet knn_select(const TrainingSet& train, const InputVector& query,
                       int k) {
  const std::size_t N = train.size();
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (static_cast<std::size_t>(k) > N)
    throw std::invalid_argument("k exceeds available patterns");
  if (query.size() != train.n_features)
    throw std::invalid_argument("query dimension mismatch");

  std::vector<double> dist2(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double* row = train.input_row(i);
    double s = 0.0;
    for (std::size_t f = 0; f < train.n_features; ++f) {
      const double d = row[f] - query[f];
      s += d * d;
    }
    dist2[i] = s;
  }

  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), 0);
  // Equal distances resolve to the earlier time index.
  std::nth_element(order.begin(), order.begin() + (k - 1), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (dist2[a] != dist2[b]) return dist2[a] < dist2[b];
                     return train.time_indices[a] < train.time_indices[b];
                   });
  order.resize(static_cast<std::size_t>(k));
  std::sort(order.begin(), order.end());  // back to time order

  TrainingSet out;
  out.n_features = train.n_features;
  out.inputs.reserve(order.size() * train.n_features);
  out.targets.reserve(order.size());
  out.time_indices.reserve(order.size());
  for (std::size_t i : order) {
    const double* row = train.input_row(i);
    out.inputs.insert(out.inputs.end(), row, row + train.n_features);
    out.targets.push_back(train.targets[i]);
    out.time_indices.push_back(train.time_indices[i]);
  }
  return out;
}

QuantileForecast rearrange_quantiles(const QuantileForecast& qf) {
  for (double v : qf.quantiles)
    if (!std::isfinite(v))
      throw std::invalid_argument("non-finite quantile value");
  QuantileForecast out = qf;
  std::sort(out.quantiles.begin(), out.quantiles.end());
  return out;
}

}  // namespace qstack
