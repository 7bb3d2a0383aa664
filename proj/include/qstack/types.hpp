#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qstack/timeutil.hpp"

namespace qstack {

using InputVector = std::vector<double>;  // n base forecasts for one hour, MW

// Time-indexed actual loads plus an n-column matrix of base-model point
// forecasts. Immutable after validation; indices are 0-based internally.
struct ForecastPanel {
  std::string series_id;
  std::vector<EpochSeconds> timestamps;  // strictly increasing, 1 h step
  std::vector<double> actuals;           // strictly positive, MW
  std::vector<double> base_forecasts;    // row-major T x n
  std::vector<std::string> model_names;

  std::size_t size() const { return timestamps.size(); }
  std::size_t n_models() const { return model_names.size(); }

  double forecast(std::size_t t, std::size_t m) const {
    return base_forecasts[t * model_names.size() + m];
  }
  InputVector input_row(std::size_t t) const {
    const std::size_t n = model_names.size();
    return InputVector(base_forecasts.begin() + t * n,
                       base_forecasts.begin() + (t + 1) * n);
  }

  // Throws std::invalid_argument on any invariant violation.
  void validate() const;
};

// Pairs (base-forecast vector, actual target) over a time-index set.
struct TrainingSet {
  std::vector<double> inputs;  // row-major N x n
  std::vector<double> targets;
  std::vector<std::size_t> time_indices;  // distinct, ascending
  std::size_t n_features = 0;

  std::size_t size() const { return targets.size(); }
  const double* input_row(std::size_t i) const {
    return inputs.data() + i * n_features;
  }
};

// Probabilities stored as integer hundredths so grid membership and file
// round-trips are exact.
struct QuantileGrid {
  std::vector<int> hundredths;  // strictly increasing, each in 1..99

  std::size_t size() const { return hundredths.size(); }
  double probability(std::size_t i) const { return hundredths[i] / 100.0; }
  // Index of the probability equal to h/100, or -1.
  int index_of(int h) const;
};

struct QuantileForecast {
  std::vector<double> quantiles;  // aligned to the grid, MW

  double at(const QuantileGrid& grid, int hundredth) const;
};

enum class Method { QRS, QLR, QRF };
enum class Mode { Global, Local };

const char* method_name(Method m);
const char* mode_name(Mode m);
Method parse_method(const std::string& s);
Mode parse_mode(const std::string& s);

struct ForestParams {
  int n_trees = 100;       // p
  int min_leaf = 1;        // q, minimum bootstrap observations per leaf
  int features_per_split = 0;  // r; 0 means max(1, floor(n/3))
  std::uint64_t seed = 0;

  int resolve_features(std::size_t n) const {
    if (features_per_split > 0) return features_per_split;
    int r = static_cast<int>(n) / 3;
    return r < 1 ? 1 : r;
  }
};

struct MethodConfig {
  Method method = Method::QRF;
  Mode mode = Mode::Global;
  int k = 100;  // neighbor count, local mode only
  ForestParams forest;
  int horizon = 1;  // h, hours
  std::uint64_t seed = 0;
  bool rearrange = true;  // crossing repair, effective for QLR

  void validate(std::size_t n_models) const;
};

}  // namespace qstack
