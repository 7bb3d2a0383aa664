#include "qstack/types.hpp"

#include <cmath>
#include <stdexcept>

namespace qstack {

void ForecastPanel::validate() const {
  const std::size_t T = timestamps.size();
  const std::size_t n = model_names.size();
  if (T == 0) throw std::invalid_argument("panel is empty");
  if (n == 0) throw std::invalid_argument("panel has no base models");
  if (actuals.size() != T)
    throw std::invalid_argument("actuals length != timestamp count");
  if (base_forecasts.size() != T * n)
    throw std::invalid_argument("forecast matrix shape mismatch");
  for (std::size_t t = 0; t + 1 < T; ++t) {
    if (timestamps[t + 1] != timestamps[t] + kHour)
      throw std::invalid_argument("timestamps not strictly hourly at row " +
                                  std::to_string(t + 1));
  }
  for (std::size_t t = 0; t < T; ++t) {
    if (!(actuals[t] > 0.0))
      throw std::invalid_argument(
          "nonpositive actual at row " + std::to_string(t) +
          ": percentage metrics undefined for nonpositive load");
    if (!std::isfinite(actuals[t]))
      throw std::invalid_argument("non-finite actual at row " +
                                  std::to_string(t));
  }
  for (std::size_t i = 0; i < base_forecasts.size(); ++i) {
    if (!std::isfinite(base_forecasts[i]))
      throw std::invalid_argument("non-finite base forecast at row " +
                                  std::to_string(i / n));
  }
}

int QuantileGrid::index_of(int h) const {
  for (std::size_t i = 0; i < hundredths.size(); ++i)
    if (hundredths[i] == h) return static_cast<int>(i);
  return -1;
}

double QuantileForecast::at(const QuantileGrid& grid, int hundredth) const {
  int i = grid.index_of(hundredth);
  if (i < 0)
    throw std::invalid_argument("probability " + std::to_string(hundredth) +
                                "/100 not on the quantile grid");
  return quantiles[static_cast<std::size_t>(i)];
}

const char* method_name(Method m) {
  switch (m) {
    case Method::QRS: return "qrs";
    case Method::QLR: return "qlr";
    case Method::QRF: return "qrf";
  }
  return "?";
}

const char* mode_name(Mode m) {
  return m == Mode::Global ? "global" : "local";
}

Method parse_method(const std::string& s) {
  if (s == "qrs" || s == "QRS") return Method::QRS;
  if (s == "qlr" || s == "QLR") return Method::QLR;
  if (s == "qrf" || s == "QRF") return Method::QRF;
  throw std::invalid_argument("unknown method '" + s + "'");
}

Mode parse_mode(const std::string& s) {
  if (s == "global") return Mode::Global;
  if (s == "local") return Mode::Local;
  throw std::invalid_argument("unknown mode '" + s + "'");
}

void MethodConfig::validate(std::size_t n_models) const {
  if (mode == Mode::Local && k < 1)
    throw std::invalid_argument("local mode requires k >= 1");
  if (forest.n_trees < 1) throw std::invalid_argument("tree count must be >= 1");
  if (forest.min_leaf < 1) throw std::invalid_argument("min leaf must be >= 1");
  if (forest.features_per_split < 0 ||
      forest.features_per_split > static_cast<int>(n_models))
    throw std::invalid_argument("features per split must be in [1, n]");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
}

}  // namespace qstack
