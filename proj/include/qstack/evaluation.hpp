#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "qstack/metrics.hpp"
#include "qstack/types.hpp"

namespace qstack {

struct HourRecord {
  std::size_t time_index = 0;  // 0-based panel index
  EpochSeconds timestamp = 0;
  double actual = 0.0;
  QuantileForecast forecast;
  double pqre = 0.0;
  double pws = 0.0;
  // Leakage audit: range of training time indices used for this hour.
  std::size_t train_index_min = 0;
  std::size_t train_index_max = 0;
  std::size_t train_size = 0;
};

struct EvaluationResult {
  std::string series_id;
  MethodConfig config;
  std::vector<HourRecord> records;
  ProbMetricsReport report;
  double wall_seconds = 0.0;

  // Recomputes the report from the stored records.
  ProbMetricsReport recompute_report(const QuantileGrid& grid) const;
};

struct SweepResult {
  std::string axis;                  // "k" or "q"
  std::vector<std::string> labels;   // grid values; "global" for the k axis tail
  std::vector<ProbMetricsReport> reports;
};

struct DMComparison {
  std::vector<std::string> methods;
  // wins[a][b]: series where method a is significantly more accurate than b.
  std::vector<std::vector<int>> wins;
  // statistic per (series, a, b), row-major over (a, b).
  std::map<std::string, std::vector<double>> statistics;
};

// Evenly spaced test hours over the latter half of the panel's final year.
std::vector<std::size_t> select_test_hours(const ForecastPanel& panel,
                                           std::size_t count);

// First panel index belonging to the final calendar year (the meta-model
// training window start).
std::size_t final_year_start(const ForecastPanel& panel);

// Per-hour retraining over the given test hours. Deterministic for a fixed
// seed at any worker count.
EvaluationResult evaluate_method(const ForecastPanel& panel,
                                 const MethodConfig& config,
                                 const std::vector<std::size_t>& hours,
                                 int jobs = 1);

// One local run per k plus a final global run.
SweepResult sweep_k(const ForecastPanel& panel, const MethodConfig& base,
                    const std::vector<int>& k_grid,
                    const std::vector<std::size_t>& hours, int jobs = 1);

// One global run per min-leaf value.
SweepResult sweep_q(const ForecastPanel& panel, const MethodConfig& base,
                    const std::vector<int>& q_grid,
                    const std::vector<std::size_t>& hours, int jobs = 1);

// DM comparison across methods; input is per-method, per-series results over
// identical test hours. A win is a one-sided rejection at 0.05.
DMComparison compare_methods(
    const std::map<std::string, std::vector<EvaluationResult>>& results);

}  // namespace qstack
