#pragma once

#include <map>
#include <string>

#include "qstack/evaluation.hpp"
#include "qstack/types.hpp"

namespace qstack {

// Synthetic triple-seasonality panel configuration: stands in for external
// base-model forecasts over real load data.
struct SynthConfig {
  int n_models = 8;
  int days = 730;
  double base_level = 10000.0;  // MW
  double daily_amplitude = 1500.0;
  double weekly_amplitude = 600.0;
  double annual_amplitude = 2000.0;
  double ar1 = 0.7;          // AR(1) coefficient of the actuals noise
  double noise_std = 200.0;  // innovation std of the actuals noise, MW
  std::vector<double> model_bias;       // fraction per model
  std::vector<double> model_noise_std;  // MW per model
  std::vector<bool> heavy_tail;         // Student-t(3) forecast noise
  int start_year = 2017;
  std::uint64_t seed = 1;

  void validate() const;
  // Benchmark defaults for the given model count.
  static SynthConfig defaults(int n_models = 8);
};

ForecastPanel synth_panel(const SynthConfig& config,
                          const std::string& series_id);

// Panel CSV: header `timestamp,actual,<model_1>,...,<model_n>`, strict hourly
// ISO-8601 UTC rows. Errors carry line numbers.
ForecastPanel load_panel(const std::string& path);
void write_panel(const ForecastPanel& panel, const std::string& path);

// Shortest round-trippable decimal rendering.
std::string format_double(double v);
double parse_double(const std::string& s, const std::string& context);

struct MetricRow {
  std::string series_id;
  std::string method;  // "qrf" etc.
  std::string mode;    // "global"/"local"
  int k = 0;
  int q = 0;
  ProbMetricsReport report;
};

struct RefrRow {
  std::string series_id;
  std::string method;
  int alpha_hundredths = 0;
  double refr = 0.0;
};

struct SweepRow {
  std::string series_id;
  std::string axis;
  std::string label;
  ProbMetricsReport report;
};

struct ReportBundle {
  std::vector<MetricRow> metrics;
  std::vector<RefrRow> refr;
  std::vector<SweepRow> sweeps;
  DMComparison dm;  // empty methods -> no DM table written
  // Per-hour records for each (series, method) pair, for DM re-analysis.
  std::vector<EvaluationResult> results;
};

ReportBundle bundle_from_results(
    const std::map<std::string, std::vector<EvaluationResult>>& by_method);

// Emits metrics.csv, refr.csv, sweeps.csv, dm_wins.csv, summary.json and
// records/<series>_<method>.csv under dir.
void write_reports(const ReportBundle& bundle, const std::string& dir);

// Round-trip readers.
std::vector<MetricRow> read_metrics_table(const std::string& path);
std::vector<RefrRow> read_refr_table(const std::string& path);

struct StoredRecords {
  std::string series_id;
  std::string method;
  std::vector<std::size_t> time_indices;
  std::vector<double> pqre;
};
StoredRecords read_records(const std::string& path);

}  // namespace qstack
