#include "qstack/evaluation.hpp"

#include "qstack/core.hpp"
#include "qstack/forest.hpp"
#include "qstack/qlr.hpp"
#include "qstack/qrf.hpp"
#include "qstack/qrs.hpp"
#include "qstack/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <stdexcept>
#include <thread>

namespace qstack {

ProbMetricsReport EvaluationResult::recompute_report(
    const QuantileGrid& grid) const {
  std::vector<double> actuals;
  std::vector<QuantileForecast> qfs;
  actuals.reserve(records.size());
  qfs.reserve(records.size());
  for (const HourRecord& r : records) {
    actuals.push_back(r.actual);
    qfs.push_back(r.forecast);
  }
  return prob_metrics(actuals, qfs, grid);
}

std::size_t final_year_start(const ForecastPanel& panel) {
  const int last_year = year_of(panel.timestamps.back());
  const EpochSeconds boundary = year_start(last_year);
  auto it = std::lower_bound(panel.timestamps.begin(), panel.timestamps.end(),
                             boundary);
  return static_cast<std::size_t>(it - panel.timestamps.begin());
}

std::vector<std::size_t> select_test_hours(const ForecastPanel& panel,
                                           std::size_t count) {
  if (count < 1) throw std::invalid_argument("test hour count must be >= 1");
  if (panel.size() < 2 * count)
    throw std::invalid_argument("panel too short for requested test hours");

  const std::size_t ys = final_year_start(panel);
  const std::size_t year_len = panel.size() - ys;
  const std::size_t S = ys + year_len / 2;
  const std::size_t E = panel.size() - 1;
  if (count == 1) return {S};
  if (E - S < count - 1)
    throw std::invalid_argument("test hours would not be distinct");
  std::vector<std::size_t> hours(count);
  for (std::size_t i = 0; i < count; ++i)
    hours[i] = S + i * (E - S) / (count - 1);
  return hours;
}

namespace {

QuantileForecast forecast_one_hour(const ForecastPanel& panel,
                                   const MethodConfig& config,
                                   std::size_t t, std::uint64_t task_seed,
                                   const QuantileGrid& grid,
                                   std::size_t window_start,
                                   HourRecord& audit) {
  TrainingSet train =
      make_training_set(panel, t, config.horizon, window_start);
  const InputVector query = panel.input_row(t);
  if (config.mode == Mode::Local)
    train = knn_select(train, query, config.k);

  audit.train_index_min = train.time_indices.front();
  audit.train_index_max = train.time_indices.back();
  audit.train_size = train.size();

  ForestParams fp = config.forest;
  fp.seed = task_seed;

  switch (config.method) {
    case Method::QRF: {
      const Forest forest = fit_forest(train, fp);
      return qrf_quantiles(forest, query, grid);
    }
    case Method::QRS: {
      fp.min_leaf = 1;  // fully grown point meta-model
      const Forest forest = fit_forest(train, fp);
      const double point = forest_mean(forest, query);
      const ResidualSet residuals = compute_residuals(forest, train);
      return qrs_quantiles(point, residuals, grid);
    }
    case Method::QLR:
      return qlr_quantiles(train, query, grid, config.rearrange);
  }
  throw std::logic_error("unreachable method");
}

}  // namespace

EvaluationResult evaluate_method(const ForecastPanel& panel,
                                 const MethodConfig& config,
                                 const std::vector<std::size_t>& hours,
                                 int jobs) {
  config.validate(panel.n_models());
  if (hours.empty()) throw std::invalid_argument("no test hours given");
  const std::size_t window_start = final_year_start(panel);
  const std::size_t h = static_cast<std::size_t>(config.horizon);
  for (std::size_t t : hours) {
    if (t < window_start + h)
      throw std::invalid_argument("test hour " + std::to_string(t) +
                                  " precedes the training window");
    if (config.mode == Mode::Local) {
      const std::size_t avail = t - h - window_start + 1;
      if (avail < static_cast<std::size_t>(config.k))
        throw std::invalid_argument(
            "local mode: k=" + std::to_string(config.k) +
            " exceeds " + std::to_string(avail) +
            " available patterns at test hour " + std::to_string(t));
    }
  }

  const auto start = std::chrono::steady_clock::now();
  const QuantileGrid grid = build_quantile_grid();
  const std::uint64_t series_seed =
      mix_seed(config.seed, hash_string(panel.series_id.c_str()));

  EvaluationResult result;
  result.series_id = panel.series_id;
  result.config = config;
  result.records.resize(hours.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= hours.size()) return;
      const std::size_t t = hours[i];
      HourRecord& rec = result.records[i];
      rec.time_index = t;
      rec.timestamp = panel.timestamps[t];
      rec.actual = panel.actuals[t];
      const std::uint64_t task_seed =
          mix_seed(series_seed, static_cast<std::uint64_t>(t));
      rec.forecast =
          forecast_one_hour(panel, config, t, task_seed, grid, window_start,
                            rec);
      rec.pqre = pqre(rec.actual, rec.forecast, grid);
      rec.pws = pws(rec.actual, rec.forecast, grid);
    }
  };

  const int workers = std::max(1, jobs);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  result.report = result.recompute_report(grid);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

SweepResult sweep_k(const ForecastPanel& panel, const MethodConfig& base,
                    const std::vector<int>& k_grid,
                    const std::vector<std::size_t>& hours, int jobs) {
  if (k_grid.empty()) throw std::invalid_argument("empty k grid");
  SweepResult sweep;
  sweep.axis = "k";
  for (int k : k_grid) {
    MethodConfig cfg = base;
    cfg.mode = Mode::Local;
    cfg.k = k;
    sweep.labels.push_back(std::to_string(k));
    sweep.reports.push_back(evaluate_method(panel, cfg, hours, jobs).report);
  }
  MethodConfig cfg = base;
  cfg.mode = Mode::Global;
  sweep.labels.emplace_back("global");
  sweep.reports.push_back(evaluate_method(panel, cfg, hours, jobs).report);
  return sweep;
}

SweepResult sweep_q(const ForecastPanel& panel, const MethodConfig& base,
                    const std::vector<int>& q_grid,
                    const std::vector<std::size_t>& hours, int jobs) {
  if (q_grid.empty()) throw std::invalid_argument("empty q grid");
  SweepResult sweep;
  sweep.axis = "q";
  for (int q : q_grid) {
    MethodConfig cfg = base;
    cfg.forest.min_leaf = q;
    sweep.labels.push_back(std::to_string(q));
    sweep.reports.push_back(evaluate_method(panel, cfg, hours, jobs).report);
  }
  return sweep;
}

DMComparison compare_methods(
    const std::map<std::string, std::vector<EvaluationResult>>& results) {
  DMComparison cmp;
  for (const auto& [name, _] : results) cmp.methods.push_back(name);
  const std::size_t M = cmp.methods.size();
  cmp.wins.assign(M, std::vector<int>(M, 0));
  if (M == 0) return cmp;

  const std::size_t n_series = results.begin()->second.size();
  for (const auto& [name, res] : results)
    if (res.size() != n_series)
      throw std::invalid_argument("method '" + name +
                                  "' covers a different series count");

  for (std::size_t s = 0; s < n_series; ++s) {
    const std::string& sid = results.begin()->second[s].series_id;
    std::vector<const EvaluationResult*> per_method;
    for (const auto& mname : cmp.methods) {
      const EvaluationResult& r = results.at(mname)[s];
      if (r.series_id != sid)
        throw std::invalid_argument("series order mismatch across methods");
      per_method.push_back(&r);
    }
    for (std::size_t a = 1; a < M; ++a) {
      if (per_method[a]->records.size() != per_method[0]->records.size())
        throw std::invalid_argument("test hour mismatch across methods");
      for (std::size_t i = 0; i < per_method[a]->records.size(); ++i)
        if (per_method[a]->records[i].time_index !=
            per_method[0]->records[i].time_index)
          throw std::invalid_argument("test hour mismatch across methods");
    }

    std::vector<double>& stats = cmp.statistics[sid];
    stats.assign(M * M, 0.0);
    for (std::size_t a = 0; a < M; ++a) {
      for (std::size_t b = 0; b < M; ++b) {
        if (a == b) continue;
        std::vector<double> la, lb;
        for (const HourRecord& r : per_method[a]->records)
          la.push_back(r.pqre);
        for (const HourRecord& r : per_method[b]->records)
          lb.push_back(r.pqre);
        const DMResult dm = dm_test(la, lb);
        stats[a * M + b] = dm.statistic;
        // One-sided: a's losses significantly smaller than b's.
        if (normal_cdf(dm.statistic) < 0.05) ++cmp.wins[a][b];
      }
    }
  }
  return cmp;
}

}  // namespace qstack
