#include "qstack/dataio.hpp"

#include "qstack/core.hpp"
#include "qstack/rng.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qstack {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end)
    throw std::invalid_argument("malformed number '" + s + "' (" + context +
                                ")");
  return v;
}

void SynthConfig::validate() const {
  if (n_models < 2) throw std::invalid_argument("synth config: n_models must be >= 2");
  if (days < 1) throw std::invalid_argument("synth config: days must be >= 1");
  if (!(ar1 > -1.0 && ar1 < 1.0))
    throw std::invalid_argument("synth config: ar1 must be in (-1, 1)");
  if (noise_std < 0.0)
    throw std::invalid_argument("synth config: negative noise std");
  const double amp = daily_amplitude + weekly_amplitude + annual_amplitude;
  if (!(base_level > amp + 6.0 * noise_std))
    throw std::invalid_argument(
        "synth config: base level must exceed amplitude sum + 6 sigma to keep "
        "actuals positive");
  const std::size_t n = static_cast<std::size_t>(n_models);
  if (model_bias.size() != n || model_noise_std.size() != n ||
      heavy_tail.size() != n)
    throw std::invalid_argument(
        "synth config: per-model vectors must have n_models entries");
  for (double s : model_noise_std)
    if (s < 0.0) throw std::invalid_argument("synth config: negative model noise");
}

SynthConfig SynthConfig::defaults(int n_models) {
  SynthConfig cfg;
  cfg.n_models = n_models;
  const double biases[] = {0.004, -0.006, 0.010, -0.003, 0.000, 0.015, -0.012, 0.007};
  const double noises[] = {108.0, 132.0, 192.0, 90.0, 156.0, 228.0, 120.0, 144.0};
  for (int m = 0; m < n_models; ++m) {
    cfg.model_bias.push_back(biases[m % 8]);
    cfg.model_noise_std.push_back(noises[m % 8]);
    cfg.heavy_tail.push_back(m % 4 == 3);
  }
  return cfg;
}

ForecastPanel synth_panel(const SynthConfig& config,
                          const std::string& series_id) {
  config.validate();
  const std::size_t T = static_cast<std::size_t>(config.days) * 24;
  const int n = config.n_models;

  Rng rng(mix_seed(config.seed, hash_string(series_id.c_str())));
  const double two_pi = 6.283185307179586476925286766559;
  const double phase_d = two_pi * rng.uniform();
  const double phase_w = two_pi * rng.uniform();
  const double phase_y = two_pi * rng.uniform();

  ForecastPanel panel;
  panel.series_id = series_id;
  panel.timestamps.resize(T);
  panel.actuals.resize(T);
  panel.base_forecasts.resize(T * static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m)
    panel.model_names.push_back("model_" + std::to_string(m + 1));

  const EpochSeconds t0 = year_start(config.start_year);
  const double stationary =
      config.noise_std / std::sqrt(1.0 - config.ar1 * config.ar1);
  double e = stationary * rng.normal();
  for (std::size_t t = 0; t < T; ++t) {
    panel.timestamps[t] = t0 + static_cast<EpochSeconds>(t) * kHour;
    const double td = static_cast<double>(t);
    e = config.ar1 * e + config.noise_std * rng.normal();
    const double signal =
        config.base_level +
        config.daily_amplitude * std::sin(two_pi * td / 24.0 + phase_d) +
        config.weekly_amplitude * std::sin(two_pi * td / 168.0 + phase_w) +
        config.annual_amplitude * std::sin(two_pi * td / 8760.0 + phase_y);
    panel.actuals[t] = signal + e;
    // Base models see the predictable signal, not the realized noise, so
    // their common error component is irreducible for any combiner.
    for (int m = 0; m < n; ++m) {
      const double eps = config.heavy_tail[static_cast<std::size_t>(m)]
                             ? rng.student_t3_unit()
                             : rng.normal();
      panel.base_forecasts[t * static_cast<std::size_t>(n) +
                           static_cast<std::size_t>(m)] =
          signal * (1.0 + config.model_bias[static_cast<std::size_t>(m)]) +
          config.model_noise_std[static_cast<std::size_t>(m)] * eps;
    }
  }
  panel.validate();
  return panel;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  return in;
}

const char* kMetricColumns =
    "MPQRE,MdPQRE,StdPQRE,MARFE,MdARFE,StdARFE,MPWS,MdPWS,StdPWS,"
    "inPI,belowPI,abovePI,QMAPE,QMdAPE";

void write_report_cells(std::ostream& out, const ProbMetricsReport& r) {
  out << format_double(r.MPQRE) << ',' << format_double(r.MdPQRE) << ','
      << format_double(r.StdPQRE) << ',' << format_double(r.MARFE) << ','
      << format_double(r.MdARFE) << ',' << format_double(r.StdARFE) << ','
      << format_double(r.MPWS) << ',' << format_double(r.MdPWS) << ','
      << format_double(r.StdPWS) << ',' << format_double(r.inPI) << ','
      << format_double(r.belowPI) << ',' << format_double(r.abovePI) << ','
      << format_double(r.QMAPE) << ',' << format_double(r.QMdAPE);
}

ProbMetricsReport parse_report_cells(const std::vector<std::string>& cells,
                                     std::size_t offset,
                                     const std::string& context) {
  ProbMetricsReport r;
  double* fields[] = {&r.MPQRE, &r.MdPQRE, &r.StdPQRE, &r.MARFE, &r.MdARFE,
                      &r.StdARFE, &r.MPWS, &r.MdPWS, &r.StdPWS, &r.inPI,
                      &r.belowPI, &r.abovePI, &r.QMAPE, &r.QMdAPE};
  for (std::size_t i = 0; i < 14; ++i)
    *fields[i] = parse_double(cells.at(offset + i), context);
  return r;
}

json report_to_json(const ProbMetricsReport& r) {
  return json{{"MPQRE", r.MPQRE},   {"MdPQRE", r.MdPQRE},
              {"StdPQRE", r.StdPQRE}, {"MARFE", r.MARFE},
              {"MdARFE", r.MdARFE}, {"StdARFE", r.StdARFE},
              {"MPWS", r.MPWS},     {"MdPWS", r.MdPWS},
              {"StdPWS", r.StdPWS}, {"inPI", r.inPI},
              {"belowPI", r.belowPI}, {"abovePI", r.abovePI},
              {"QMAPE", r.QMAPE},   {"QMdAPE", r.QMdAPE}};
}

}  // namespace

ForecastPanel load_panel(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument(path + ": empty file");
  std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "timestamp" || header[1] != "actual")
    throw std::invalid_argument(
        path + ":1: header must be timestamp,actual,<model names>");

  ForecastPanel panel;
  panel.series_id = fs::path(path).stem().string();
  panel.model_names.assign(header.begin() + 2, header.end());
  const std::size_t n = panel.model_names.size();

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (cells.size() != n + 2)
      throw std::invalid_argument(where + ": expected " +
                                  std::to_string(n + 2) + " cells, got " +
                                  std::to_string(cells.size()));
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (cells[c].empty())
        throw std::invalid_argument(where + ": empty cell in column " +
                                    std::to_string(c + 1));
    EpochSeconds ts;
    try {
      ts = parse_iso8601(cells[0]);
    } catch (const std::exception& e) {
      throw std::invalid_argument(where + ": " + e.what());
    }
    if (!panel.timestamps.empty()) {
      if (ts == panel.timestamps.back())
        throw std::invalid_argument(where + ": duplicate timestamp");
      if (ts != panel.timestamps.back() + kHour)
        throw std::invalid_argument(where + ": timestamps must advance by "
                                            "exactly one hour");
    }
    const double actual = parse_double(cells[1], where);
    if (!(actual > 0.0))
      throw std::invalid_argument(
          where + ": percentage metrics undefined for nonpositive load");
    panel.timestamps.push_back(ts);
    panel.actuals.push_back(actual);
    for (std::size_t m = 0; m < n; ++m)
      panel.base_forecasts.push_back(parse_double(cells[2 + m], where));
  }
  panel.validate();
  return panel;
}

void write_panel(const ForecastPanel& panel, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "timestamp,actual";
  for (const std::string& name : panel.model_names) out << ',' << name;
  out << '\n';
  const std::size_t n = panel.n_models();
  for (std::size_t t = 0; t < panel.size(); ++t) {
    out << format_iso8601(panel.timestamps[t]) << ','
        << format_double(panel.actuals[t]);
    for (std::size_t m = 0; m < n; ++m)
      out << ',' << format_double(panel.forecast(t, m));
    out << '\n';
  }
}

ReportBundle bundle_from_results(
    const std::map<std::string, std::vector<EvaluationResult>>& by_method) {
  ReportBundle bundle;
  const QuantileGrid grid = build_quantile_grid();
  for (const auto& [method, results] : by_method) {
    for (const EvaluationResult& res : results) {
      MetricRow row;
      row.series_id = res.series_id;
      row.method = method;
      row.mode = mode_name(res.config.mode);
      row.k = res.config.mode == Mode::Local ? res.config.k : 0;
      row.q = res.config.forest.min_leaf;
      row.report = res.report;
      bundle.metrics.push_back(row);

      std::vector<double> actuals;
      std::vector<QuantileForecast> qfs;
      for (const HourRecord& r : res.records) {
        actuals.push_back(r.actual);
        qfs.push_back(r.forecast);
      }
      for (std::size_t i = 0; i < grid.size(); ++i)
        bundle.refr.push_back({res.series_id, method, grid.hundredths[i],
                               refr(actuals, qfs, grid, grid.hundredths[i])});
      bundle.results.push_back(res);
    }
  }
  if (by_method.size() >= 2) bundle.dm = compare_methods(by_method);
  return bundle;
}

void write_reports(const ReportBundle& bundle, const std::string& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out = open_out((fs::path(dir) / "metrics.csv").string());
    out << "series,method,mode,k,q," << kMetricColumns << '\n';
    for (const MetricRow& row : bundle.metrics) {
      out << row.series_id << ',' << row.method << ',' << row.mode << ','
          << row.k << ',' << row.q << ',';
      write_report_cells(out, row.report);
      out << '\n';
    }
  }
  {
    std::ofstream out = open_out((fs::path(dir) / "refr.csv").string());
    out << "series,method,alpha_hundredths,refr\n";
    for (const RefrRow& row : bundle.refr)
      out << row.series_id << ',' << row.method << ',' << row.alpha_hundredths
          << ',' << format_double(row.refr) << '\n';
  }
  {
    std::ofstream out = open_out((fs::path(dir) / "sweeps.csv").string());
    out << "series,axis,label," << kMetricColumns << '\n';
    for (const SweepRow& row : bundle.sweeps) {
      out << row.series_id << ',' << row.axis << ',' << row.label << ',';
      write_report_cells(out, row.report);
      out << '\n';
    }
  }
  {
    std::ofstream out = open_out((fs::path(dir) / "dm_wins.csv").string());
    out << "method_a,method_b,wins\n";
    for (std::size_t a = 0; a < bundle.dm.methods.size(); ++a)
      for (std::size_t b = 0; b < bundle.dm.methods.size(); ++b)
        if (a != b)
          out << bundle.dm.methods[a] << ',' << bundle.dm.methods[b] << ','
              << bundle.dm.wins[a][b] << '\n';
  }
  if (!bundle.results.empty()) {
    fs::create_directories(fs::path(dir) / "records");
    const QuantileGrid grid = build_quantile_grid();
    for (const EvaluationResult& res : bundle.results) {
      const std::string name =
          res.series_id + "_" + method_name(res.config.method) + ".csv";
      std::ofstream out =
          open_out((fs::path(dir) / "records" / name).string());
      out << "time_index,timestamp,actual,pqre,pws";
      for (std::size_t i = 0; i < grid.size(); ++i)
        out << ",q" << grid.hundredths[i];
      out << '\n';
      for (const HourRecord& r : res.records) {
        out << r.time_index << ',' << format_iso8601(r.timestamp) << ','
            << format_double(r.actual) << ',' << format_double(r.pqre) << ','
            << format_double(r.pws);
        for (double q : r.forecast.quantiles) out << ',' << format_double(q);
        out << '\n';
      }
    }
  }
  {
    json summary = json::object();
    for (const MetricRow& row : bundle.metrics)
      summary[row.series_id][row.method] = report_to_json(row.report);
    std::ofstream out = open_out((fs::path(dir) / "summary.json").string());
    out << summary.dump(2) << '\n';
  }
}

std::vector<MetricRow> read_metrics_table(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<MetricRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (cells.size() != 19)
      throw std::invalid_argument(where + ": expected 19 cells");
    MetricRow row;
    row.series_id = cells[0];
    row.method = cells[1];
    row.mode = cells[2];
    row.k = static_cast<int>(parse_double(cells[3], where));
    row.q = static_cast<int>(parse_double(cells[4], where));
    row.report = parse_report_cells(cells, 5, where);
    rows.push_back(row);
  }
  return rows;
}

std::vector<RefrRow> read_refr_table(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  std::getline(in, line);
  std::vector<RefrRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (cells.size() != 4)
      throw std::invalid_argument(where + ": expected 4 cells");
    rows.push_back({cells[0], cells[1],
                    static_cast<int>(parse_double(cells[2], where)),
                    parse_double(cells[3], where)});
  }
  return rows;
}

StoredRecords read_records(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  std::getline(in, line);
  StoredRecords rec;
  const std::string stem = fs::path(path).stem().string();
  const auto pos = stem.rfind('_');
  if (pos == std::string::npos)
    throw std::invalid_argument(path + ": expected <series>_<method>.csv");
  rec.series_id = stem.substr(0, pos);
  rec.method = stem.substr(pos + 1);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (cells.size() < 5)
      throw std::invalid_argument(where + ": truncated record row");
    rec.time_indices.push_back(
        static_cast<std::size_t>(parse_double(cells[0], where)));
    rec.pqre.push_back(parse_double(cells[3], where));
  }
  return rec;
}

}  // namespace qstack
