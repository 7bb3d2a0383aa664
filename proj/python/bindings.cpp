#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qstack/core.hpp"
#include "qstack/dataio.hpp"
#include "qstack/evaluation.hpp"
#include "qstack/forest.hpp"
#include "qstack/metrics.hpp"
#include "qstack/qlr.hpp"
#include "qstack/qrf.hpp"
#include "qstack/qrs.hpp"

namespace py = pybind11;
using namespace qstack;

namespace {

TrainingSet training_set_from(const std::vector<std::vector<double>>& X,
                              const std::vector<double>& y) {
  if (X.size() != y.size() || X.empty())
    throw std::invalid_argument("X and y must have equal nonzero length");
  TrainingSet ts;
  ts.n_features = X[0].size();
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (X[i].size() != ts.n_features)
      throw std::invalid_argument("ragged input matrix");
    ts.inputs.insert(ts.inputs.end(), X[i].begin(), X[i].end());
    ts.targets.push_back(y[i]);
    ts.time_indices.push_back(i);
  }
  return ts;
}

MethodConfig config_from(const std::string& method, const std::string& mode,
                         int k, int q, int horizon, std::uint64_t seed) {
  MethodConfig cfg;
  cfg.method = parse_method(method);
  cfg.mode = parse_mode(mode);
  cfg.k = k;
  cfg.forest.min_leaf = q;
  cfg.horizon = horizon;
  cfg.seed = seed;
  return cfg;
}

py::dict report_dict(const ProbMetricsReport& r) {
  py::dict d;
  d["MPQRE"] = r.MPQRE;
  d["MdPQRE"] = r.MdPQRE;
  d["StdPQRE"] = r.StdPQRE;
  d["MARFE"] = r.MARFE;
  d["MdARFE"] = r.MdARFE;
  d["StdARFE"] = r.StdARFE;
  d["MPWS"] = r.MPWS;
  d["MdPWS"] = r.MdPWS;
  d["StdPWS"] = r.StdPWS;
  d["inPI"] = r.inPI;
  d["belowPI"] = r.belowPI;
  d["abovePI"] = r.abovePI;
  d["QMAPE"] = r.QMAPE;
  d["QMdAPE"] = r.QMdAPE;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stacking point base forecasts into quantile load forecasts";

  py::class_<ForecastPanel>(m, "Panel")
      .def_readonly("series_id", &ForecastPanel::series_id)
      .def_readonly("timestamps", &ForecastPanel::timestamps)
      .def_readonly("actuals", &ForecastPanel::actuals)
      .def_readonly("model_names", &ForecastPanel::model_names)
      .def("__len__", &ForecastPanel::size)
      .def("n_models", &ForecastPanel::n_models)
      .def("forecast", &ForecastPanel::forecast, py::arg("t"), py::arg("m"))
      .def("input_row", &ForecastPanel::input_row, py::arg("t"));

  m.def("quantile_grid", []() {
    const QuantileGrid grid = build_quantile_grid();
    std::vector<double> probs;
    for (std::size_t i = 0; i < grid.size(); ++i)
      probs.push_back(grid.probability(i));
    return probs;
  });

  m.def(
      "synth_panel",
      [](const std::string& series_id, int days, int n_models,
         std::uint64_t seed, int start_year) {
        SynthConfig cfg = SynthConfig::defaults(n_models);
        cfg.days = days;
        cfg.seed = seed;
        cfg.start_year = start_year;
        return synth_panel(cfg, series_id);
      },
      py::arg("series_id") = "S01", py::arg("days") = 730,
      py::arg("n_models") = 8, py::arg("seed") = 1,
      py::arg("start_year") = 2017);

  m.def("load_panel", &load_panel, py::arg("path"));
  m.def("write_panel", &write_panel, py::arg("panel"), py::arg("path"));

  m.def("pinball", &pinball, py::arg("y"), py::arg("q"), py::arg("alpha"));

  m.def(
      "qrf_quantiles",
      [](const std::vector<std::vector<double>>& X,
         const std::vector<double>& y, const std::vector<double>& query,
         int n_trees, int min_leaf, std::uint64_t seed) {
        const TrainingSet ts = training_set_from(X, y);
        ForestParams params;
        params.n_trees = n_trees;
        params.min_leaf = min_leaf;
        params.seed = seed;
        const Forest forest = fit_forest(ts, params);
        return qrf_quantiles(forest, query, build_quantile_grid()).quantiles;
      },
      py::arg("X"), py::arg("y"), py::arg("query"), py::arg("n_trees") = 100,
      py::arg("min_leaf") = 1, py::arg("seed") = 0);

  m.def(
      "qrs_quantiles",
      [](const std::vector<std::vector<double>>& X,
         const std::vector<double>& y, const std::vector<double>& query,
         int n_trees, std::uint64_t seed) {
        const TrainingSet ts = training_set_from(X, y);
        ForestParams params;
        params.n_trees = n_trees;
        params.min_leaf = 1;
        params.seed = seed;
        const Forest forest = fit_forest(ts, params);
        const double point = forest_mean(forest, query);
        const ResidualSet residuals = compute_residuals(forest, ts);
        return qrs_quantiles(point, residuals, build_quantile_grid())
            .quantiles;
      },
      py::arg("X"), py::arg("y"), py::arg("query"), py::arg("n_trees") = 100,
      py::arg("seed") = 0);

  m.def(
      "qlr_quantiles",
      [](const std::vector<std::vector<double>>& X,
         const std::vector<double>& y, const std::vector<double>& query,
         bool rearrange) {
        const TrainingSet ts = training_set_from(X, y);
        return qlr_quantiles(ts, query, build_quantile_grid(), rearrange)
            .quantiles;
      },
      py::arg("X"), py::arg("y"), py::arg("query"),
      py::arg("rearrange") = true);

  m.def(
      "dm_test",
      [](const std::vector<double>& loss_a, const std::vector<double>& loss_b) {
        const DMResult r = dm_test(loss_a, loss_b);
        return py::make_tuple(r.statistic, r.p_value);
      },
      py::arg("loss_a"), py::arg("loss_b"));

  m.def(
      "evaluate",
      [](const ForecastPanel& panel, const std::string& method,
         const std::string& mode, int k, int q, int hours, int horizon,
         std::uint64_t seed, int jobs) {
        const MethodConfig cfg = config_from(method, mode, k, q, horizon,
                                             seed);
        const auto test_hours =
            select_test_hours(panel, static_cast<std::size_t>(hours));
        const EvaluationResult res =
            evaluate_method(panel, cfg, test_hours, jobs);
        py::dict out;
        out["series_id"] = res.series_id;
        out["report"] = report_dict(res.report);
        std::vector<std::size_t> idx;
        std::vector<double> pqres, actuals;
        std::vector<std::vector<double>> quantiles;
        for (const HourRecord& r : res.records) {
          idx.push_back(r.time_index);
          pqres.push_back(r.pqre);
          actuals.push_back(r.actual);
          quantiles.push_back(r.forecast.quantiles);
        }
        out["time_indices"] = idx;
        out["pqre"] = pqres;
        out["actuals"] = actuals;
        out["quantiles"] = quantiles;
        return out;
      },
      py::arg("panel"), py::arg("method") = "qrf", py::arg("mode") = "global",
      py::arg("k") = 100, py::arg("q") = 1, py::arg("hours") = 100,
      py::arg("horizon") = 1, py::arg("seed") = 0, py::arg("jobs") = 1);
}
