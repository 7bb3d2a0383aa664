// qstack command line: synthetic panel generation, rolling evaluation,
// hyperparameter sweeps and Diebold-Mariano comparison.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qstack/core.hpp"
#include "qstack/dataio.hpp"
#include "qstack/evaluation.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qstack;

namespace {

SynthConfig load_synth_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read synth config: " + path);
  json j = json::parse(in);
  SynthConfig cfg = SynthConfig::defaults(j.value("n_models", 8));
  cfg.days = j.value("days", cfg.days);
  cfg.base_level = j.value("base_level", cfg.base_level);
  cfg.daily_amplitude = j.value("daily_amplitude", cfg.daily_amplitude);
  cfg.weekly_amplitude = j.value("weekly_amplitude", cfg.weekly_amplitude);
  cfg.annual_amplitude = j.value("annual_amplitude", cfg.annual_amplitude);
  cfg.ar1 = j.value("ar1", cfg.ar1);
  cfg.noise_std = j.value("noise_std", cfg.noise_std);
  cfg.start_year = j.value("start_year", cfg.start_year);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("model_bias"))
    cfg.model_bias = j["model_bias"].get<std::vector<double>>();
  if (j.contains("model_noise_std"))
    cfg.model_noise_std = j["model_noise_std"].get<std::vector<double>>();
  if (j.contains("heavy_tail"))
    cfg.heavy_tail = j["heavy_tail"].get<std::vector<bool>>();
  return cfg;
}

std::vector<ForecastPanel> gather_panels(
    const std::vector<std::string>& panel_paths,
    const std::string& synth_config_path, int synth_series,
    std::uint64_t seed) {
  if (!panel_paths.empty() && !synth_config_path.empty())
    throw std::runtime_error(
        "give either --panel files or --synth-config, not both");
  std::vector<ForecastPanel> panels;
  if (!panel_paths.empty()) {
    for (const std::string& p : panel_paths) panels.push_back(load_panel(p));
  } else {
    SynthConfig cfg = synth_config_path.empty()
                          ? SynthConfig::defaults()
                          : load_synth_config(synth_config_path);
    if (cfg.seed == 1 && seed != 0) cfg.seed = seed;
    for (int s = 0; s < synth_series; ++s) {
      char name[16];
      std::snprintf(name, sizeof(name), "S%02d", s + 1);
      panels.push_back(synth_panel(cfg, name));
    }
  }
  return panels;
}

std::vector<int> parse_grid(const std::string& csv) {
  std::vector<int> grid;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      grid.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--grid", "invalid grid entry '" + tok + "'");
    }
    if (grid.back() < 1)
      throw CLI::ValidationError("--grid", "grid entries must be >= 1");
  }
  if (grid.empty()) throw CLI::ValidationError("--grid", "empty grid");
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic load forecast stacking"};
  app.require_subcommand(1);

  std::vector<std::string> methods;
  std::vector<std::string> panel_paths;
  std::string synth_config_path, mode = "global", out_dir = "out";
  std::string axis, grid_csv;
  int k = 100, q = 1, horizon = 1, hours = 100, jobs = 1, series = 1;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* cmd, bool with_method) {
    if (with_method)
      cmd->add_option("--method", methods, "meta-model: qrs, qlr or qrf")
          ->check(CLI::IsMember({"qrs", "qlr", "qrf"}));
    cmd->add_option("--panel", panel_paths, "panel CSV path (repeatable)");
    cmd->add_option("--synth-config", synth_config_path,
                    "synthetic panel config JSON");
    cmd->add_option("--series", series, "synthetic series count");
    cmd->add_option("--mode", mode, "training mode")
        ->check(CLI::IsMember({"global", "local"}));
    cmd->add_option("--k", k, "neighbor count for local mode");
    cmd->add_option("--q", q, "minimum observations per tree leaf");
    cmd->add_option("--horizon", horizon, "forecast horizon in hours");
    cmd->add_option("--hours", hours, "number of test hours");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--jobs", jobs, "worker thread count");
    cmd->add_option("--out", out_dir, "output directory");
  };

  CLI::App* synth = app.add_subcommand("synth", "emit synthetic panel CSVs");
  add_common(synth, false);

  CLI::App* evaluate =
      app.add_subcommand("evaluate", "evaluate methods over test hours");
  add_common(evaluate, true);

  CLI::App* sweep = app.add_subcommand("sweep", "k or q hyperparameter sweep");
  add_common(sweep, true);
  sweep->add_option("--axis", axis, "sweep axis: k or q")
      ->required()
      ->check(CLI::IsMember({"k", "q"}));
  sweep->add_option("--grid", grid_csv, "comma-separated grid values")
      ->required();

  CLI::App* compare =
      app.add_subcommand("compare", "DM comparison from stored records");
  std::string records_dir;
  compare->add_option("--records", records_dir, "records directory")
      ->required();
  compare->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      SynthConfig cfg = synth_config_path.empty()
                            ? SynthConfig::defaults()
                            : load_synth_config(synth_config_path);
      if (seed != 0) cfg.seed = seed;
      fs::create_directories(out_dir);
      for (int s = 0; s < series; ++s) {
        char name[16];
        std::snprintf(name, sizeof(name), "S%02d", s + 1);
        const ForecastPanel panel = synth_panel(cfg, name);
        write_panel(panel, (fs::path(out_dir) / (std::string(name) + ".csv"))
                               .string());
      }
      std::cout << "wrote " << series << " panel(s) to " << out_dir << '\n';
      return 0;
    }

    const std::vector<ForecastPanel> panels =
        gather_panels(panel_paths, synth_config_path, series, seed);

    if (evaluate->parsed()) {
      if (methods.empty()) methods = {"qrf"};
      std::map<std::string, std::vector<EvaluationResult>> by_method;
      for (const std::string& mname : methods) {
        MethodConfig cfg;
        cfg.method = parse_method(mname);
        cfg.mode = parse_mode(mode);
        cfg.k = k;
        cfg.forest.min_leaf = q;
        cfg.horizon = horizon;
        cfg.seed = seed;
        for (const ForecastPanel& panel : panels) {
          const auto test_hours =
              select_test_hours(panel, static_cast<std::size_t>(hours));
          by_method[mname].push_back(
              evaluate_method(panel, cfg, test_hours, jobs));
        }
      }
      write_reports(bundle_from_results(by_method), out_dir);
      std::cout << "reports written to " << out_dir << '\n';
      return 0;
    }

    if (sweep->parsed()) {
      if (methods.size() != 1)
        throw std::runtime_error("sweep needs exactly one --method");
      const std::vector<int> grid = parse_grid(grid_csv);
      MethodConfig cfg;
      cfg.method = parse_method(methods[0]);
      cfg.forest.min_leaf = q;
      cfg.horizon = horizon;
      cfg.seed = seed;
      ReportBundle bundle;
      for (const ForecastPanel& panel : panels) {
        const auto test_hours =
            select_test_hours(panel, static_cast<std::size_t>(hours));
        const SweepResult sr =
            axis == "k" ? sweep_k(panel, cfg, grid, test_hours, jobs)
                        : sweep_q(panel, cfg, grid, test_hours, jobs);
        for (std::size_t i = 0; i < sr.labels.size(); ++i)
          bundle.sweeps.push_back(
              {panel.series_id, sr.axis, sr.labels[i], sr.reports[i]});
      }
      write_reports(bundle, out_dir);
      std::cout << "sweep written to " << out_dir << '\n';
      return 0;
    }

    if (compare->parsed()) {
      // Stored per-hour PQRE vectors, grouped by method.
      std::map<std::string, std::map<std::string, StoredRecords>> grouped;
      for (const auto& entry : fs::directory_iterator(records_dir)) {
        if (entry.path().extension() != ".csv") continue;
        StoredRecords rec = read_records(entry.path().string());
        grouped[rec.method][rec.series_id] = std::move(rec);
      }
      if (grouped.size() < 2)
        throw std::runtime_error("compare needs records from >= 2 methods");

      DMComparison cmp;
      for (const auto& [mname, _] : grouped) cmp.methods.push_back(mname);
      const std::size_t M = cmp.methods.size();
      cmp.wins.assign(M, std::vector<int>(M, 0));
      const auto& first = grouped.begin()->second;
      for (const auto& [sid, base_rec] : first) {
        for (std::size_t a = 0; a < M; ++a)
          for (std::size_t b = 0; b < M; ++b) {
            if (a == b) continue;
            const auto& ra = grouped.at(cmp.methods[a]).at(sid);
            const auto& rb = grouped.at(cmp.methods[b]).at(sid);
            if (ra.time_indices != rb.time_indices)
              throw std::runtime_error("test hour mismatch for series " + sid);
            const DMResult dm = dm_test(ra.pqre, rb.pqre);
            if (normal_cdf(dm.statistic) < 0.05) ++cmp.wins[a][b];
          }
      }
      ReportBundle bundle;
      bundle.dm = cmp;
      write_reports(bundle, out_dir);
      std::cout << "DM comparison written to " << out_dir << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
