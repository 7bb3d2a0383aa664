#include <doctest.h>

#include "qstack/core.hpp"
#include "qstack/metrics.hpp"
#include "qstack/rng.hpp"

#include <algorithm>
#include <cmath>

using namespace qstack;

namespace {

// Forecast with a constant value at every grid probability.
QuantileForecast flat_forecast(const QuantileGrid& grid, double v) {
  QuantileForecast qf;
  qf.quantiles.assign(grid.size(), v);
  return qf;
}

// Forecast linear in the hundredth: q(h/100) = base + slope*h.
QuantileForecast ramp_forecast(const QuantileGrid& grid, double base,
                               double slope) {
  QuantileForecast qf;
  for (int h : grid.hundredths) qf.quantiles.push_back(base + slope * h);
  return qf;
}

}  // namespace

TEST_CASE("per-forecast quantile error") {
  const QuantileGrid grid = build_quantile_grid();
  CHECK(pqre(100.0, flat_forecast(grid, 100.0), grid) == 0.0);

  QuantileGrid single;
  single.hundredths = {50};
  QuantileForecast qf;
  qf.quantiles = {90.0};
  CHECK(pqre(100.0, qf, single) == doctest::Approx(5.0).epsilon(1e-12));

  QuantileGrid three;
  three.hundredths = {25, 50, 75};
  QuantileForecast tri;
  tri.quantiles = {95, 100, 110};
  // term-by-term: 0.25*5 + 0 + (1-0.75)*10 = 1.25 + 2.5; mean/100*100
  const double expect = 100.0 * ((0.25 * 5 + 0.0 + 0.25 * 10) / 3.0) / 100.0;
  CHECK(pqre(100.0, tri, three) == doctest::Approx(expect).epsilon(1e-12));

  CHECK_THROWS_AS(pqre(0.0, flat_forecast(grid, 1.0), grid),
                  std::invalid_argument);
}

TEST_CASE("mean / median / std aggregation") {
  Aggregate a = aggregate({1, 2, 3});
  CHECK(a.mean == 2.0);
  CHECK(a.median == 2.0);
  CHECK(a.std == doctest::Approx(1.0).epsilon(1e-15));

  Aggregate single = aggregate({5});
  CHECK(single.mean == 5.0);
  CHECK(single.median == 5.0);
  CHECK(single.std == 0.0);

  CHECK(aggregate({1, 2, 3, 4}).median == 2.5);
}

TEST_CASE("empirical calibration frequency") {
  const QuantileGrid grid = build_quantile_grid();
  const std::vector<double> actuals{100, 100, 100, 100};

  std::vector<QuantileForecast> high(4, flat_forecast(grid, 200.0));
  CHECK(refr(actuals, high, grid, 50) == 1.0);

  // boundary: actual exactly at the quantile counts as covered
  std::vector<QuantileForecast> exact(4, flat_forecast(grid, 100.0));
  CHECK(refr(actuals, exact, grid, 50) == 1.0);

  std::vector<QuantileForecast> mixed(4, flat_forecast(grid, 200.0));
  mixed[2] = flat_forecast(grid, 50.0);
  CHECK(refr(actuals, mixed, grid, 50) == 0.75);
}

TEST_CASE("calibration error table") {
  const QuantileGrid grid = build_quantile_grid();

  SUBCASE("quantiles above every actual give ARFE(alpha) = 1 - alpha") {
    const std::vector<double> actuals{10, 20, 30};
    std::vector<QuantileForecast> high(3, flat_forecast(grid, 1000.0));
    const std::vector<double> table = arfe_table(actuals, high, grid);
    double mean = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(table[i] == doctest::Approx(1.0 - grid.probability(i))
                            .epsilon(1e-12));
      mean += table[i];
    }
    CHECK(mean / table.size() == doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("exact empirical quantiles are calibrated up to granularity") {
    // actuals 1..200; every forecast carries the same marginal quantiles,
    // set to the inclusive empirical quantile ceil(N*alpha).
    const std::size_t N = 200;
    std::vector<double> actuals;
    for (std::size_t i = 1; i <= N; ++i)
      actuals.push_back(static_cast<double>(i));
    QuantileForecast qf;
    for (int h : build_quantile_grid().hundredths)
      qf.quantiles.push_back(
          static_cast<double>((N * static_cast<std::size_t>(h) + 99) / 100));
    std::vector<QuantileForecast> qfs(N, qf);
    const std::vector<double> table = arfe_table(actuals, qfs, grid);
    for (double v : table) CHECK(v <= 1.0 / (2.0 * N) + 1e-12);
  }
}

TEST_CASE("interval score") {
  CHECK(winkler(5, 4, 6, 0.1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(winkler(3, 4, 6, 0.1) == doctest::Approx(22.0).epsilon(1e-12));
  CHECK(winkler(7, 4, 6, 0.1) == doctest::Approx(22.0).epsilon(1e-12));
}

TEST_CASE("percentage interval score of the 90% band") {
  const QuantileGrid grid = build_quantile_grid();
  // linear ramp: q(0.05)=95, q(0.95)=105
  QuantileForecast qf;
  for (int h : grid.hundredths)
    qf.quantiles.push_back(95.0 + (h - 5) * (10.0 / 90.0));
  CHECK(qf.at(grid, 5) == doctest::Approx(95.0).epsilon(1e-12));
  CHECK(qf.at(grid, 95) == doctest::Approx(105.0).epsilon(1e-12));

  CHECK(pws(100.0, qf, grid) == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(pws(90.0, qf, grid) ==
        doctest::Approx(100.0 * (10.0 + 20.0 * 5.0) / 90.0).epsilon(1e-9));

  const QuantileForecast degenerate = flat_forecast(grid, 100.0);
  CHECK(pws(100.0, degenerate, grid) == 0.0);
}

TEST_CASE("prediction interval coverage shares") {
  const QuantileGrid grid = build_quantile_grid();
  QuantileForecast band = ramp_forecast(grid, 100.0, 0.1);  // [100.5, 109.5]

  SUBCASE("all inside") {
    const std::vector<double> actuals{101, 105, 109};
    std::vector<QuantileForecast> qfs(3, band);
    const PiCoverage c = pi_coverage(actuals, qfs, grid);
    CHECK(c.in_pi == 100.0);
    CHECK(c.below_pi == 0.0);
    CHECK(c.above_pi == 0.0);
  }
  SUBCASE("counts split 1 below, 1 inside, 2 above") {
    const std::vector<double> actuals{90, 105, 120, 130};
    std::vector<QuantileForecast> qfs(4, band);
    const PiCoverage c = pi_coverage(actuals, qfs, grid);
    CHECK(c.below_pi == 25.0);
    CHECK(c.in_pi == 25.0);
    CHECK(c.above_pi == 50.0);
  }
  SUBCASE("interval boundaries are inclusive") {
    const std::vector<double> actuals{band.at(grid, 5), band.at(grid, 95)};
    std::vector<QuantileForecast> qfs(2, band);
    CHECK(pi_coverage(actuals, qfs, grid).in_pi == 100.0);
  }
}

TEST_CASE("point forecast metrics") {
  const PointMetricsReport perfect =
      point_metrics({100, 200}, {100, 200});
  CHECK(perfect.MAPE == 0.0);
  CHECK(perfect.MdAPE == 0.0);
  CHECK(perfect.MSE == 0.0);
  CHECK(perfect.MPE == 0.0);
  CHECK(perfect.StdPE == 0.0);

  const PointMetricsReport r = point_metrics({100, 100}, {90, 110});
  CHECK(r.MAPE == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(r.MPE == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.MSE == doctest::Approx(100.0).epsilon(1e-12));

  // uniformly high forecasts (overforecast) drive MPE negative
  const PointMetricsReport over = point_metrics({100, 100}, {105, 110});
  CHECK(over.MPE < 0.0);
}

TEST_CASE("median-quantile point metrics") {
  const QuantileGrid grid = build_quantile_grid();
  std::vector<QuantileForecast> exact{flat_forecast(grid, 100.0),
                                      flat_forecast(grid, 50.0)};
  auto [qmape, qmdape] = median_point_metrics({100, 50}, exact, grid);
  CHECK(qmape == 0.0);
  CHECK(qmdape == 0.0);

  std::vector<QuantileForecast> one{flat_forecast(grid, 98.0)};
  auto [m, md] = median_point_metrics({100}, one, grid);
  CHECK(m == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(md == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("forecast comparison test") {
  const std::vector<double> a{1, 2, 3, 4};
  DMResult same = dm_test(a, a);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);

  const std::vector<double> b{2, 1, 4, 2};
  CHECK(dm_test(a, b).statistic ==
        doctest::Approx(-dm_test(b, a).statistic).epsilon(1e-15));

  // d_i ~ N(0.5, 1), N=100: statistic near 5, strongly significant
  Rng rng(204);
  std::vector<double> la, lb;
  double mean_d = 0;
  for (int i = 0; i < 100; ++i) {
    const double d = 0.5 + rng.normal();
    la.push_back(10.0 + d);
    lb.push_back(10.0);
    mean_d += d;
  }
  mean_d /= 100.0;
  double var_d = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const double d = la[i] - lb[i] - mean_d;
    var_d += d * d;
  }
  var_d /= 99.0;  // sample variance
  const double oracle = mean_d / std::sqrt(var_d / 100.0);
  const DMResult dm = dm_test(la, lb);
  CHECK(dm.statistic == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(dm.statistic == doctest::Approx(5.0).epsilon(0.5));
  CHECK(dm.p_value < 1e-6);

  CHECK_THROWS_AS(dm_test({1, 1}, {2, 2}), std::invalid_argument);
  CHECK_THROWS_AS(dm_test({1}, {1, 2}), std::invalid_argument);
}

TEST_CASE("percentage metrics are invariant to load rescaling") {
  const QuantileGrid grid = build_quantile_grid();
  Rng rng(303);
  std::vector<double> actuals;
  std::vector<QuantileForecast> qfs;
  for (int i = 0; i < 12; ++i) {
    actuals.push_back(100.0 + 10.0 * rng.uniform());
    qfs.push_back(ramp_forecast(grid, 95.0 + 10.0 * rng.uniform(), 0.12));
  }
  const ProbMetricsReport base = prob_metrics(actuals, qfs, grid);
  for (double c : {0.5, 2.0, 10.0}) {
    std::vector<double> sa;
    std::vector<QuantileForecast> sq;
    for (std::size_t i = 0; i < actuals.size(); ++i) {
      sa.push_back(c * actuals[i]);
      QuantileForecast q = qfs[i];
      for (double& v : q.quantiles) v *= c;
      sq.push_back(q);
    }
    const ProbMetricsReport scaled = prob_metrics(sa, sq, grid);
    CHECK(scaled.MPQRE == doctest::Approx(base.MPQRE).epsilon(1e-9));
    CHECK(scaled.MARFE == doctest::Approx(base.MARFE).epsilon(1e-9));
    CHECK(scaled.MPWS == doctest::Approx(base.MPWS).epsilon(1e-9));
    CHECK(scaled.inPI == base.inPI);
    CHECK(scaled.QMAPE == doctest::Approx(base.QMAPE).epsilon(1e-9));
  }
}

TEST_CASE("full report agrees with the component metrics") {
  const QuantileGrid grid = build_quantile_grid();
  std::vector<double> actuals{100, 104, 98};
  std::vector<QuantileForecast> qfs{ramp_forecast(grid, 95, 0.1),
                                    ramp_forecast(grid, 99, 0.1),
                                    ramp_forecast(grid, 94, 0.1)};
  const ProbMetricsReport r = prob_metrics(actuals, qfs, grid);

  std::vector<double> pq, pw;
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    pq.push_back(pqre(actuals[i], qfs[i], grid));
    pw.push_back(pws(actuals[i], qfs[i], grid));
  }
  CHECK(r.MPQRE == doctest::Approx(aggregate(pq).mean).epsilon(1e-12));
  CHECK(r.MdPQRE == doctest::Approx(aggregate(pq).median).epsilon(1e-12));
  CHECK(r.MPWS == doctest::Approx(aggregate(pw).mean).epsilon(1e-12));
  const std::vector<double> arfe = arfe_table(actuals, qfs, grid);
  CHECK(r.MARFE ==
        doctest::Approx(aggregate(arfe).mean).epsilon(1e-12));
  const PiCoverage c = pi_coverage(actuals, qfs, grid);
  CHECK(r.inPI == c.in_pi);
  CHECK(r.belowPI == c.below_pi);
  CHECK(r.abovePI == c.above_pi);
}
