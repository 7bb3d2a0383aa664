#include <doctest.h>

#include "qstack/core.hpp"
#include "qstack/qlr.hpp"
#include "qstack/rng.hpp"

#include <algorithm>
#include <cmath>

using namespace qstack;

namespace {

TrainingSet one_feature_set(const std::vector<double>& xs,
                            const std::vector<double>& ys) {
  TrainingSet ts;
  ts.n_features = 1;
  ts.inputs = xs;
  ts.targets = ys;
  for (std::size_t i = 0; i < xs.size(); ++i) ts.time_indices.push_back(i);
  return ts;
}

TrainingSet intercept_only_set(const std::vector<double>& ys) {
  TrainingSet ts;
  ts.n_features = 0;
  ts.targets = ys;
  for (std::size_t i = 0; i < ys.size(); ++i) ts.time_indices.push_back(i);
  return ts;
}

double objective_of_line(const TrainingSet& ts, double a0, double a1,
                         double alpha) {
  double s = 0;
  for (std::size_t i = 0; i < ts.size(); ++i)
    s += pinball(ts.targets[i], a0 + a1 * ts.inputs[i], alpha);
  return s;
}

}  // namespace

TEST_CASE("pinball loss branches") {
  CHECK(pinball(10, 8, 0.9) == doctest::Approx(1.8).epsilon(1e-15));
  CHECK(pinball(8, 10, 0.9) == doctest::Approx(0.2).epsilon(1e-15));
  for (double a : {0.01, 0.5, 0.99}) CHECK(pinball(5, 5, a) == 0.0);
}

TEST_CASE("intercept-only fit lands on an empirical quantile") {
  const TrainingSet ts = intercept_only_set({1, 2, 3});
  const CoefficientVector c = fit_qlr(ts, 0.5);
  CHECK(c.a.empty());
  CHECK(c.a0 == doctest::Approx(2.0).epsilon(1e-9));

  // brute-force scan: an optimal intercept sits at a data point
  double best = 1e300;
  for (double cand : {1.0, 2.0, 3.0}) {
    double obj = 0;
    for (double y : ts.targets) obj += pinball(y, cand, 0.5);
    best = std::min(best, obj);
  }
  CHECK(qlr_objective(ts, c) == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("interpolable data yields a zero-loss exact fit") {
  std::vector<double> xs, ys;
  for (int i = 0; i < 12; ++i) {
    xs.push_back(90.0 + i);
    ys.push_back(3.0 * xs.back() + 1.0);
  }
  const TrainingSet ts = one_feature_set(xs, ys);
  for (double alpha : {0.05, 0.5, 0.95}) {
    const CoefficientVector c = fit_qlr(ts, alpha);
    CHECK(qlr_objective(ts, c) == doctest::Approx(0.0).epsilon(1e-7));
    CHECK(c.a0 == doctest::Approx(1.0).epsilon(1e-6));
    REQUIRE(c.a.size() == 1);
    CHECK(c.a[0] == doctest::Approx(3.0).epsilon(1e-8));
    for (std::size_t i = 0; i < ts.size(); ++i)
      CHECK(qlr_predict(c, {xs[i]}) == doctest::Approx(ys[i]).epsilon(1e-8));
  }
}

TEST_CASE("n=1 objective matches the two-point-line enumeration") {
  // An optimal quantile-regression line in one regressor passes through at
  // least two sample points; enumerating all pairs bounds the optimum.
  Rng rng(55);
  for (int trial = 0; trial < 8; ++trial) {
    std::vector<double> xs, ys;
    for (int i = 0; i < 6; ++i) {
      xs.push_back(rng.uniform() * 10.0);
      ys.push_back(rng.uniform() * 10.0);
    }
    const TrainingSet ts = one_feature_set(xs, ys);
    for (double alpha : {0.25, 0.5, 0.8}) {
      double best = 1e300;
      for (int i = 0; i < 6; ++i)
        for (int j = i + 1; j < 6; ++j) {
          if (xs[i] == xs[j]) continue;
          const double a1 = (ys[j] - ys[i]) / (xs[j] - xs[i]);
          const double a0 = ys[i] - a1 * xs[i];
          best = std::min(best, objective_of_line(ts, a0, a1, alpha));
        }
      for (int i = 0; i < 6; ++i)  // horizontal lines through one point
        best = std::min(best, objective_of_line(ts, ys[i], 0.0, alpha));

      const CoefficientVector c = fit_qlr(ts, alpha);
      CHECK(qlr_objective(ts, c) == doctest::Approx(best).epsilon(1e-7));
    }
  }
}

TEST_CASE("prediction is affine") {
  CoefficientVector c;
  c.a0 = 5.0;
  c.a = {0.0, 0.0};
  CHECK(qlr_predict(c, {3, 4}) == 5.0);
  c.a = {1.0, 1.0};
  c.a0 = 0.0;
  CHECK(qlr_predict(c, {2, 3}) == 5.0);
}

TEST_CASE("quantile curve on noiseless linear data is the true value") {
  std::vector<double> xs, ys;
  for (int i = 0; i < 30; ++i) {
    xs.push_back(100.0 + i);
    ys.push_back(2.0 * xs.back() - 50.0);
  }
  const TrainingSet ts = one_feature_set(xs, ys);
  const QuantileGrid grid = build_quantile_grid();
  const QuantileForecast qf = qlr_quantiles(ts, {115.0}, grid);
  for (double q : qf.quantiles)
    CHECK(q == doctest::Approx(180.0).epsilon(1e-6));
}

TEST_CASE("intercept-only quantile curve tracks empirical quantiles") {
  std::vector<double> ys;
  for (int i = 1; i <= 100; ++i) ys.push_back(static_cast<double>(i));
  const TrainingSet ts = intercept_only_set(ys);
  const QuantileGrid grid = build_quantile_grid();
  const QuantileForecast qf = qlr_quantiles(ts, {}, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double expect = static_cast<double>(grid.hundredths[i]);
    CHECK(qf.quantiles[i] == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("quantile curve is non-decreasing after crossing repair") {
  Rng rng(66);
  std::vector<double> xs, ys;
  for (int i = 0; i < 50; ++i) {
    xs.push_back(100.0 + rng.uniform() * 20.0);
    ys.push_back(xs.back() + 5.0 * rng.normal());
  }
  const TrainingSet ts = one_feature_set(xs, ys);
  const QuantileGrid grid = build_quantile_grid();
  const QuantileForecast qf = qlr_quantiles(ts, {110.0}, grid);
  CHECK(std::is_sorted(qf.quantiles.begin(), qf.quantiles.end()));
}
