#include <doctest.h>

#include "qstack/core.hpp"
#include "qstack/qrf.hpp"
#include "qstack/rng.hpp"

#include <algorithm>
#include <cmath>

using namespace qstack;

namespace {

Forest single_leaf_forest(const std::vector<double>& targets) {
  RegressionTree t;
  t.nodes.emplace_back();
  t.nodes[0].leaf_id = 0;
  t.leaf_members.emplace_back();
  double s = 0;
  for (int i = 0; i < static_cast<int>(targets.size()); ++i) {
    t.leaf_members[0].push_back(i);
    s += targets[static_cast<std::size_t>(i)];
  }
  t.leaf_mean.push_back(s / targets.size());
  Forest f;
  f.training_targets = targets;
  f.n_features = 1;
  f.trees.push_back(std::move(t));
  return f;
}

TrainingSet random_set(Rng& rng, int N, int n) {
  TrainingSet ts;
  ts.n_features = static_cast<std::size_t>(n);
  for (int i = 0; i < N; ++i) {
    for (int f = 0; f < n; ++f) ts.inputs.push_back(rng.uniform() * 5);
    ts.targets.push_back(100.0 + 10.0 * rng.normal());
    ts.time_indices.push_back(static_cast<std::size_t>(i));
  }
  return ts;
}

// Independent quantile oracle: smallest target with accumulated weight at or
// above alpha, computed straight from forest_weights.
double brute_quantile(const Forest& forest, const InputVector& query,
                      double alpha) {
  const WeightVector w = forest_weights(forest, query);
  std::vector<std::pair<double, double>> tw;
  for (std::size_t i = 0; i < w.size(); ++i)
    tw.push_back({forest.training_targets[i], w[i]});
  std::sort(tw.begin(), tw.end());
  double cum = 0.0;
  for (const auto& [t, wi] : tw) {
    cum += wi;
    if (cum >= alpha - 1e-12) return t;
  }
  return tw.back().first;
}

}  // namespace

TEST_CASE("conditional CDF accumulation") {
  const Forest uniform = single_leaf_forest({1, 2, 3, 4});
  EmpiricalCDF cdf = qrf_cdf(uniform, {0.0});
  CHECK(cdf.support == std::vector<double>{1, 2, 3, 4});
  REQUIRE(cdf.cum_weights.size() == 4);
  CHECK(cdf.cum_weights[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(cdf.cum_weights[1] == doctest::Approx(0.50).epsilon(1e-15));
  CHECK(cdf.cum_weights[2] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(cdf.cum_weights[3] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("weighted CDF merges duplicate targets") {
  const Forest dup = single_leaf_forest({5, 5});
  EmpiricalCDF cdf = qrf_cdf(dup, {0.0});
  CHECK(cdf.support == std::vector<double>{5});
  CHECK(cdf.cum_weights == std::vector<double>{1.0});
}

TEST_CASE("mixture weights accumulate onto the support") {
  // Two single-leaf trees whose member lists overlap produce the
  // (0.25, 0.5, 0.25) weight profile on targets (10, 20, 30).
  const std::vector<double> targets{10, 20, 30};
  auto leaf_with = [&](std::vector<int> members) {
    RegressionTree t;
    t.nodes.emplace_back();
    t.nodes[0].leaf_id = 0;
    double s = 0;
    for (int i : members) s += targets[static_cast<std::size_t>(i)];
    t.leaf_mean.push_back(s / members.size());
    t.leaf_members.push_back(std::move(members));
    return t;
  };
  Forest f;
  f.training_targets = targets;
  f.n_features = 1;
  f.trees.push_back(leaf_with({0, 1}));
  f.trees.push_back(leaf_with({1, 2}));
  EmpiricalCDF cdf = qrf_cdf(f, {0.0});
  CHECK(cdf.support == std::vector<double>{10, 20, 30});
  CHECK(cdf.cum_weights[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(cdf.cum_weights[1] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(cdf.cum_weights[2] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("quantile inversion on a uniform 4-point CDF") {
  const Forest f = single_leaf_forest({1, 2, 3, 4});
  EmpiricalCDF cdf = qrf_cdf(f, {0.0});
  CHECK(cdf.quantile(0.50) == 2.0);
  CHECK(cdf.quantile(0.01) == 1.0);
  CHECK(cdf.quantile(0.99) == 4.0);
  CHECK(cdf.quantile(0.25) == 1.0);
  CHECK(cdf.quantile(0.26) == 2.0);
}

TEST_CASE("constant targets collapse the forecast") {
  const Forest f = single_leaf_forest({42, 42, 42});
  const QuantileGrid grid = build_quantile_grid();
  const QuantileForecast qf = qrf_quantiles(f, {0.0}, grid);
  for (double q : qf.quantiles) CHECK(q == 42.0);
}

TEST_CASE("grid quantiles match the brute-force inversion oracle") {
  const QuantileGrid grid = build_quantile_grid();
  Rng rng(31);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const TrainingSet ts = random_set(rng, 40 + static_cast<int>(seed) * 7, 3);
    ForestParams params;
    params.n_trees = 15;
    params.seed = seed;
    const Forest forest = fit_forest(ts, params);
    for (int trial = 0; trial < 4; ++trial) {
      InputVector query{rng.uniform() * 5, rng.uniform() * 5,
                        rng.uniform() * 5};
      const QuantileForecast qf = qrf_quantiles(forest, query, grid);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double expect = brute_quantile(forest, query,
                                             grid.probability(i));
        CHECK(qf.quantiles[i] == expect);
      }
    }
  }
}

TEST_CASE("quantiles are monotone and stay within the target range") {
  Rng rng(77);
  const TrainingSet ts = random_set(rng, 80, 2);
  ForestParams params;
  params.n_trees = 25;
  params.seed = 8;
  const Forest forest = fit_forest(ts, params);
  const QuantileGrid grid = build_quantile_grid();
  const auto [lo, hi] =
      std::minmax_element(ts.targets.begin(), ts.targets.end());
  for (int trial = 0; trial < 5; ++trial) {
    const InputVector query{rng.uniform() * 5, rng.uniform() * 5};
    const QuantileForecast qf = qrf_quantiles(forest, query, grid);
    CHECK(std::is_sorted(qf.quantiles.begin(), qf.quantiles.end()));
    CHECK(qf.quantiles.front() >= *lo);
    CHECK(qf.quantiles.back() <= *hi);
  }
}
