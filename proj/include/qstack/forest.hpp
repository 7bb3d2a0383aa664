#pragma once

#include <cstdint>
#include <vector>

#include "qstack/rng.hpp"
#include "qstack/types.hpp"

namespace qstack {

// CART-style regression tree. Grown on a bootstrap resample; after growth all
// original training patterns are routed down to populate leaf member lists,
// which drive both the RF point forecast and the QRF conditional CDF.
struct RegressionTree {
  struct Node {
    int feature = -1;       // -1 for leaves
    double threshold = 0.0;  // go left if x[feature] <= threshold
    int left = -1;
    int right = -1;
    int leaf_id = -1;
  };

  std::vector<Node> nodes;
  std::vector<std::vector<int>> leaf_members;  // original training indices
  std::vector<double> leaf_mean;               // mean target of members

  // Leaf id reached by dropping `x` down the tree.
  int route(const double* x) const {
    int node = 0;
    while (nodes[node].feature >= 0) {
      node = (x[nodes[node].feature] <= nodes[node].threshold)
                 ? nodes[node].left
                 : nodes[node].right;
    }
    return nodes[node].leaf_id;
  }
};

struct Forest {
  std::vector<RegressionTree> trees;
  std::vector<double> training_targets;
  std::size_t n_features = 0;
  ForestParams params;

  std::size_t n_train() const { return training_targets.size(); }
};

// Non-negative per-training-pattern weights summing to 1.
using WeightVector = std::vector<double>;

RegressionTree fit_tree(const TrainingSet& train, const ForestParams& params,
                        Rng& rng);

// p trees with independent deterministic sub-streams derived from the seed.
Forest fit_forest(const TrainingSet& train, const ForestParams& params);

WeightVector forest_weights(const Forest& forest, const InputVector& query);

// Weighted mean of training targets, evaluated through per-leaf member
// means; identical to dotting forest_weights with the targets.
double forest_mean(const Forest& forest, const InputVector& query);
double forest_mean(const Forest& forest, const double* query);

}  // namespace qstack
