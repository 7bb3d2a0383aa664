#include "qstack/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qstack {

namespace {

struct WorkItem {
  int node;
  int begin;  // segment bounds over the distinct-entry arrays
  int end;
  int boot;  // bootstrap observations in the segment, counting multiplicity
};

// Per-training-set context shared by every tree: original-pattern indices
// sorted by each feature (ties by index) plus column-major value copies so
// node scans gather from one compact column at a time.
struct GrowContext {
  std::vector<std::vector<int>> sorted_orig;
  std::vector<std::vector<double>> feature_col;
  std::vector<double> targets;
};

GrowContext make_context(const TrainingSet& train) {
  const int N = static_cast<int>(train.size());
  const int n = static_cast<int>(train.n_features);
  GrowContext ctx;
  ctx.sorted_orig.resize(static_cast<std::size_t>(n));
  ctx.feature_col.resize(static_cast<std::size_t>(n));
  ctx.targets = train.targets;
  for (int f = 0; f < n; ++f) {
    auto& col = ctx.feature_col[static_cast<std::size_t>(f)];
    col.resize(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) col[i] = train.input_row(i)[f];
    auto& ord = ctx.sorted_orig[static_cast<std::size_t>(f)];
    ord.resize(static_cast<std::size_t>(N));
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&col](int a, int b) {
      if (col[a] != col[b]) return col[a] < col[b];
      return a < b;
    });
  }
  return ctx;
}

// Distinct bootstrap entries (original indices weighted by multiplicity)
// sorted per feature, maintained as shared node segments and split by stable
// partition so sortedness survives without re-sorting.
RegressionTree grow_tree(const TrainingSet& train, const ForestParams& params,
                         Rng& rng, const GrowContext& ctx) {
  const int N = static_cast<int>(train.size());
  if (N == 0) throw std::invalid_argument("empty training set");
  const int n = static_cast<int>(train.n_features);
  const int r = params.resolve_features(train.n_features);
  const int q = params.min_leaf;
  const double* targ = ctx.targets.data();

  // Bootstrap resample of size N with replacement.
  std::vector<int> multiplicity(static_cast<std::size_t>(N), 0);
  for (int i = 0; i < N; ++i) ++multiplicity[rng.uniform_int(N)];

  const int* cnt = multiplicity.data();
  std::vector<std::vector<int>> pos(static_cast<std::size_t>(n));
  for (int f = 0; f < n; ++f) {
    auto& arr = pos[static_cast<std::size_t>(f)];
    arr.reserve(static_cast<std::size_t>(N));
    for (int orig : ctx.sorted_orig[static_cast<std::size_t>(f)])
      if (cnt[orig] > 0) arr.push_back(orig);
  }
  const int D = static_cast<int>(pos[0].size());

  RegressionTree tree;
  std::vector<int> feat_pool(static_cast<std::size_t>(n));
  std::vector<int> candidates(static_cast<std::size_t>(r));
  std::vector<int> scratch(static_cast<std::size_t>(N));
  std::vector<unsigned char> side(static_cast<std::size_t>(N));

  std::vector<WorkItem> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, 0, D, N});

  while (!stack.empty()) {
    WorkItem item = stack.back();
    stack.pop_back();
    const int m = item.boot;
    const std::vector<int>& probe = pos[0];

    bool pure = true;
    double total = 0.0;
    const double first_target = targ[probe[item.begin]];
    for (int i = item.begin; i < item.end; ++i) {
      const int orig = probe[i];
      const double y = targ[orig];
      pure = pure && y == first_target;
      total += cnt[orig] * y;
    }

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_score = -1.0;

    if (!pure && m >= 2 * q) {
      // Draw r distinct feature indices, then scan them in ascending order so
      // equal-score ties resolve to the lowest feature index.
      std::iota(feat_pool.begin(), feat_pool.end(), 0);
      for (int i = 0; i < r; ++i) {
        int j = i + rng.uniform_int(n - i);
        std::swap(feat_pool[i], feat_pool[j]);
        candidates[i] = feat_pool[i];
      }
      std::sort(candidates.begin(), candidates.begin() + r);

      for (int ci = 0; ci < r; ++ci) {
        const int f = candidates[ci];
        const int* arr = pos[static_cast<std::size_t>(f)].data() + item.begin;
        const double* col = ctx.feature_col[static_cast<std::size_t>(f)].data();

        // Minimizing within-children SSE is maximizing S_L^2/m_L + S_R^2/m_R.
        const int len = item.end - item.begin;
        double left_sum = 0.0;
        int left_count = 0;
        double prev_value = col[arr[0]];
        for (int i = 1; i < len; ++i) {
          const int prev = arr[i - 1];
          left_sum += cnt[prev] * targ[prev];
          left_count += cnt[prev];
          const double value = col[arr[i]];
          if (value == prev_value) continue;
          const double lo = prev_value;
          prev_value = value;
          if (left_count < q || m - left_count < q) continue;
          const double right_sum = total - left_sum;
          const double score = left_sum * left_sum / left_count +
                               right_sum * right_sum / (m - left_count);
          if (score > best_score) {
            best_score = score;
            best_feature = f;
            best_threshold = 0.5 * (lo + value);
          }
        }
      }
    }

    if (best_feature < 0) {
      const int leaf_id = static_cast<int>(tree.leaf_members.size());
      tree.nodes[item.node].leaf_id = leaf_id;
      tree.leaf_members.emplace_back();
      tree.leaf_mean.push_back(0.0);
      continue;
    }

    // The side taken depends only on the original pattern, so resolve it once
    // and stable-partition every feature array from the cached mask.
    const double* best_col =
        ctx.feature_col[static_cast<std::size_t>(best_feature)].data();
    int left_boot = 0;
    for (int i = item.begin; i < item.end; ++i) {
      const int orig = probe[i];
      const bool left = best_col[orig] <= best_threshold;
      side[orig] = left;
      if (left) left_boot += cnt[orig];
    }
    int split = item.begin;
    for (int f = 0; f < n; ++f) {
      std::vector<int>& arr = pos[static_cast<std::size_t>(f)];
      int lo = item.begin, hi = 0;
      for (int i = item.begin; i < item.end; ++i) {
        const int orig = arr[i];
        if (side[orig])
          arr[lo++] = orig;
        else
          scratch[hi++] = orig;
      }
      for (int i = 0; i < hi; ++i) arr[lo + i] = scratch[i];
      split = lo;
    }

    const int left_node = static_cast<int>(tree.nodes.size());
    tree.nodes[item.node].feature = best_feature;
    tree.nodes[item.node].threshold = best_threshold;
    tree.nodes[item.node].left = left_node;
    tree.nodes[item.node].right = left_node + 1;
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    stack.push_back({left_node + 1, split, item.end, item.boot - left_boot});
    stack.push_back({left_node, item.begin, split, left_boot});
  }

  // Route the full original training set; bootstrap counts only grew the
  // tree. Leaves are filled in two passes so each member list is allocated
  // exactly once.
  std::vector<int> routed(static_cast<std::size_t>(N));
  std::vector<int> leaf_count(tree.leaf_members.size(), 0);
  for (int i = 0; i < N; ++i) {
    routed[i] = tree.route(train.input_row(static_cast<std::size_t>(i)));
    ++leaf_count[routed[i]];
  }
  for (std::size_t l = 0; l < tree.leaf_members.size(); ++l)
    tree.leaf_members[l].reserve(static_cast<std::size_t>(leaf_count[l]));
  for (int i = 0; i < N; ++i)
    tree.leaf_members[static_cast<std::size_t>(routed[i])].push_back(i);
  for (std::size_t l = 0; l < tree.leaf_members.size(); ++l) {
    double s = 0.0;
    for (int idx : tree.leaf_members[l])
      s += train.targets[static_cast<std::size_t>(idx)];
    tree.leaf_mean[l] =
        tree.leaf_members[l].empty() ? 0.0 : s / tree.leaf_members[l].size();
  }
  return tree;
}

}  // namespace

RegressionTree fit_tree(const TrainingSet& train, const ForestParams& params,
                        Rng& rng) {
  if (train.size() == 0) throw std::invalid_argument("empty training set");
  return grow_tree(train, params, rng, make_context(train));
}

Forest fit_forest(const TrainingSet& train, const ForestParams& params) {
  if (train.size() == 0) throw std::invalid_argument("empty training set");
  const GrowContext ctx = make_context(train);
  Forest forest;
  forest.training_targets = train.targets;
  forest.n_features = train.n_features;
  forest.params = params;
  forest.trees.reserve(static_cast<std::size_t>(params.n_trees));
  for (int j = 0; j < params.n_trees; ++j) {
    Rng tree_rng(mix_seed(params.seed, static_cast<std::uint64_t>(j)));
    forest.trees.push_back(grow_tree(train, params, tree_rng, ctx));
  }
  return forest;
}

WeightVector forest_weights(const Forest& forest, const InputVector& query) {
  if (query.size() != forest.n_features)
    throw std::invalid_argument("query dimension mismatch");
  WeightVector w(forest.n_train(), 0.0);
  const double inv_p = 1.0 / static_cast<double>(forest.trees.size());
  for (const RegressionTree& tree : forest.trees) {
    const int leaf = tree.route(query.data());
    const auto& members = tree.leaf_members[static_cast<std::size_t>(leaf)];
    const double share = inv_p / static_cast<double>(members.size());
    for (int idx : members) w[static_cast<std::size_t>(idx)] += share;
  }
  return w;
}

double forest_mean(const Forest& forest, const double* query) {
  double s = 0.0;
  for (const RegressionTree& tree : forest.trees) {
    const int leaf = tree.route(query);
    s += tree.leaf_mean[static_cast<std::size_t>(leaf)];
  }
  return s / static_cast<double>(forest.trees.size());
}

double forest_mean(const Forest& forest, const InputVector& query) {
  if (query.size() != forest.n_features)
    throw std::invalid_argument("query dimension mismatch");
  return forest_mean(forest, query.data());
}

}  // namespace qstack
