#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "churn/error.hpp"
#include "churn/learners.hpp"
#include "churn/rng.hpp"

namespace churn {

namespace {

struct SplitCandidate {
  bool valid = false;
  int feature = -1;
  double threshold = 0.0;
  double decrease = -1.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const int> y, const ForestParams& params,
              int max_features)
      : x_(x), y_(y), params_(params), max_features_(max_features) {}

  DecisionTree build(std::vector<std::size_t> samples, Rng& rng) {
    DecisionTree tree;
    struct Pending {
      int node;
      std::vector<std::size_t> samples;
      int depth;
    };
    std::vector<Pending> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, std::move(samples), 0});
    std::vector<int> features(x_.cols());
    while (!stack.empty()) {
      Pending item = std::move(stack.back());
      stack.pop_back();
      std::array<std::uint32_t, 2> counts{};
      for (const auto s : item.samples) ++counts[y_[s]];
      tree.nodes[item.node].counts = counts;

      const double parent = impurity(params_.criterion, counts[0], counts[1]);
      const bool depth_limited = params_.max_depth > 0 && item.depth >= params_.max_depth;
      if (item.samples.size() < static_cast<std::size_t>(params_.min_samples_split) ||
          parent <= 0.0 || depth_limited) {
        continue;
      }

      // Draw features without replacement; keep drawing past max_features
      // only while no valid split has been found.
      std::iota(features.begin(), features.end(), 0);
      SplitCandidate best;
      for (std::size_t drawn = 0; drawn < features.size(); ++drawn) {
        if (drawn >= static_cast<std::size_t>(max_features_) && best.valid) break;
        const auto pick = drawn + static_cast<std::size_t>(rng.below(features.size() - drawn));
        std::swap(features[drawn], features[pick]);
        evaluate(features[drawn], item.samples, counts, parent, best);
      }
      if (!best.valid) continue;

      std::vector<std::size_t> left, right;
      for (const auto s : item.samples) {
        (x_(s, best.feature) <= best.threshold ? left : right).push_back(s);
      }
      const int left_id = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      const int right_id = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      auto& node = tree.nodes[item.node];
      node.feature = best.feature;
      node.threshold = best.threshold;
      node.left = left_id;
      node.right = right_id;
      stack.push_back({right_id, std::move(right), item.depth + 1});
      stack.push_back({left_id, std::move(left), item.depth + 1});
    }
    return tree;
  }

 private:
  void evaluate(int feature, const std::vector<std::size_t>& samples,
                const std::array<std::uint32_t, 2>& counts, double parent,
                SplitCandidate& best) {
    sorted_.clear();
    for (const auto s : samples) sorted_.emplace_back(x_(s, feature), y_[s]);
    std::sort(sorted_.begin(), sorted_.end());
    const double n = static_cast<double>(samples.size());
    std::size_t left0 = 0, left1 = 0;
    for (std::size_t i = 0; i + 1 < sorted_.size(); ++i) {
      (sorted_[i].second == 1 ? left1 : left0)++;
      const double a = sorted_[i].first, b = sorted_[i + 1].first;
      if (!(a < b)) continue;
      const std::size_t nl = i + 1;
      const std::size_t nr = sorted_.size() - nl;
      const double child =
          (static_cast<double>(nl) * impurity(params_.criterion, left0, left1) +
           static_cast<double>(nr) *
               impurity(params_.criterion, counts[0] - left0, counts[1] - left1)) /
          n;
      const double decrease = parent - child;
      if (!best.valid || decrease > best.decrease) {
        double mid = a + (b - a) / 2.0;
        if (!(mid < b)) mid = a;
        best = {true, feature, mid, decrease};
      }
    }
  }

  const Matrix& x_;
  std::span<const int> y_;
  const ForestParams& params_;
  int max_features_;
  std::vector<std::pair<double, int>> sorted_;
};

}  // namespace

double impurity(Criterion criterion, std::size_t negatives, std::size_t positives) {
  const double n = static_cast<double>(negatives + positives);
  if (n == 0.0) return 0.0;
  const double p0 = negatives / n, p1 = positives / n;
  if (criterion == Criterion::gini) return 1.0 - p0 * p0 - p1 * p1;
  double h = 0.0;
  if (p0 > 0.0) h -= p0 * std::log2(p0);
  if (p1 > 0.0) h -= p1 * std::log2(p1);
  return h;
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> row) const {
  const TreeNode* node = &nodes.front();
  while (node->feature >= 0) {
    node = &nodes[row[node->feature] <= node->threshold ? node->left : node->right];
  }
  return *node;
}

int DecisionTree::predict(std::span<const double> row) const {
  const auto& leaf = leaf_for(row);
  return leaf.counts[1] > leaf.counts[0] ? 1 : 0;
}

Forest fit_random_forest(const Matrix& x, std::span<const int> labels,
                         const ForestParams& params, std::uint64_t seed, unsigned threads) {
  if (params.n_estimators < 1) throw std::invalid_argument("n_estimators must be >= 1");
  if (params.min_samples_split < 2) throw std::invalid_argument("min_samples_split must be >= 2");
  if (params.max_depth < 0) throw std::invalid_argument("max_depth must be >= 0");
  if (params.max_features < 0) throw std::invalid_argument("max_features must be >= 0");
  if (x.rows() == 0 || x.cols() == 0) throw std::invalid_argument("empty training matrix");
  if (labels.size() != x.rows()) throw std::invalid_argument("label count mismatch");
  for (const int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0 or 1");
  }
  for (const double v : x.data()) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite training input");
  }

  int max_features = params.max_features == 0 ? static_cast<int>(x.cols()) : params.max_features;
  if (static_cast<std::size_t>(max_features) > x.cols()) {
    warn("max_features " + std::to_string(max_features) + " clamped to feature count " +
         std::to_string(x.cols()));
    max_features = static_cast<int>(x.cols());
  }

  Forest forest;
  forest.params = params;
  forest.params.max_features = max_features;
  forest.seed = seed;
  forest.n_features = x.cols();
  forest.trees.resize(static_cast<std::size_t>(params.n_estimators));

  auto grow = [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    const std::size_t n = x.rows();
    std::vector<std::size_t> sample(n);
    if (params.bootstrap) {
      for (auto& s : sample) s = static_cast<std::size_t>(rng.below(n));
    } else {
      std::iota(sample.begin(), sample.end(), 0);
    }
    TreeBuilder builder(x, labels, forest.params, max_features);
    forest.trees[t] = builder.build(std::move(sample), rng);
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, forest.trees.size()));
  if (workers == 1) {
    for (std::size_t t = 0; t < forest.trees.size(); ++t) grow(t);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < forest.trees.size(); t += workers) grow(t);
      });
    }
    for (auto& th : pool) th.join();
  }
  return forest;
}

double forest_proba(const Forest& forest, std::span<const double> row) {
  if (row.size() != forest.n_features) throw std::invalid_argument("row width mismatch");
  std::size_t votes = 0;
  for (const auto& tree : forest.trees) votes += tree.predict(row);
  return static_cast<double>(votes) / static_cast<double>(forest.trees.size());
}

}  // namespace churn
