#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "churn/classifier.hpp"
#include "churn/csv.hpp"
#include "churn/matrix.hpp"

namespace churn {

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  // Empty when the denominator is zero.
  std::optional<double> tpr() const;
  std::optional<double> fpr() const;
  double accuracy() const;
};

// Binary 0/1 sequences of equal length.
ConfusionMatrix confusion(std::span<const int> labels, std::span<const int> predictions);

// Labels from scores: 1 when score > threshold.
std::vector<int> threshold_scores(std::span<const double> scores, double threshold);

struct RocCurve {
  // thresholds[0] is +inf (the (0,0) point); then distinct scores descending.
  std::vector<double> thresholds;
  std::vector<double> fpr;
  std::vector<double> tpr;
  double auc = 0.0;
};

// A sample is called positive at threshold t when score >= t. Requires both
// classes; the area is accumulated from integer counts, so tied scores
// contribute exactly half a pair.
RocCurve roc_auc(std::span<const int> labels, std::span<const double> scores);

CsvTable roc_table(const RocCurve& roc);

struct CvPlan {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<int> fold_of;  // per sample

  std::vector<std::size_t> train_indices(int fold) const;
  std::vector<std::size_t> validation_indices(int fold) const;
};

// Seeded shuffle within each class, then round-robin over folds. The fold
// offset carries over from one class to the next so fold sizes stay within 1.
CvPlan stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed);

struct HoldoutSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// 80/20: fold 0 of a five-fold plan is held out.
HoldoutSplit holdout_split(std::span<const int> labels, std::uint64_t seed);

enum class Metric { roc_auc, accuracy };
Metric parse_metric(std::string_view name);
std::string metric_name(Metric metric);

// Metric of a fitted classifier on rows of x.
double evaluate_metric(const Classifier& model, const Matrix& x, std::span<const int> labels,
                       Metric metric, double probability_threshold = 0.5);

struct ConfigScore {
  ParamMap params;
  std::vector<double> fold_scores;
  double mean = -std::numeric_limits<double>::infinity();
  bool failed = false;
};

struct SearchResult {
  ParamMap best;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<ConfigScore> evaluated;  // enumeration order
};

struct SearchOptions {
  Metric metric = Metric::roc_auc;
  std::uint64_t seed = 0;  // model seed, shared by all folds
  unsigned threads = 1;
  ParamMap base;  // fixed params merged under each configuration
};

// Cartesian product; the last grid entry varies fastest.
std::vector<ParamMap> expand_grid(const Grid& grid);

// Fold scores of one configuration. Throws whatever fitting throws.
std::vector<double> cross_validate(ModelFamily family, const ParamMap& params, const Matrix& x,
                                   std::span<const int> labels, const CvPlan& plan,
                                   const SearchOptions& options);

// A configuration with any failing fold scores -inf and raises a warning.
// Ties keep the earliest configuration.
SearchResult grid_search(ModelFamily family, const Grid& grid, const Matrix& x,
                         std::span<const int> labels, const CvPlan& plan,
                         const SearchOptions& options);

// Draws n_iter distinct configurations with a seeded shuffle of the grid
// enumeration; n_iter >= grid size evaluates everything in grid order.
SearchResult random_search(ModelFamily family, const Grid& grid, int n_iter,
                           std::uint64_t sample_seed, const Matrix& x,
                           std::span<const int> labels, const CvPlan& plan,
                           const SearchOptions& options);

// Rows model,params,fold,metric,value; fold "mean" carries the average.
CsvTable search_table(const std::string& model, const SearchResult& result, Metric metric);

// One-way ANOVA F per feature across the two classes. Zero within-class
// spread gives +inf when the class means differ and 0 when they do not.
std::vector<double> anova_f_scores(const Matrix& x, std::span<const int> labels);

// Top `keep` features by F, descending; ties keep the lower index.
std::vector<std::size_t> univariate_select(const Matrix& x, std::span<const int> labels,
                                           std::size_t keep);

struct RfeResult {
  std::vector<std::size_t> selected;                 // ascending feature index
  std::vector<std::vector<std::size_t>> eliminated;  // per round
};

// Recursive elimination with the L1 logistic model on standardized
// features; each round drops the `step` smallest |weight| (ties drop the
// higher index first).
RfeResult rfe(const Matrix& x, std::span<const int> labels, std::size_t keep, std::size_t step = 1,
              double c = 25.0);

}  // namespace churn
