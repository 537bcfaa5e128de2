#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "churn/matrix.hpp"

namespace churn {

// ---------------------------------------------------------------------------
// Standardization

// Per-feature affine map fit on training rows. Zero-variance features pass
// through untouched (mean 0, scale 1).
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;
};

// Population mean and deviation. Throws std::invalid_argument for < 2 rows.
Standardizer standardize_fit(const Matrix& rows);
Matrix standardize_apply(const Standardizer& s, const Matrix& rows);
void standardize_row(const Standardizer& s, std::span<const double> in, std::span<double> out);

// ---------------------------------------------------------------------------
// Linear models

enum class LinearKind { logistic, svm };

struct LinearModel {
  std::vector<double> weights;
  double intercept = 0.0;
  LinearKind kind = LinearKind::logistic;

  double decision(std::span<const double> row) const;
};

double logistic(double eta);

// Stable log(1 + exp(u)).
double log1p_exp(double u);

struct FitInfo {
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;  // norm of the minimum-norm subgradient
};

struct LogisticOptions {
  double c = 1.0;           // inverse penalty strength
  double tolerance = 1e-6;  // max coefficient change per sweep
  int max_sweeps = 10000;
};

// Minimizes sum_i log(1 + exp(-y_i eta_i)) + (1/c) sum_j |beta_j| with
// y in {-1, +1} and an unpenalized intercept, by cyclic coordinate descent.
// Each coordinate takes a soft-thresholded Newton step with backtracking.
// Labels are 0/1. Non-convergence is reported through warn() and `info`.
LinearModel fit_logistic_l1(const Matrix& x, std::span<const int> labels,
                            const LogisticOptions& options, FitInfo* info = nullptr);

// Smooth part of the logistic objective and its gradient, for checks.
double logistic_loss(const LinearModel& model, const Matrix& x, std::span<const int> labels);
std::vector<double> logistic_loss_gradient(const LinearModel& model, const Matrix& x,
                                           std::span<const int> labels);

double predict_proba(const LinearModel& model, std::span<const double> row);

struct SvmOptions {
  double c = 1.0;
  double tolerance = 1e-6;  // projected-gradient spread
  int max_epochs = 20000;
  double bias_scale = 1.0;  // value of the constant column carrying the intercept
};

// Linear soft-margin SVM: minimizes 1/2 ||(beta, beta0 / bias_scale)||^2 +
// c sum_i max(0, 1 - y_i (beta . x_i + beta0)) by dual coordinate descent in
// fixed epoch order.
LinearModel fit_linear_svm(const Matrix& x, std::span<const int> labels,
                           const SvmOptions& options, FitInfo* info = nullptr);

// ---------------------------------------------------------------------------
// K nearest neighbours

struct KnnResult {
  int label = 0;
  double positive_fraction = 0.0;
};

double minkowski_distance(std::span<const double> a, std::span<const double> b, double p);

// Exact brute force. Distance ties go to the lower row index; an even vote
// goes to label 0.
KnnResult knn_predict(const Matrix& train, std::span<const int> labels,
                      std::span<const double> query, int k, double p);

// ---------------------------------------------------------------------------
// Random forest

enum class Criterion { gini, entropy };

double impurity(Criterion criterion, std::size_t negatives, std::size_t positives);

struct ForestParams {
  int n_estimators = 100;
  Criterion criterion = Criterion::gini;
  int max_features = 0;  // 0 = all features
  int max_depth = 0;     // 0 = unlimited
  int min_samples_split = 2;
  bool bootstrap = true;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::array<std::uint32_t, 2> counts{};  // training samples per class
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& leaf_for(std::span<const double> row) const;
  int predict(std::span<const double> row) const;
};

struct Forest {
  std::vector<DecisionTree> trees;
  ForestParams params;
  std::uint64_t seed = 0;
  std::size_t n_features = 0;
};

// Tree t uses derive_seed(seed, t), so the forest does not depend on
// `threads`. Throws std::invalid_argument for invalid params; max_features
// above the feature count is clamped with a warning.
Forest fit_random_forest(const Matrix& x, std::span<const int> labels,
                         const ForestParams& params, std::uint64_t seed, unsigned threads = 1);

// Fraction of trees voting positive.
double forest_proba(const Forest& forest, std::span<const double> row);

// ---------------------------------------------------------------------------
// k-means

struct KMeansModel {
  Matrix centroids;
  double inertia = 0.0;
  std::vector<int> cluster_to_label;
  std::vector<double> inertia_history;  // after each assignment step
  int iterations = 0;
};

struct KMeansOptions {
  int max_iterations = 300;
  int restarts = 1;
};

// k-means++ seeding then Lloyd iterations to an assignment fixpoint. Empty
// clusters are re-seeded at the point farthest from its centroid. With
// labels, each cluster maps to its majority training label (ties to 0).
KMeansModel fit_kmeans(const Matrix& x, int k, std::uint64_t seed,
                       std::span<const int> labels = {}, const KMeansOptions& options = {});

int kmeans_assign(const KMeansModel& model, std::span<const double> row);
int kmeans_classify(const KMeansModel& model, std::span<const double> row);

// ---------------------------------------------------------------------------
// PCA

struct PcaModel {
  std::vector<double> mean;
  Matrix components;  // one orthonormal component per row
  std::vector<double> explained_variance;
  std::vector<double> explained_variance_ratio;
};

// Covariance eigenvectors by power iteration with deflation against the
// components already found. Requires 1 <= n_components <= min(rows-1, cols).
PcaModel fit_pca(const Matrix& x, int n_components);
Matrix pca_transform(const PcaModel& model, const Matrix& rows);
// Maps scores back to the original space (mean added back).
Matrix pca_inverse_transform(const PcaModel& model, const Matrix& scores);

// Smallest component count whose cumulative ratio reaches `threshold`, or
// the number of ratios if it never does.
int components_for_variance(std::span<const double> ratios, double threshold);

}  // namespace churn
