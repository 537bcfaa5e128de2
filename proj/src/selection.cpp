#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "churn/error.hpp"
#include "churn/evaluation.hpp"
#include "churn/learners.hpp"

namespace churn {

std::vector<double> anova_f_scores(const Matrix& x, std::span<const int> labels) {
  if (labels.size() != x.rows()) throw std::invalid_argument("label count mismatch");
  std::size_t count[2] = {0, 0};
  for (const int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0 or 1");
    ++count[y];
  }
  if (count[0] == 0 || count[1] == 0) throw std::invalid_argument("ANOVA needs both classes");
  const double n = static_cast<double>(x.rows());

  std::vector<double> f(x.cols(), 0.0);
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double sum[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < x.rows(); ++i) sum[labels[i]] += x(i, j);
    const double mean[2] = {sum[0] / static_cast<double>(count[0]),
                            sum[1] / static_cast<double>(count[1])};
    const double grand = (sum[0] + sum[1]) / n;
    double within = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const double d = x(i, j) - mean[labels[i]];
      within += d * d;
    }
    double between = 0.0;
    for (int c = 0; c < 2; ++c) {
      between += static_cast<double>(count[c]) * (mean[c] - grand) * (mean[c] - grand);
    }
    // Relative cutoff so rounding noise in a constant column reads as zero.
    double scale = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) scale = std::max(scale, std::fabs(x(i, j)));
    const double eps = 1e-24 * std::max(1.0, scale * scale) * n;
    if (within <= eps) {
      f[j] = between > eps ? std::numeric_limits<double>::infinity() : 0.0;
    } else {
      f[j] = between / (within / (n - 2.0));
    }
  }
  return f;
}

std::vector<std::size_t> univariate_select(const Matrix& x, std::span<const int> labels,
                                           std::size_t keep) {
  if (keep < 1 || keep > x.cols()) throw std::invalid_argument("keep must be in 1..feature count");
  const auto f = anova_f_scores(x, labels);
  std::vector<std::size_t> order(f.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] > f[b]; });
  order.resize(keep);
  return order;
}

RfeResult rfe(const Matrix& x, std::span<const int> labels, std::size_t keep, std::size_t step,
              double c) {
  if (keep < 1 || keep > x.cols()) throw std::invalid_argument("keep must be in 1..feature count");
  if (step < 1) throw std::invalid_argument("step must be >= 1");
  RfeResult result;
  result.selected.resize(x.cols());
  std::iota(result.selected.begin(), result.selected.end(), 0);
  const Matrix z = standardize_apply(standardize_fit(x), x);
  LogisticOptions options;
  options.c = c;

  while (result.selected.size() > keep) {
    const auto model = fit_logistic_l1(z.select_cols(result.selected), labels, options);
    bool any_nonzero = false;
    for (const double w : model.weights) {
      if (!std::isfinite(w)) throw DataError("feature elimination: non-finite coefficient");
      any_nonzero = any_nonzero || w != 0.0;
    }
    if (!any_nonzero) {
      throw DataError("feature elimination: every coefficient is zero with " +
                      std::to_string(result.selected.size()) +
                      " features left; raise c or reduce the penalty");
    }
    std::vector<std::size_t> pos(result.selected.size());
    std::iota(pos.begin(), pos.end(), 0);
    // Weakest first; among equals the higher feature index goes first.
    std::stable_sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) {
      const double wa = std::fabs(model.weights[a]), wb = std::fabs(model.weights[b]);
      if (wa != wb) return wa < wb;
      return a > b;
    });
    const std::size_t drop = std::min(step, result.selected.size() - keep);
    std::vector<std::size_t> removed;
    for (std::size_t i = 0; i < drop; ++i) removed.push_back(result.selected[pos[i]]);
    std::sort(removed.begin(), removed.end());
    std::vector<std::size_t> survivors;
    for (const auto f : result.selected) {
      if (!std::binary_search(removed.begin(), removed.end(), f)) survivors.push_back(f);
    }
    result.selected = std::move(survivors);
    result.eliminated.push_back(std::move(removed));
  }
  return result;
}

}  // namespace churn
