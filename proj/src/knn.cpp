#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "churn/learners.hpp"

namespace churn {

double minkowski_distance(std::span<const double> a, std::span<const double> b, double p) {
  if (a.size() != b.size()) throw std::invalid_argument("distance width mismatch");
  double acc = 0.0;
  if (p == 1.0) {
    for (std::size_t j = 0; j < a.size(); ++j) acc += std::fabs(a[j] - b[j]);
    return acc;
  }
  if (p == 2.0) {
    for (std::size_t j = 0; j < a.size(); ++j) acc += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(acc);
  }
  for (std::size_t j = 0; j < a.size(); ++j) acc += std::pow(std::fabs(a[j] - b[j]), p);
  return std::pow(acc, 1.0 / p);
}

KnnResult knn_predict(const Matrix& train, std::span<const int> labels,
                      std::span<const double> query, int k, double p) {
  if (k <= 0) throw std::invalid_argument("k must be positive");
  if (static_cast<std::size_t>(k) > train.rows()) {
    throw std::invalid_argument("k exceeds the number of training rows");
  }
  if (!(p >= 1.0)) throw std::invalid_argument("Minkowski p must be >= 1");
  if (labels.size() != train.rows()) throw std::invalid_argument("label count mismatch");

  std::vector<std::pair<double, std::size_t>> dist(train.rows());
  for (std::size_t i = 0; i < train.rows(); ++i) {
    dist[i] = {minkowski_distance(train.row(i), query, p), i};
  }
  // Lexicographic (distance, index): ties resolve to the lower row index.
  const auto kth = dist.begin() + k;
  std::nth_element(dist.begin(), kth - 1, dist.end());
  std::size_t positives = 0;
  for (auto it = dist.begin(); it != kth; ++it) positives += labels[it->second] == 1;

  KnnResult r;
  r.positive_fraction = static_cast<double>(positives) / k;
  r.label = 2 * positives > static_cast<std::size_t>(k) ? 1 : 0;
  return r;
}

}  // namespace churn
