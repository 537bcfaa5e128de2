#include <algorithm>
#include <array>
#include <limits>
#include <stdexcept>

#include "churn/learners.hpp"
#include "churn/rng.hpp"

namespace churn {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) acc += (a[j] - b[j]) * (a[j] - b[j]);
  return acc;
}

// Nearest centroid; ties go to the lower cluster index.
std::pair<int, double> nearest(const Matrix& centroids, std::span<const double> row) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(centroids.row(c), row);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return {best, best_d};
}

Matrix seed_plus_plus(const Matrix& x, int k, Rng& rng) {
  const std::size_t n = x.rows();
  Matrix centroids(static_cast<std::size_t>(k), x.cols());
  std::size_t first = static_cast<std::size_t>(rng.below(n));
  std::copy(x.row(first).begin(), x.row(first).end(), centroids.row(0).begin());
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(x.row(i), centroids.row(0));
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (const double d : d2) total += d;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.below(n));
    }
    std::copy(x.row(pick).begin(), x.row(pick).end(),
              centroids.row(static_cast<std::size_t>(c)).begin());
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(x.row(i), centroids.row(static_cast<std::size_t>(c))));
    }
  }
  return centroids;
}

KMeansModel run_lloyd(const Matrix& x, int k, Rng& rng, int max_iterations) {
  const std::size_t n = x.rows(), p = x.cols();
  KMeansModel model;
  model.centroids = seed_plus_plus(x, k, rng);
  std::vector<int> assign(n, -1);
  std::vector<double> dist(n, 0.0);

  for (int iter = 1; iter <= max_iterations; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto [c, d] = nearest(model.centroids, x.row(i));
      if (c != assign[i]) changed = true;
      assign[i] = c;
      dist[i] = d;
      inertia += d;
    }
    model.inertia_history.push_back(inertia);
    model.inertia = inertia;
    model.iterations = iter;
    if (!changed && iter > 1) break;

    Matrix sums(static_cast<std::size_t>(k), p);
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(assign[i]);
      ++counts[c];
      for (std::size_t j = 0; j < p; ++j) sums(c, j) += x(i, j);
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (counts[c] == 0) {
        // Re-seed at the point currently farthest from its own centroid.
        const auto far = static_cast<std::size_t>(
            std::max_element(dist.begin(), dist.end()) - dist.begin());
        std::copy(x.row(far).begin(), x.row(far).end(), model.centroids.row(c).begin());
        dist[far] = 0.0;
        continue;
      }
      for (std::size_t j = 0; j < p; ++j) {
        model.centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
      }
    }
    if (iter == max_iterations) {
      // Final assignment against the last centroids keeps inertia consistent.
      inertia = 0.0;
      for (std::size_t i = 0; i < n; ++i) inertia += nearest(model.centroids, x.row(i)).second;
      model.inertia_history.push_back(inertia);
      model.inertia = inertia;
    }
  }
  return model;
}

}  // namespace

KMeansModel fit_kmeans(const Matrix& x, int k, std::uint64_t seed, std::span<const int> labels,
                       const KMeansOptions& options) {
  if (k <= 0) throw std::invalid_argument("k must be positive");
  if (static_cast<std::size_t>(k) > x.rows()) throw std::invalid_argument("k exceeds row count");
  if (!labels.empty() && labels.size() != x.rows()) {
    throw std::invalid_argument("label count mismatch");
  }
  if (options.max_iterations < 1 || options.restarts < 1) {
    throw std::invalid_argument("k-means needs max_iterations >= 1 and restarts >= 1");
  }

  KMeansModel best;
  for (int r = 0; r < options.restarts; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    auto model = run_lloyd(x, k, rng, options.max_iterations);
    if (r == 0 || model.inertia < best.inertia) best = std::move(model);
  }

  best.cluster_to_label.assign(static_cast<std::size_t>(k), 0);
  if (!labels.empty()) {
    std::vector<std::array<std::size_t, 2>> votes(static_cast<std::size_t>(k), {0, 0});
    for (std::size_t i = 0; i < x.rows(); ++i) {
      ++votes[static_cast<std::size_t>(kmeans_assign(best, x.row(i)))][labels[i] == 1];
    }
    for (std::size_t c = 0; c < votes.size(); ++c) {
      best.cluster_to_label[c] = votes[c][1] > votes[c][0] ? 1 : 0;
    }
  }
  return best;
}

int kmeans_assign(const KMeansModel& model, std::span<const double> row) {
  if (row.size() != model.centroids.cols()) throw std::invalid_argument("row width mismatch");
  return nearest(model.centroids, row).first;
}

int kmeans_classify(const KMeansModel& model, std::span<const double> row) {
  return model.cluster_to_label[static_cast<std::size_t>(kmeans_assign(model, row))];
}

}  // namespace churn
