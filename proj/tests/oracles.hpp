#pragma once

// Independent reference computations. Each oracle recomputes a quantity by
// the most literal route available (risk-set recounts, pairwise comparisons,
// full sorts, enumeration) and shares no code with the library beyond its
// plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include "churn/matrix.hpp"
#include "churn/profile.hpp"

namespace oracle {

struct KmPoint {
  double time;
  double survival;
};

// Product-limit estimate: for each distinct event time, recount the subjects
// with duration >= t and the events at exactly t, then multiply.
inline std::vector<KmPoint> km(const std::vector<churn::SurvivalObservation>& obs) {
  std::set<std::int32_t> event_times;
  for (const auto& o : obs) {
    if (o.event) event_times.insert(o.duration_days);
  }
  std::vector<KmPoint> out;
  double s = 1.0;
  for (const auto t : event_times) {
    double at_risk = 0.0;
    double deaths = 0.0;
    for (const auto& o : obs) {
      if (o.duration_days >= t) at_risk += 1.0;
      if (o.event && o.duration_days == t) deaths += 1.0;
    }
    s *= (at_risk - deaths) / at_risk;
    out.push_back({static_cast<double>(t), s});
  }
  return out;
}

// Step function value from oracle points.
inline double km_at(const std::vector<KmPoint>& pts, double t) {
  double s = 1.0;
  for (const auto& p : pts) {
    if (p.time <= t) s = p.survival;
  }
  return s;
}

// Area under a right-continuous step function by unit-width rectangles on a
// fine grid of the integer day lattice: the curve only changes at integer
// times, so summing S over [d, d+1) slices is exact for integer tau and
// handled with a partial slice otherwise.
inline double rectangle_rmst(const std::vector<KmPoint>& pts, double tau) {
  double area = 0.0;
  double left = 0.0;
  while (left < tau) {
    const double right = std::min(tau, std::floor(left) + 1.0);
    area += (right - left) * km_at(pts, left);
    left = right;
  }
  return area;
}

// P(score+ > score-) + 0.5 P(tie) over all positive-negative pairs.
inline double mann_whitney_auc(const std::vector<int>& labels, const std::vector<double>& scores) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / pairs;
}

struct KnnAnswer {
  int label;
  double fraction;
};

// Sorts every training row by (distance, index) and votes over the first k.
inline KnnAnswer knn(const churn::Matrix& train, const std::vector<int>& labels,
                     const std::vector<double>& query, int k, double p) {
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t r = 0; r < train.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < train.cols(); ++c) acc += std::pow(std::fabs(train(r, c) - query[c]), p);
    order.emplace_back(std::pow(acc, 1.0 / p), r);
  }
  std::sort(order.begin(), order.end());
  int positives = 0;
  for (int i = 0; i < k; ++i) positives += labels[order[static_cast<std::size_t>(i)].second];
  const double fraction = static_cast<double>(positives) / k;
  return {2 * positives > k ? 1 : 0, fraction};
}

// One-way ANOVA with two groups: between-group mean square over
// within-group mean square.
inline double anova_f(const std::vector<double>& values, const std::vector<int>& labels) {
  double sum[2] = {0, 0};
  double n[2] = {0, 0};
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum[labels[i]] += values[i];
    n[labels[i]] += 1;
  }
  const double grand = (sum[0] + sum[1]) / (n[0] + n[1]);
  const double mean0 = sum[0] / n[0];
  const double mean1 = sum[1] / n[1];
  const double between = n[0] * (mean0 - grand) * (mean0 - grand) + n[1] * (mean1 - grand) * (mean1 - grand);
  double within = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double m = labels[i] == 0 ? mean0 : mean1;
    within += (values[i] - m) * (values[i] - m);
  }
  const double df_within = n[0] + n[1] - 2.0;
  return (between / 1.0) / (within / df_within);
}

// Smooth logistic loss sum_i log(1 + exp(-y_i eta_i)) with y in {-1, +1}.
inline double logistic_loss(const std::vector<double>& weights, double intercept, const churn::Matrix& x,
                            const std::vector<int>& labels) {
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double eta = intercept;
    for (std::size_t j = 0; j < x.cols(); ++j) eta += weights[j] * x(i, j);
    const double margin = (labels[i] == 1 ? 1.0 : -1.0) * eta;
    loss += margin > 0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
  }
  return loss;
}

// Central difference of the loss along coordinate j (j == cols is the
// intercept).
inline double loss_partial(const std::vector<double>& weights, double intercept, const churn::Matrix& x,
                           const std::vector<int>& labels, std::size_t j, double step) {
  auto w_plus = weights;
  auto w_minus = weights;
  double b_plus = intercept;
  double b_minus = intercept;
  if (j == weights.size()) {
    b_plus += step;
    b_minus -= step;
  } else {
    w_plus[j] += step;
    w_minus[j] -= step;
  }
  return (logistic_loss(w_plus, b_plus, x, labels) - logistic_loss(w_minus, b_minus, x, labels)) / (2.0 * step);
}

// Minimum k-means inertia over every assignment of 1-D points to k labelled
// groups (exhaustive; small inputs only).
struct Partition {
  double inertia = std::numeric_limits<double>::infinity();
  std::vector<double> centroids;
};

inline Partition best_partition_1d(const std::vector<double>& points, int k) {
  Partition best;
  const std::size_t n = points.size();
  std::size_t combos = 1;
  for (std::size_t i = 0; i < n; ++i) combos *= static_cast<std::size_t>(k);
  for (std::size_t code = 0; code < combos; ++code) {
    std::vector<int> assign(n);
    std::size_t c = code;
    for (std::size_t i = 0; i < n; ++i) {
      assign[i] = static_cast<int>(c % static_cast<std::size_t>(k));
      c /= static_cast<std::size_t>(k);
    }
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
    std::vector<double> count(static_cast<std::size_t>(k), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[static_cast<std::size_t>(assign[i])] += points[i];
      count[static_cast<std::size_t>(assign[i])] += 1.0;
    }
    if (std::find(count.begin(), count.end(), 0.0) != count.end()) continue;
    double inertia = 0.0;
    std::vector<double> centroids(static_cast<std::size_t>(k));
    for (int g = 0; g < k; ++g) centroids[static_cast<std::size_t>(g)] = sum[static_cast<std::size_t>(g)] / count[static_cast<std::size_t>(g)];
    for (std::size_t i = 0; i < n; ++i) {
      const double d = points[i] - centroids[static_cast<std::size_t>(assign[i])];
      inertia += d * d;
    }
    if (inertia < best.inertia) {
      std::sort(centroids.begin(), centroids.end());
      best = {inertia, centroids};
    }
  }
  return best;
}

// Churn labelling re-derived from the activity days: walk the gaps, the
// terminal one included, and stop at the first long one.
inline churn::SurvivalObservation label(const std::vector<std::int32_t>& days, int gap, std::int32_t last_window_day) {
  churn::SurvivalObservation o;
  for (std::size_t i = 0; i < days.size(); ++i) {
    const std::int32_t next = i + 1 < days.size() ? days[i + 1] : last_window_day;
    if (next - days[i] >= gap) {
      o.event = true;
      o.duration_days = days[i] - days.front();
      return o;
    }
  }
  o.duration_days = days.back() - days.front();
  return o;
}

}  // namespace oracle
