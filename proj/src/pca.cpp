#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "churn/learners.hpp"

namespace churn {

namespace {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

// Removes the span of `basis` from v (two passes of Gram-Schmidt).
void orthogonalize(Vec& v, const std::vector<Vec>& basis) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& b : basis) {
      const double proj = dot(v, b);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= proj * b[i];
    }
  }
}

Vec multiply(const std::vector<Vec>& cov, const Vec& v) {
  Vec out(v.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = dot(cov[i], v);
  return out;
}

// A unit start vector outside span(basis): the covariance column with the
// largest residual, falling back to the coordinate axes.
Vec start_vector(const std::vector<Vec>& cov, const std::vector<Vec>& basis) {
  const std::size_t p = cov.size();
  Vec best;
  double best_norm = 0.0;
  auto consider = [&](Vec v) {
    orthogonalize(v, basis);
    const double nv = norm(v);
    if (nv > best_norm * (1.0 + 1e-12)) {
      best_norm = nv;
      best = std::move(v);
    }
  };
  for (std::size_t j = 0; j < p; ++j) consider(cov[j]);
  if (best_norm < 1e-10) {
    best_norm = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      Vec e(p, 0.0);
      e[j] = 1.0;
      consider(std::move(e));
    }
  }
  for (auto& x : best) x /= best_norm;
  return best;
}

}  // namespace

PcaModel fit_pca(const Matrix& x, int n_components) {
  const std::size_t n = x.rows(), p = x.cols();
  if (n_components < 1 || n < 2 ||
      static_cast<std::size_t>(n_components) > std::min(n - 1, p)) {
    throw std::invalid_argument("n_components must be in 1..min(rows-1, features)");
  }
  PcaModel model;
  model.mean.assign(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) model.mean[j] += x(i, j);
  }
  for (auto& m : model.mean) m /= static_cast<double>(n);

  std::vector<Vec> cov(p, Vec(p, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < p; ++a) {
      const double da = x(i, a) - model.mean[a];
      for (std::size_t b = a; b < p; ++b) cov[a][b] += da * (x(i, b) - model.mean[b]);
    }
  }
  double total = 0.0;
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a; b < p; ++b) {
      cov[a][b] /= static_cast<double>(n - 1);
      cov[b][a] = cov[a][b];
    }
    total += cov[a][a];
  }

  constexpr int kMaxIterations = 20000;
  std::vector<Vec> basis;
  std::vector<double> eigenvalues;
  for (int c = 0; c < n_components; ++c) {
    Vec v = start_vector(cov, basis);
    for (int it = 0; it < kMaxIterations; ++it) {
      Vec next = multiply(cov, v);
      orthogonalize(next, basis);
      const double nv = norm(next);
      if (nv <= 1e-14 * std::max(total, 1e-300)) break;  // null space: keep v
      for (auto& e : next) e /= nv;
      double diff = 0.0;
      for (std::size_t i = 0; i < p; ++i) diff = std::max(diff, std::fabs(next[i] - v[i]));
      v = std::move(next);
      if (diff < 1e-13) break;
    }
    orthogonalize(v, basis);
    const double nv = norm(v);
    for (auto& e : v) e /= nv;
    eigenvalues.push_back(std::max(0.0, dot(v, multiply(cov, v))));
    basis.push_back(std::move(v));
  }

  std::vector<std::size_t> order(basis.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return eigenvalues[a] > eigenvalues[b]; });

  model.components = Matrix(order.size(), p);
  for (std::size_t r = 0; r < order.size(); ++r) {
    Vec v = basis[order[r]];
    std::size_t arg = 0;
    for (std::size_t i = 1; i < p; ++i) {
      if (std::fabs(v[i]) > std::fabs(v[arg])) arg = i;
    }
    const double sign = v[arg] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < p; ++i) model.components(r, i) = sign * v[i];
    const double ev = eigenvalues[order[r]];
    model.explained_variance.push_back(ev);
    model.explained_variance_ratio.push_back(total > 0.0 ? ev / total : 0.0);
  }
  return model;
}

Matrix pca_transform(const PcaModel& model, const Matrix& rows) {
  const std::size_t p = model.mean.size();
  if (rows.cols() != p) throw std::invalid_argument("row width mismatch");
  Matrix out(rows.rows(), model.components.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    for (std::size_t c = 0; c < model.components.rows(); ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < p; ++j) s += (rows(i, j) - model.mean[j]) * model.components(c, j);
      out(i, c) = s;
    }
  }
  return out;
}

Matrix pca_inverse_transform(const PcaModel& model, const Matrix& scores) {
  const std::size_t p = model.mean.size();
  if (scores.cols() != model.components.rows()) throw std::invalid_argument("score width mismatch");
  Matrix out(scores.rows(), p);
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      double s = model.mean[j];
      for (std::size_t c = 0; c < scores.cols(); ++c) s += scores(i, c) * model.components(c, j);
      out(i, j) = s;
    }
  }
  return out;
}

int components_for_variance(std::span<const double> ratios, double threshold) {
  double acc = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    acc += ratios[i];
    if (acc >= threshold - 1e-12) return static_cast<int>(i + 1);
  }
  return static_cast<int>(ratios.size());
}

}  // namespace churn
