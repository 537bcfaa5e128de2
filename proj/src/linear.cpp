#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "churn/error.hpp"
#include "churn/learners.hpp"

namespace churn {

namespace {

void check_inputs(const Matrix& x, std::span<const int> labels, double c) {
  if (x.rows() == 0) throw std::invalid_argument("training matrix is empty");
  if (labels.size() != x.rows()) throw std::invalid_argument("label count mismatch");
  if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("c must be positive");
  for (const double v : x.data()) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite training input");
  }
  for (const int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0 or 1");
  }
}

double sign_of(int label) { return label == 1 ? 1.0 : -1.0; }

// Minimum-norm subgradient of loss + lambda * |beta| (intercept last, unpenalized).
double subgradient_norm(std::span<const double> grad, std::span<const double> beta,
                        double lambda) {
  double ss = 0.0;
  for (std::size_t j = 0; j < grad.size(); ++j) {
    double g = grad[j];
    if (j + 1 < grad.size()) {
      if (beta[j] > 0) {
        g += lambda;
      } else if (beta[j] < 0) {
        g -= lambda;
      } else {
        g = std::max(0.0, std::fabs(g) - lambda);
      }
    }
    ss += g * g;
  }
  return std::sqrt(ss);
}

}  // namespace

double LinearModel::decision(std::span<const double> row) const {
  if (row.size() != weights.size()) throw std::invalid_argument("row width mismatch");
  double eta = intercept;
  for (std::size_t j = 0; j < row.size(); ++j) eta += weights[j] * row[j];
  return eta;
}

double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double log1p_exp(double u) {
  return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

double predict_proba(const LinearModel& model, std::span<const double> row) {
  return logistic(model.decision(row));
}

double logistic_loss(const LinearModel& model, const Matrix& x, std::span<const int> labels) {
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    loss += log1p_exp(-sign_of(labels[i]) * model.decision(x.row(i)));
  }
  return loss;
}

std::vector<double> logistic_loss_gradient(const LinearModel& model, const Matrix& x,
                                           std::span<const int> labels) {
  const std::size_t p = x.cols();
  std::vector<double> grad(p + 1, 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double y = sign_of(labels[i]);
    const double coef = -y * logistic(-y * model.decision(x.row(i)));
    for (std::size_t j = 0; j < p; ++j) grad[j] += coef * x(i, j);
    grad[p] += coef;
  }
  return grad;
}

LinearModel fit_logistic_l1(const Matrix& x, std::span<const int> labels,
                            const LogisticOptions& options, FitInfo* info) {
  check_inputs(x, labels, options.c);
  const std::size_t n = x.rows(), p = x.cols();
  const double lambda = 1.0 / options.c;
  constexpr double kArmijo = 0.01;
  constexpr int kMaxBacktracks = 40;

  // beta[p] is the intercept; its column is implicitly all ones.
  std::vector<double> beta(p + 1, 0.0);
  std::vector<double> y(n), margin(n, 0.0);  // margin = y * eta
  for (std::size_t i = 0; i < n; ++i) y[i] = sign_of(labels[i]);
  auto column = [&](std::size_t i, std::size_t j) { return j == p ? 1.0 : x(i, j); };

  FitInfo fit;
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (std::size_t j = 0; j <= p; ++j) {
      const double pen = j == p ? 0.0 : lambda;
      double g = 0.0, h = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double xij = column(i, j);
        if (xij == 0.0) continue;
        const double tail = logistic(-margin[i]);  // 1 - sigma(margin)
        g -= y[i] * xij * tail;
        h += xij * xij * tail * (1.0 - tail);
      }
      h = std::max(h, 1e-12);
      const double b = beta[j];
      double d;
      if (g + pen <= h * b) {
        d = -(g + pen) / h;
      } else if (g - pen >= h * b) {
        d = -(g - pen) / h;
      } else {
        d = -b;
      }
      if (d == 0.0) continue;

      const double expected = g * d + pen * (std::fabs(b + d) - std::fabs(b));
      double step = 1.0;
      bool accepted = false;
      for (int bt = 0; bt < kMaxBacktracks; ++bt, step *= 0.5) {
        double delta = pen * (std::fabs(b + step * d) - std::fabs(b));
        for (std::size_t i = 0; i < n; ++i) {
          const double xij = column(i, j);
          if (xij == 0.0) continue;
          delta += log1p_exp(-(margin[i] + step * d * y[i] * xij)) - log1p_exp(-margin[i]);
        }
        if (delta <= kArmijo * step * expected) {
          accepted = true;
          break;
        }
      }
      if (!accepted) continue;
      const double move = step * d;
      beta[j] = b + move;
      for (std::size_t i = 0; i < n; ++i) margin[i] += move * y[i] * column(i, j);
      max_change = std::max(max_change, std::fabs(move));
    }
    fit.iterations = sweep;
    if (max_change < options.tolerance) {
      fit.converged = true;
      break;
    }
  }

  LinearModel model;
  model.kind = LinearKind::logistic;
  model.weights.assign(beta.begin(), beta.begin() + static_cast<std::ptrdiff_t>(p));
  model.intercept = beta[p];
  const auto grad = logistic_loss_gradient(model, x, labels);
  fit.gradient_norm = subgradient_norm(grad, beta, lambda);
  if (!fit.converged) {
    warn("L1 logistic regression did not converge in " + std::to_string(options.max_sweeps) +
         " sweeps; subgradient norm " + std::to_string(fit.gradient_norm));
  }
  for (const double w : beta) {
    if (!std::isfinite(w)) throw DataError("L1 logistic regression diverged");
  }
  if (info) *info = fit;
  return model;
}

LinearModel fit_linear_svm(const Matrix& x, std::span<const int> labels,
                           const SvmOptions& options, FitInfo* info) {
  check_inputs(x, labels, options.c);
  if (!(options.bias_scale > 0.0)) throw std::invalid_argument("bias_scale must be positive");
  const std::size_t n = x.rows(), p = x.cols();
  const double bias = options.bias_scale;
  const double c = options.c;

  // w[p] multiplies the constant column `bias`.
  std::vector<double> w(p + 1, 0.0), alpha(n, 0.0), qii(n, 0.0), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = sign_of(labels[i]);
    double q = bias * bias;
    for (std::size_t j = 0; j < p; ++j) q += x(i, j) * x(i, j);
    qii[i] = q;
  }

  FitInfo fit;
  for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
    double pg_max = -std::numeric_limits<double>::infinity();
    double pg_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (qii[i] <= 0.0) continue;
      double wx = w[p] * bias;
      for (std::size_t j = 0; j < p; ++j) wx += w[j] * x(i, j);
      const double g = y[i] * wx - 1.0;
      double pg = g;
      if (alpha[i] <= 0.0) {
        pg = std::min(g, 0.0);
      } else if (alpha[i] >= c) {
        pg = std::max(g, 0.0);
      }
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (pg == 0.0) continue;
      const double old = alpha[i];
      alpha[i] = std::clamp(old - g / qii[i], 0.0, c);
      const double delta = (alpha[i] - old) * y[i];
      if (delta == 0.0) continue;
      for (std::size_t j = 0; j < p; ++j) w[j] += delta * x(i, j);
      w[p] += delta * bias;
    }
    fit.iterations = epoch;
    fit.gradient_norm = pg_max - pg_min;
    if (pg_max - pg_min < options.tolerance) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged) {
    warn("linear SVM did not converge in " + std::to_string(options.max_epochs) +
         " epochs; projected-gradient spread " + std::to_string(fit.gradient_norm));
  }

  LinearModel model;
  model.kind = LinearKind::svm;
  model.weights.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(p));
  model.intercept = w[p] * bias;
  if (info) *info = fit;
  return model;
}

}  // namespace churn
