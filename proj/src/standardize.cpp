#include <cmath>
#include <stdexcept>

#include "churn/learners.hpp"

namespace churn {

Standardizer standardize_fit(const Matrix& rows) {
  if (rows.rows() < 2) throw std::invalid_argument("standardize_fit needs at least 2 rows");
  const std::size_t n = rows.rows(), p = rows.cols();
  Standardizer s;
  s.mean.assign(p, 0.0);
  s.scale.assign(p, 1.0);
  for (std::size_t j = 0; j < p; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += rows(i, j);
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = rows(i, j) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (sd > 1e-12 * (1.0 + std::fabs(mean))) {
      s.mean[j] = mean;
      s.scale[j] = sd;
    }
  }
  return s;
}

void standardize_row(const Standardizer& s, std::span<const double> in, std::span<double> out) {
  if (in.size() != s.mean.size() || out.size() != in.size()) {
    throw std::invalid_argument("standardizer width mismatch");
  }
  for (std::size_t j = 0; j < in.size(); ++j) out[j] = (in[j] - s.mean[j]) / s.scale[j];
}

Matrix standardize_apply(const Standardizer& s, const Matrix& rows) {
  Matrix out(rows.rows(), rows.cols());
  for (std::size_t i = 0; i < rows.rows(); ++i) standardize_row(s, rows.row(i), out.row(i));
  return out;
}

}  // namespace churn
