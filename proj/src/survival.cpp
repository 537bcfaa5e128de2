#include "churn/survival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "churn/error.hpp"

namespace churn {

double SurvivalCurve::at(double t) const {
  const auto it = std::upper_bound(event_times.begin(), event_times.end(), t);
  if (it == event_times.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - event_times.begin()) - 1];
}

SurvivalCurve km_estimate(std::span<const SurvivalObservation> observations) {
  if (observations.empty()) throw std::invalid_argument("km_estimate needs observations");
  std::vector<std::pair<std::int32_t, bool>> data;
  data.reserve(observations.size());
  for (const auto& o : observations) {
    if (o.duration_days < 0) throw std::invalid_argument("negative survival duration");
    data.emplace_back(o.duration_days, o.event);
  }
  // Ascending time; events before censorings at the same time.
  std::sort(data.begin(), data.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second > b.second;
  });

  SurvivalCurve curve;
  curve.subjects = data.size();
  curve.max_follow_up = data.back().first;
  std::size_t at_risk = data.size();
  double s = 1.0;
  for (std::size_t i = 0; i < data.size();) {
    const auto t = data[i].first;
    std::size_t deaths = 0, removed = 0;
    while (i < data.size() && data[i].first == t) {
      deaths += data[i].second ? 1 : 0;
      ++removed;
      ++i;
    }
    if (deaths > 0) {
      s *= static_cast<double>(at_risk - deaths) / static_cast<double>(at_risk);
      curve.event_times.push_back(t);
      curve.at_risk.push_back(at_risk);
      curve.events.push_back(deaths);
      curve.survival.push_back(s);
    }
    at_risk -= removed;
  }
  return curve;
}

double rmst(const SurvivalCurve& curve, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("rmst horizon must be positive");
  if (tau > curve.max_follow_up) {
    throw std::invalid_argument("rmst horizon beyond follow-up; extrapolation refused");
  }
  double area = 0.0;
  double prev_t = 0.0;
  double prev_s = 1.0;
  for (std::size_t i = 0; i < curve.event_times.size(); ++i) {
    const double t = curve.event_times[i];
    if (t >= tau) break;
    area += (t - prev_t) * prev_s;
    prev_t = t;
    prev_s = curve.survival[i];
  }
  return area + (tau - prev_t) * prev_s;
}

double common_tau(const SurvivalCurve& a, const SurvivalCurve& b) {
  return std::min(a.max_follow_up, b.max_follow_up);
}

double churn_ratio(std::span<const SurvivalObservation> reference,
                   std::span<const SurvivalObservation> group, std::optional<double> tau) {
  const auto ref_curve = km_estimate(reference);
  const auto grp_curve = km_estimate(group);
  const double horizon = tau.value_or(common_tau(ref_curve, grp_curve));
  // A zero horizon means some group was only ever observed at day 0.
  const double denom = horizon == 0.0 && !tau ? 0.0 : rmst(grp_curve, horizon);
  if (denom == 0.0) throw DataError("churn ratio undefined: group RMST is zero");
  return rmst(ref_curve, horizon) / denom;
}

LogRankResult log_rank(std::span<const SurvivalObservation> group_a,
                       std::span<const SurvivalObservation> group_b) {
  if (group_a.empty() || group_b.empty()) {
    throw std::invalid_argument("log_rank needs two non-empty groups");
  }
  // (time, event, in_a), ascending time.
  struct Row {
    std::int32_t t;
    bool event;
    bool in_a;
  };
  std::vector<Row> rows;
  rows.reserve(group_a.size() + group_b.size());
  for (const auto& o : group_a) rows.push_back({o.duration_days, o.event, true});
  for (const auto& o : group_b) rows.push_back({o.duration_days, o.event, false});
  std::sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) { return x.t < y.t; });

  double n_a = static_cast<double>(group_a.size());
  double n = static_cast<double>(rows.size());
  LogRankResult r;
  bool any_event = false;
  for (std::size_t i = 0; i < rows.size();) {
    const auto t = rows[i].t;
    double d = 0.0, d_a = 0.0, leave = 0.0, leave_a = 0.0;
    while (i < rows.size() && rows[i].t == t) {
      if (rows[i].event) {
        d += 1.0;
        if (rows[i].in_a) d_a += 1.0;
      }
      leave += 1.0;
      if (rows[i].in_a) leave_a += 1.0;
      ++i;
    }
    if (d > 0.0) {
      any_event = true;
      const double frac = n_a / n;
      r.observed_a += d_a;
      r.expected_a += d * frac;
      if (n > 1.0) r.variance += d * frac * (1.0 - frac) * (n - d) / (n - 1.0);
    }
    n -= leave;
    n_a -= leave_a;
  }
  if (!any_event) throw std::invalid_argument("log_rank needs at least one event");
  if (!(r.variance > 0.0)) throw DataError("log-rank test degenerate: zero variance");
  const double diff = r.observed_a - r.expected_a;
  r.chi_square = diff * diff / r.variance;
  r.p_value = chi_square_sf(r.chi_square, 1.0);
  return r;
}

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw std::invalid_argument("regularized_gamma_q domain");
  if (x == 0.0) return 1.0;
  const double log_prefix = a * std::log(x) - x - std::lgamma(a);
  if (x < a + 1.0) {
    // Series for the lower function P, then Q = 1 - P.
    double term = 1.0 / a;
    double sum = term;
    for (int k = 1; k < 1000; ++k) {
      term *= x / (a + k);
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-17) break;
    }
    return std::clamp(1.0 - sum * std::exp(log_prefix), 0.0, 1.0);
  }
  // Continued fraction for Q (modified Lentz).
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return std::clamp(std::exp(log_prefix) * h, 0.0, 1.0);
}

double chi_square_sf(double x, double dof) {
  if (x <= 0.0) return 1.0;
  return regularized_gamma_q(dof / 2.0, x / 2.0);
}

CsvTable curve_table(const SurvivalCurve& curve) {
  CsvTable t;
  t.header = {"time_days", "at_risk", "events", "survival"};
  t.rows.push_back({"0", std::to_string(curve.subjects), "0", "1.0"});
  for (std::size_t i = 0; i < curve.event_times.size(); ++i) {
    t.rows.push_back({format_double(curve.event_times[i]), std::to_string(curve.at_risk[i]),
                      std::to_string(curve.events[i]), format_double(curve.survival[i])});
  }
  return t;
}

}  // namespace churn
