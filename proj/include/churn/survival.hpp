#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "churn/csv.hpp"
#include "churn/profile.hpp"

namespace churn {

// Product-limit survival estimate. Index i describes the step at
// event_times[i]; survival before event_times[0] is 1.
struct SurvivalCurve {
  std::vector<double> event_times;
  std::vector<std::size_t> at_risk;
  std::vector<std::size_t> events;
  std::vector<double> survival;
  double max_follow_up = 0.0;  // largest duration, event or censored
  std::size_t subjects = 0;

  // S(t): right-continuous step function.
  double at(double t) const;
};

// Throws std::invalid_argument on an empty set or a negative duration.
// At equal times events are counted before censorings, so a subject
// censored at t is still at risk for events at t.
SurvivalCurve km_estimate(std::span<const SurvivalObservation> observations);

// Area under the curve on [0, tau]. Requires 0 < tau <= max_follow_up.
double rmst(const SurvivalCurve& curve, double tau);

// rmst(reference) / rmst(group) at tau; > 1 means the group churns faster.
// Without tau the common support min(max_follow_up) is used. Throws
// DataError when the group's RMST is zero.
double churn_ratio(std::span<const SurvivalObservation> reference,
                   std::span<const SurvivalObservation> group,
                   std::optional<double> tau = std::nullopt);

double common_tau(const SurvivalCurve& a, const SurvivalCurve& b);

struct LogRankResult {
  double chi_square = 0.0;
  double p_value = 1.0;
  double observed_a = 0.0;
  double expected_a = 0.0;
  double variance = 0.0;
};

// Two-sample log-rank test (one degree of freedom). Throws
// std::invalid_argument for an empty group or no events, DataError when the
// hypergeometric variance sums to zero.
LogRankResult log_rank(std::span<const SurvivalObservation> group_a,
                       std::span<const SurvivalObservation> group_b);

// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
double regularized_gamma_q(double a, double x);

// Upper tail of the chi-square distribution.
double chi_square_sf(double x, double dof);

// time_days,at_risk,events,survival with a leading (0, n, 0, 1.0) row.
CsvTable curve_table(const SurvivalCurve& curve);

}  // namespace churn
