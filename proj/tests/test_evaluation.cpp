#include <algorithm>
#include <cmath>
#include <set>

#include "churn/error.hpp"
#include "churn/evaluation.hpp"
#include "churn/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace churn;

namespace {

std::vector<int> random_labels(Rng& rng, std::size_t n, double p) {
  std::vector<int> y(n);
  for (auto& v : y) v = rng.bernoulli(p) ? 1 : 0;
  return y;
}

// Feature 0 carries the label, the rest are noise.
void planted(std::size_t n, std::size_t noise, std::uint64_t seed, Matrix& x, std::vector<int>& y) {
  Rng rng(seed);
  x = Matrix(n, 1 + noise);
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(i % 2);
    x(i, 0) = (y[i] ? 2.0 : -2.0) + 0.5 * rng.normal();
    for (std::size_t j = 1; j <= noise; ++j) x(i, j) = rng.normal();
  }
}

}  // namespace

TEST_CASE("confusion matrix worked examples") {
  const auto a = confusion(std::vector<int>{1, 1, 1, 1}, std::vector<int>{1, 1, 1, 0});
  CHECK(a.tp == 3);
  CHECK(a.fn == 1);
  CHECK(*a.tpr() == 0.75);
  CHECK_FALSE(a.fpr().has_value());

  const auto b = confusion(std::vector<int>{0, 1, 0, 1}, std::vector<int>{0, 1, 0, 1});
  CHECK(b.accuracy() == 1.0);
  CHECK(*b.fpr() == 0.0);

  const auto c = confusion(std::vector<int>{0, 0}, std::vector<int>{1, 0});
  CHECK(c.fp == 1);
  CHECK(c.tn == 1);
  CHECK(*c.fpr() == 0.5);
  CHECK(c.total() == 2);

  CHECK_THROWS_AS(confusion(std::vector<int>{0, 1}, std::vector<int>{1}), std::invalid_argument);
}

TEST_CASE("property: accuracy equals the match rate") {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const auto y = random_labels(rng, 1 + rng.below(40), 0.5);
    const auto p = random_labels(rng, y.size(), 0.5);
    std::size_t same = 0;
    for (std::size_t i = 0; i < y.size(); ++i) same += y[i] == p[i];
    CHECK(confusion(y, p).accuracy() == static_cast<double>(same) / static_cast<double>(y.size()));
  }
}

TEST_CASE("threshold scores uses a strict cut") {
  CHECK(threshold_scores(std::vector<double>{0.4, 0.5, 0.6}, 0.5) == std::vector<int>{0, 0, 1});
}

TEST_CASE("AUC worked examples") {
  CHECK(roc_auc(std::vector<int>{1, 1, 0, 0}, std::vector<double>{0.9, 0.8, 0.3, 0.2}).auc == 1.0);
  CHECK(roc_auc(std::vector<int>{1, 0, 0, 1}, std::vector<double>{0.9, 0.2, 0.8, 0.3}).auc == 0.75);
  CHECK(roc_auc(std::vector<int>{1, 0, 1, 0}, std::vector<double>{0.4, 0.4, 0.4, 0.4}).auc == 0.5);
  CHECK_THROWS_AS(roc_auc(std::vector<int>{1, 1}, std::vector<double>{0.1, 0.2}), std::invalid_argument);
}

TEST_CASE("ROC curve shape") {
  const auto roc = roc_auc(std::vector<int>{1, 0, 0, 1}, std::vector<double>{0.9, 0.2, 0.8, 0.3});
  CHECK(std::isinf(roc.thresholds.front()));
  CHECK(roc.fpr.front() == 0.0);
  CHECK(roc.tpr.front() == 0.0);
  CHECK(roc.fpr.back() == 1.0);
  CHECK(roc.tpr.back() == 1.0);
  CHECK(std::is_sorted(roc.fpr.begin(), roc.fpr.end()));
  CHECK(std::is_sorted(roc.tpr.begin(), roc.tpr.end()));
  CHECK(std::is_sorted(roc.thresholds.rbegin(), roc.thresholds.rend()));
  const auto t = roc_table(roc);
  CHECK(t.header == std::vector<std::string>{"threshold", "fpr", "tpr"});
  CHECK(t.rows.size() == roc.fpr.size());
}

TEST_CASE("property: AUC matches Mann-Whitney, with ties") {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.below(49);
    auto y = random_labels(rng, n, 0.4);
    y[0] = 1;
    y[1] = 0;
    std::vector<double> s(n);
    for (auto& v : s) v = static_cast<double>(rng.below(8)) / 4.0;
    CHECK(std::fabs(roc_auc(y, s).auc - oracle::mann_whitney_auc(y, s)) <= 1e-12);
  }
}

TEST_CASE("property: AUC under monotone maps and negation") {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 10 + rng.below(30);
    auto y = random_labels(rng, n, 0.5);
    y[0] = 1;
    y[1] = 0;
    std::vector<double> s(n), e(n), aff(n), neg(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rng.normal();
      e[i] = std::exp(s[i]);
      aff[i] = 3.0 * s[i] + 7.0;
      neg[i] = -s[i];
    }
    const double auc = roc_auc(y, s).auc;
    CHECK(roc_auc(y, e).auc == auc);
    CHECK(roc_auc(y, aff).auc == auc);
    CHECK(roc_auc(y, neg).auc == doctest::Approx(1.0 - auc).epsilon(1e-15));
  }
}

TEST_CASE("stratified folds") {
  std::vector<int> y{1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
  const auto plan = stratified_kfold(y, 5, 7);
  for (int f = 0; f < 5; ++f) {
    const auto v = plan.validation_indices(f);
    REQUIRE(v.size() == 2);
    CHECK(y[v[0]] + y[v[1]] == 1);
  }
  CHECK_THROWS_AS(stratified_kfold(y, 6, 1), std::invalid_argument);
  CHECK_THROWS_AS(stratified_kfold(y, 1, 1), std::invalid_argument);
}

TEST_CASE("property: folds partition and stay balanced") {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const int k = 2 + static_cast<int>(rng.below(9));
    auto y = random_labels(rng, 40 + rng.below(100), 0.3);
    const auto positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    if (positives < static_cast<std::size_t>(k) || y.size() - positives < static_cast<std::size_t>(k)) continue;
    const auto plan = stratified_kfold(y, k, rng.next());
    std::vector<int> seen(y.size(), 0);
    std::size_t min_pos = y.size(), max_pos = 0, min_size = y.size(), max_size = 0;
    for (int f = 0; f < k; ++f) {
      const auto v = plan.validation_indices(f);
      const auto tr = plan.train_indices(f);
      CHECK(v.size() + tr.size() == y.size());
      std::size_t pos = 0;
      for (const auto i : v) {
        ++seen[i];
        pos += static_cast<std::size_t>(y[i]);
      }
      min_pos = std::min(min_pos, pos);
      max_pos = std::max(max_pos, pos);
      min_size = std::min(min_size, v.size());
      max_size = std::max(max_size, v.size());
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    CHECK(max_pos - min_pos <= 1);
    CHECK(max_size - min_size <= 1);
  }
}

TEST_CASE("fold plans are seeded") {
  Rng rng(6);
  const auto y = random_labels(rng, 200, 0.5);
  CHECK(stratified_kfold(y, 10, 1).fold_of == stratified_kfold(y, 10, 1).fold_of);
  CHECK(stratified_kfold(y, 10, 1).fold_of != stratified_kfold(y, 10, 2).fold_of);
  const auto split = holdout_split(y, 3);
  CHECK(split.train.size() + split.test.size() == y.size());
  CHECK(split.test.size() == 40);
}

TEST_CASE("grid expansion order") {
  const Grid g{{"a", {"1", "2"}}, {"b", {"x", "y", "z"}}};
  const auto all = expand_grid(g);
  REQUIRE(all.size() == 6);
  CHECK(all[0] == ParamMap{{"a", "1"}, {"b", "x"}});
  CHECK(all[1] == ParamMap{{"a", "1"}, {"b", "y"}});
  CHECK(all[3] == ParamMap{{"a", "2"}, {"b", "x"}});
}

TEST_CASE("grid search: singleton, perfect config, mean of folds") {
  Matrix x;
  std::vector<int> y;
  planted(100, 2, 7, x, y);
  const auto plan = stratified_kfold(y, 5, 1);
  SearchOptions opts;

  const auto single = grid_search(ModelFamily::logistic, {{"c", {"25"}}}, x, y, plan, opts);
  REQUIRE(single.evaluated.size() == 1);
  CHECK(single.best.at("c") == "25");
  const auto& cs = single.evaluated[0];
  CHECK(cs.fold_scores.size() == 5);
  double mean = 0.0;
  for (const double v : cs.fold_scores) mean += v;
  CHECK(cs.mean == doctest::Approx(mean / 5.0).epsilon(1e-15));
  CHECK(single.best_score == cs.mean);

  const auto knn = grid_search(ModelFamily::knn, {{"n_neighbors", {"1", "5"}}}, x, y, plan, opts);
  CHECK(knn.best_score == 1.0);
  CHECK(knn.best.at("n_neighbors") == "1");  // tie with 5 keeps the earlier config
}

TEST_CASE("grid search scores a failing config as worst") {
  Matrix x;
  std::vector<int> y;
  planted(60, 1, 8, x, y);
  const auto plan = stratified_kfold(y, 3, 1);
  testing::WarningCapture capture;
  const auto r = grid_search(ModelFamily::knn, {{"n_neighbors", {"100", "3"}}}, x, y, plan, {});
  CHECK(r.evaluated[0].failed);
  CHECK(std::isinf(r.evaluated[0].mean));
  CHECK(r.best.at("n_neighbors") == "3");
  CHECK(capture.messages.size() == 1);
}

TEST_CASE("parallel search equals serial search") {
  Matrix x;
  std::vector<int> y;
  planted(120, 3, 9, x, y);
  const auto plan = stratified_kfold(y, 4, 2);
  SearchOptions serial;
  SearchOptions parallel;
  parallel.threads = 4;
  const auto grid = default_grid(ModelFamily::knn);
  const auto a = grid_search(ModelFamily::knn, grid, x, y, plan, serial);
  const auto b = grid_search(ModelFamily::knn, grid, x, y, plan, parallel);
  REQUIRE(a.evaluated.size() == b.evaluated.size());
  for (std::size_t i = 0; i < a.evaluated.size(); ++i) CHECK(a.evaluated[i].fold_scores == b.evaluated[i].fold_scores);
}

TEST_CASE("random search") {
  Matrix x;
  std::vector<int> y;
  planted(80, 2, 10, x, y);
  const auto plan = stratified_kfold(y, 4, 3);
  const Grid g{{"n_neighbors", {"1", "3", "5", "7"}}, {"p", {"1", "2"}}};
  const auto full = grid_search(ModelFamily::knn, g, x, y, plan, {});
  const auto exhaust = random_search(ModelFamily::knn, g, 50, 1, x, y, plan, {});
  REQUIRE(exhaust.evaluated.size() == full.evaluated.size());
  for (std::size_t i = 0; i < full.evaluated.size(); ++i) {
    CHECK(exhaust.evaluated[i].params == full.evaluated[i].params);
    CHECK(exhaust.evaluated[i].mean == full.evaluated[i].mean);
  }
  const auto a = random_search(ModelFamily::knn, g, 3, 11, x, y, plan, {});
  const auto b = random_search(ModelFamily::knn, g, 3, 11, x, y, plan, {});
  REQUIRE(a.evaluated.size() == 3);
  std::set<ParamMap> distinct;
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.evaluated[i].params == b.evaluated[i].params);
    distinct.insert(a.evaluated[i].params);
  }
  CHECK(distinct.size() == 3);
  const auto one = random_search(ModelFamily::knn, g, 1, 12, x, y, plan, {});
  REQUIRE(one.evaluated.size() == 1);
  CHECK(one.best == one.evaluated[0].params);
  CHECK_THROWS_AS(random_search(ModelFamily::knn, g, 0, 1, x, y, plan, {}), std::invalid_argument);
}

TEST_CASE("search table rows") {
  Matrix x;
  std::vector<int> y;
  planted(40, 1, 11, x, y);
  const auto plan = stratified_kfold(y, 2, 1);
  const auto r = grid_search(ModelFamily::knn, {{"n_neighbors", {"3"}}}, x, y, plan, {});
  const auto t = search_table("knn", r, Metric::roc_auc);
  CHECK(t.header == std::vector<std::string>{"model", "params", "fold", "metric", "value"});
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[2][2] == "mean");
  CHECK(t.rows[0][3] == "roc_auc");
  CHECK(parse_metric("accuracy") == Metric::accuracy);
  CHECK_THROWS_AS(parse_metric("f1"), std::invalid_argument);
}

TEST_CASE("ANOVA F matches the oracle") {
  Rng rng(12);
  for (int t = 0; t < 20; ++t) {
    Matrix x(20, 3);
    auto y = random_labels(rng, 20, 0.5);
    y[0] = 0;
    y[1] = 1;
    for (std::size_t i = 0; i < 20; ++i) {
      for (std::size_t j = 0; j < 3; ++j) x(i, j) = rng.normal() + (y[i] ? 0.5 * static_cast<double>(j) : 0.0);
    }
    const auto f = anova_f_scores(x, y);
    for (std::size_t j = 0; j < 3; ++j) {
      std::vector<double> col(20);
      for (std::size_t i = 0; i < 20; ++i) col[i] = x(i, j);
      CHECK(f[j] == doctest::Approx(oracle::anova_f(col, y)).epsilon(1e-12));
    }
  }
}

TEST_CASE("univariate selection") {
  Rng rng(13);
  Matrix x(50, 3);
  std::vector<int> y(50);
  for (std::size_t i = 0; i < 50; ++i) {
    y[i] = static_cast<int>(i % 2);
    x(i, 0) = rng.normal();
    x(i, 1) = y[i];
    x(i, 2) = 4.0;  // constant column
  }
  const auto f = anova_f_scores(x, y);
  CHECK(std::isinf(f[1]));
  CHECK(f[2] == 0.0);
  CHECK(univariate_select(x, y, 1) == std::vector<std::size_t>{1});
  CHECK(univariate_select(x, y, 3) == std::vector<std::size_t>{1, 0, 2});
  CHECK_THROWS_AS(univariate_select(x, y, 0), std::invalid_argument);
  CHECK_THROWS_AS(univariate_select(x, y, 4), std::invalid_argument);
}

TEST_CASE("recursive feature elimination") {
  Matrix x;
  std::vector<int> y;
  planted(200, 3, 14, x, y);
  const auto none = rfe(x, y, 4);
  CHECK(none.selected == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(none.eliminated.empty());

  const auto one = rfe(x, y, 1);
  CHECK(one.selected == std::vector<std::size_t>{0});
  CHECK(one.eliminated.size() == 3);

  Matrix wide;
  planted(200, 6, 15, wide, y);
  const auto stepped = rfe(wide, y, 2, 2);
  CHECK(stepped.eliminated.size() == 3);  // ceil((7 - 2) / 2)
  CHECK(stepped.selected.size() == 2);
  CHECK(std::find(stepped.selected.begin(), stepped.selected.end(), 0) != stepped.selected.end());
  CHECK_THROWS_AS(rfe(x, y, 0), std::invalid_argument);
}

TEST_CASE("RFE aborts on a degenerate fit") {
  Matrix x(40, 2);
  std::vector<int> y(40);
  for (std::size_t i = 0; i < 40; ++i) {
    y[i] = static_cast<int>(i % 2);
    x(i, 0) = static_cast<double>(i / 2 % 2);  // unrelated to the label
    x(i, 1) = static_cast<double>(i / 2 % 2);
  }
  CHECK_THROWS_AS(rfe(x, y, 1, 1, 0.001), DataError);
}

TEST_CASE("evaluate_metric on a fitted model") {
  Matrix x;
  std::vector<int> y;
  planted(100, 1, 16, x, y);
  Classifier m(ModelFamily::logistic, tuned_preset(ModelFamily::logistic));
  m.fit(x, y);
  CHECK(evaluate_metric(m, x, y, Metric::roc_auc) > 0.99);
  CHECK(evaluate_metric(m, x, y, Metric::accuracy) > 0.95);
}
