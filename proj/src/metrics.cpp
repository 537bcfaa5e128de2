#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "churn/evaluation.hpp"
#include "churn/rng.hpp"

namespace churn {

namespace {

void check_binary(std::span<const int> labels) {
  for (const int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0 or 1");
  }
}

}  // namespace

std::optional<double> ConfusionMatrix::tpr() const {
  if (tp + fn == 0) return std::nullopt;
  return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

std::optional<double> ConfusionMatrix::fpr() const {
  if (fp + tn == 0) return std::nullopt;
  return static_cast<double>(fp) / static_cast<double>(fp + tn);
}

double ConfusionMatrix::accuracy() const {
  if (total() == 0) return 0.0;
  return static_cast<double>(tp + tn) / static_cast<double>(total());
}

ConfusionMatrix confusion(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size()) {
    throw std::invalid_argument("labels and predictions differ in length");
  }
  check_binary(labels);
  check_binary(predictions);
  ConfusionMatrix m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      (predictions[i] == 1 ? m.tp : m.fn)++;
    } else {
      (predictions[i] == 1 ? m.fp : m.tn)++;
    }
  }
  return m;
}

std::vector<int> threshold_scores(std::span<const double> scores, double threshold) {
  std::vector<int> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > threshold ? 1 : 0;
  return out;
}

RocCurve roc_auc(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw std::invalid_argument("labels and scores differ in length");
  check_binary(labels);
  std::size_t pos = 0;
  for (const int y : labels) pos += y == 1;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw std::invalid_argument("ROC needs both classes");
  for (const double s : scores) {
    if (std::isnan(s)) throw std::invalid_argument("NaN score");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve roc;
  roc.thresholds.push_back(std::numeric_limits<double>::infinity());
  roc.fpr.push_back(0.0);
  roc.tpr.push_back(0.0);
  // Twice the pair-count area, kept integral until the final division.
  double twice_area = 0.0;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    const std::size_t tp_prev = tp, fp_prev = fp;
    for (; i < order.size() && scores[order[i]] == s; ++i) {
      (labels[order[i]] == 1 ? tp : fp)++;
    }
    twice_area += static_cast<double>(fp - fp_prev) * static_cast<double>(tp + tp_prev);
    roc.thresholds.push_back(s);
    roc.fpr.push_back(static_cast<double>(fp) / static_cast<double>(neg));
    roc.tpr.push_back(static_cast<double>(tp) / static_cast<double>(pos));
  }
  roc.auc = twice_area / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
  return roc;
}

CsvTable roc_table(const RocCurve& roc) {
  CsvTable t;
  t.header = {"threshold", "fpr", "tpr"};
  for (std::size_t i = 0; i < roc.thresholds.size(); ++i) {
    t.rows.push_back(
        {format_double(roc.thresholds[i]), format_double(roc.fpr[i]), format_double(roc.tpr[i])});
  }
  return t;
}

std::vector<std::size_t> CvPlan::train_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> CvPlan::validation_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) out.push_back(i);
  }
  return out;
}

CvPlan stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("k must be >= 2");
  check_binary(labels);
  std::vector<std::size_t> members[2];
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  for (const auto& m : members) {
    if (m.size() < static_cast<std::size_t>(k)) {
      throw std::invalid_argument("a class has fewer members than folds");
    }
  }
  CvPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.fold_of.assign(labels.size(), -1);
  std::size_t offset = 0;
  for (int cls = 0; cls < 2; ++cls) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(cls)));
    rng.shuffle(std::span<std::size_t>(members[cls]));
    for (const auto idx : members[cls]) {
      plan.fold_of[idx] = static_cast<int>(offset % static_cast<std::size_t>(k));
      ++offset;
    }
  }
  return plan;
}

HoldoutSplit holdout_split(std::span<const int> labels, std::uint64_t seed) {
  const auto plan = stratified_kfold(labels, 5, seed);
  return {plan.train_indices(0), plan.validation_indices(0)};
}

Metric parse_metric(std::string_view name) {
  if (name == "roc_auc" || name == "auc") return Metric::roc_auc;
  if (name == "accuracy") return Metric::accuracy;
  throw std::invalid_argument("unknown metric '" + std::string(name) + "'");
}

std::string metric_name(Metric metric) {
  return metric == Metric::roc_auc ? "roc_auc" : "accuracy";
}

double evaluate_metric(const Classifier& model, const Matrix& x, std::span<const int> labels,
                       Metric metric, double probability_threshold) {
  const auto s = model.scores(x);
  if (metric == Metric::roc_auc) return roc_auc(labels, s).auc;
  std::vector<int> pred(s.size());
  const bool svm = model.family() == ModelFamily::svm;
  for (std::size_t i = 0; i < s.size(); ++i) {
    pred[i] = svm ? (s[i] >= 0.0 ? 1 : 0) : (s[i] > probability_threshold ? 1 : 0);
  }
  return confusion(labels, pred).accuracy();
}

}  // namespace churn
