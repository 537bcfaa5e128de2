#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "churn/learners.hpp"
#include "churn/matrix.hpp"

namespace churn {

enum class ModelFamily { logistic, svm, knn, forest };

// Accepts lr/logistic, svm, knn, rf/forest.
ModelFamily parse_family(std::string_view name);
std::string family_name(ModelFamily family);  // lr, svm, knn, rf

using ParamMap = std::map<std::string, std::string>;

// Ordered parameter name -> candidate values.
using Grid = std::vector<std::pair<std::string, std::vector<std::string>>>;

// Tuned settings: lr C=25 with L1; svm linear C=0.009; knn 24 neighbours,
// p=1, leaf_size=2; rf 300 entropy trees, max_features 4, unlimited depth,
// min_samples_split 15, bootstrap.
ParamMap tuned_preset(ModelFamily family);
ParamMap default_params(ModelFamily family);
Grid default_grid(ModelFamily family);

// "k=v k=v" in key order.
std::string format_params(const ParamMap& params);

// A fitted model plus its input standardization. Linear models and KNN see
// standardized features; the forest sees raw features.
class Classifier {
 public:
  // Validates params; throws std::invalid_argument on unknown names or bad
  // values.
  Classifier(ModelFamily family, ParamMap params, std::uint64_t seed = 0, unsigned threads = 1);

  void fit(const Matrix& x, std::span<const int> labels);

  // Positive-class probability (lr, knn, rf) or signed decision value (svm).
  double score(std::span<const double> row) const;
  std::vector<double> scores(const Matrix& x) const;

  // Cut used to turn scores into labels: 0 for svm, `probability_threshold`
  // otherwise.
  double label_threshold(double probability_threshold = 0.5) const;
  int predict(std::span<const double> row, double probability_threshold = 0.5) const;

  ModelFamily family() const { return family_; }
  const ParamMap& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }
  bool fitted() const { return !std::holds_alternative<std::monostate>(state_); }

  // Only meaningful for the matching family.
  const LinearModel* linear() const { return std::get_if<LinearModel>(&state_); }
  const Forest* forest() const { return std::get_if<Forest>(&state_); }
  const Standardizer& standardizer() const { return standardizer_; }

  // Versioned text format: one header line "churn-model 1 kind=<k>
  // seed=<s> <params...>", then the standardizer and model parameters.
  // Doubles are written in shortest round-trip form.
  void save(std::ostream& out) const;
  static Classifier load(std::istream& in);

 private:
  struct KnnState {
    Matrix train;
    std::vector<int> labels;
  };

  std::vector<double> prepare(std::span<const double> row) const;

  ModelFamily family_;
  ParamMap params_;
  std::uint64_t seed_;
  unsigned threads_;
  bool use_standardizer_ = true;
  Standardizer standardizer_;
  std::variant<std::monostate, LinearModel, KnnState, Forest> state_;
};

}  // namespace churn
