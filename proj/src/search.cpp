#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "churn/error.hpp"
#include "churn/evaluation.hpp"
#include "churn/rng.hpp"

namespace churn {

namespace {

std::vector<int> select_labels(std::span<const int> labels, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (const auto i : idx) out.push_back(labels[i]);
  return out;
}

ParamMap merged(const ParamMap& base, const ParamMap& config) {
  ParamMap out = base;
  for (const auto& [k, v] : config) out[k] = v;
  return out;
}

SearchResult run_configs(ModelFamily family, std::vector<ParamMap> configs, const Matrix& x,
                         std::span<const int> labels, const CvPlan& plan,
                         const SearchOptions& options) {
  if (configs.empty()) throw std::invalid_argument("empty search grid");
  SearchResult result;
  result.evaluated.resize(configs.size());
  std::vector<std::string> failures(configs.size());

  // With several configurations the workers go to configurations; a single
  // configuration hands them to the model instead.
  const unsigned workers =
      std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(configs.size())));
  SearchOptions inner = options;
  inner.threads = workers > 1 ? 1 : options.threads;

  auto run = [&](std::size_t c) {
    auto& entry = result.evaluated[c];
    entry.params = configs[c];
    try {
      entry.fold_scores = cross_validate(family, merged(options.base, configs[c]), x, labels, plan, inner);
      entry.mean = std::accumulate(entry.fold_scores.begin(), entry.fold_scores.end(), 0.0) /
                   static_cast<double>(entry.fold_scores.size());
    } catch (const std::exception& e) {
      entry.failed = true;
      entry.fold_scores.clear();
      entry.mean = -std::numeric_limits<double>::infinity();
      failures[c] = e.what();
    }
  };
  if (workers == 1) {
    for (std::size_t c = 0; c < configs.size(); ++c) run(c);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t c = w; c < configs.size(); c += workers) run(c);
      });
    }
    for (auto& t : pool) t.join();
  }

  for (std::size_t c = 0; c < configs.size(); ++c) {
    const auto& entry = result.evaluated[c];
    if (entry.failed) {
      warn("search: " + family_name(family) + " {" + format_params(entry.params) +
           "} failed: " + failures[c]);
    }
    if (c == 0 || entry.mean > result.best_score) {
      result.best_score = entry.mean;
      result.best = entry.params;
    }
  }
  return result;
}

}  // namespace

std::vector<ParamMap> expand_grid(const Grid& grid) {
  std::vector<ParamMap> out{ParamMap{}};
  for (const auto& [name, values] : grid) {
    if (values.empty()) throw std::invalid_argument("grid parameter '" + name + "' has no values");
    std::vector<ParamMap> next;
    next.reserve(out.size() * values.size());
    for (const auto& partial : out) {
      for (const auto& v : values) {
        auto p = partial;
        p[name] = v;
        next.push_back(std::move(p));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::vector<double> cross_validate(ModelFamily family, const ParamMap& params, const Matrix& x,
                                   std::span<const int> labels, const CvPlan& plan,
                                   const SearchOptions& options) {
  if (plan.fold_of.size() != x.rows() || labels.size() != x.rows()) {
    throw std::invalid_argument("cross-validation plan does not match the data");
  }
  std::vector<double> scores;
  for (int fold = 0; fold < plan.k; ++fold) {
    const auto train = plan.train_indices(fold);
    const auto valid = plan.validation_indices(fold);
    Classifier model(family, params, options.seed, options.threads);
    model.fit(x.select_rows(train), select_labels(labels, train));
    scores.push_back(
        evaluate_metric(model, x.select_rows(valid), select_labels(labels, valid), options.metric));
  }
  return scores;
}

SearchResult grid_search(ModelFamily family, const Grid& grid, const Matrix& x,
                         std::span<const int> labels, const CvPlan& plan,
                         const SearchOptions& options) {
  if (grid.empty()) throw std::invalid_argument("empty search grid");
  return run_configs(family, expand_grid(grid), x, labels, plan, options);
}

SearchResult random_search(ModelFamily family, const Grid& grid, int n_iter,
                           std::uint64_t sample_seed, const Matrix& x,
                           std::span<const int> labels, const CvPlan& plan,
                           const SearchOptions& options) {
  if (n_iter < 1) throw std::invalid_argument("n_iter must be >= 1");
  if (grid.empty()) throw std::invalid_argument("empty search grid");
  auto all = expand_grid(grid);
  if (static_cast<std::size_t>(n_iter) >= all.size()) {
    return run_configs(family, std::move(all), x, labels, plan, options);
  }
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(sample_seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<ParamMap> picked;
  for (int i = 0; i < n_iter; ++i) picked.push_back(all[order[static_cast<std::size_t>(i)]]);
  return run_configs(family, std::move(picked), x, labels, plan, options);
}

CsvTable search_table(const std::string& model, const SearchResult& result, Metric metric) {
  CsvTable t;
  t.header = {"model", "params", "fold", "metric", "value"};
  const auto name = metric_name(metric);
  for (const auto& entry : result.evaluated) {
    const auto params = format_params(entry.params);
    for (std::size_t f = 0; f < entry.fold_scores.size(); ++f) {
      t.rows.push_back({model, params, std::to_string(f), name, format_double(entry.fold_scores[f])});
    }
    t.rows.push_back({model, params, "mean", name, format_double(entry.mean)});
  }
  return t;
}

}  // namespace churn
