#include "churn/classifier.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "churn/csv.hpp"
#include "churn/error.hpp"

namespace churn {

namespace {

const char* const kMagic = "churn-model";
constexpr int kFormatVersion = 1;

double parse_double_param(const std::string& name, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("parameter " + name + ": not a number: '" + value + "'");
  }
  return out;
}

long long parse_int_param(const std::string& name, const std::string& value) {
  long long out = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("parameter " + name + ": not an integer: '" + value + "'");
  }
  return out;
}

bool parse_bool_param(const std::string& name, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("parameter " + name + ": expected true/false, got '" + value + "'");
}

LogisticOptions logistic_options(const ParamMap& p) {
  LogisticOptions o;
  o.c = parse_double_param("c", p.at("c"));
  o.tolerance = parse_double_param("tolerance", p.at("tolerance"));
  o.max_sweeps = static_cast<int>(parse_int_param("max_iter", p.at("max_iter")));
  if (!(o.c > 0.0)) throw std::invalid_argument("parameter c must be > 0");
  if (!(o.tolerance > 0.0)) throw std::invalid_argument("parameter tolerance must be > 0");
  if (o.max_sweeps < 1) throw std::invalid_argument("parameter max_iter must be >= 1");
  if (p.at("penalty") != "l1") throw std::invalid_argument("only penalty=l1 is supported");
  return o;
}

SvmOptions svm_options(const ParamMap& p) {
  SvmOptions o;
  o.c = parse_double_param("c", p.at("c"));
  o.tolerance = parse_double_param("tolerance", p.at("tolerance"));
  o.max_epochs = static_cast<int>(parse_int_param("max_iter", p.at("max_iter")));
  if (!(o.c > 0.0)) throw std::invalid_argument("parameter c must be > 0");
  if (!(o.tolerance > 0.0)) throw std::invalid_argument("parameter tolerance must be > 0");
  if (o.max_epochs < 1) throw std::invalid_argument("parameter max_iter must be >= 1");
  if (p.at("kernel") != "linear") throw std::invalid_argument("only kernel=linear is supported");
  return o;
}

struct KnnOptions {
  int k = 5;
  double p = 2.0;
};

KnnOptions knn_options(const ParamMap& p) {
  KnnOptions o;
  o.k = static_cast<int>(parse_int_param("n_neighbors", p.at("n_neighbors")));
  o.p = parse_double_param("p", p.at("p"));
  const auto leaf = parse_int_param("leaf_size", p.at("leaf_size"));
  if (o.k < 1) throw std::invalid_argument("parameter n_neighbors must be >= 1");
  if (!(o.p >= 1.0)) throw std::invalid_argument("parameter p must be >= 1");
  if (leaf < 1) throw std::invalid_argument("parameter leaf_size must be >= 1");
  return o;
}

ForestParams forest_params(const ParamMap& p) {
  ForestParams o;
  o.n_estimators = static_cast<int>(parse_int_param("n_estimators", p.at("n_estimators")));
  const auto& crit = p.at("criterion");
  if (crit == "gini") {
    o.criterion = Criterion::gini;
  } else if (crit == "entropy") {
    o.criterion = Criterion::entropy;
  } else {
    throw std::invalid_argument("parameter criterion must be gini or entropy");
  }
  const auto& mf = p.at("max_features");
  o.max_features = mf == "all" ? 0 : static_cast<int>(parse_int_param("max_features", mf));
  const auto& md = p.at("max_depth");
  o.max_depth = md == "none" ? 0 : static_cast<int>(parse_int_param("max_depth", md));
  o.min_samples_split =
      static_cast<int>(parse_int_param("min_samples_split", p.at("min_samples_split")));
  o.bootstrap = parse_bool_param("bootstrap", p.at("bootstrap"));
  if (o.n_estimators < 1) throw std::invalid_argument("parameter n_estimators must be >= 1");
  if (o.max_features < 0 || (mf != "all" && o.max_features == 0)) {
    throw std::invalid_argument("parameter max_features must be >= 1 or 'all'");
  }
  if (md != "none" && o.max_depth < 1) {
    throw std::invalid_argument("parameter max_depth must be >= 1 or 'none'");
  }
  if (o.min_samples_split < 2) throw std::invalid_argument("parameter min_samples_split must be >= 2");
  return o;
}

void validate(ModelFamily family, const ParamMap& p) {
  switch (family) {
    case ModelFamily::logistic: logistic_options(p); break;
    case ModelFamily::svm: svm_options(p); break;
    case ModelFamily::knn: knn_options(p); break;
    case ModelFamily::forest: forest_params(p); break;
  }
}

void write_vector(std::ostream& out, const char* tag, std::span<const double> v) {
  out << tag;
  for (const double x : v) out << ' ' << format_double(x);
  out << '\n';
}

// Reads the next line and splits on single spaces.
std::vector<std::string> read_fields(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(std::string("model file truncated before ") + what);
  std::vector<std::string> fields;
  std::istringstream ss(line);
  std::string f;
  while (ss >> f) fields.push_back(f);
  if (fields.empty()) throw DataError(std::string("model file: empty line at ") + what);
  return fields;
}

double field_double(const std::string& s) {
  double out = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  if (ec != std::errc() || ptr != end) throw DataError("model file: bad number '" + s + "'");
  return out;
}

long long field_int(const std::string& s) {
  long long out = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  if (ec != std::errc() || ptr != end) throw DataError("model file: bad integer '" + s + "'");
  return out;
}

std::vector<double> read_vector(std::istream& in, const char* tag, std::size_t expected) {
  const auto fields = read_fields(in, tag);
  if (fields[0] != tag || fields.size() != expected + 1) {
    throw DataError(std::string("model file: malformed '") + tag + "' line");
  }
  std::vector<double> v;
  for (std::size_t i = 1; i < fields.size(); ++i) v.push_back(field_double(fields[i]));
  return v;
}

}  // namespace

ModelFamily parse_family(std::string_view name) {
  if (name == "lr" || name == "logistic") return ModelFamily::logistic;
  if (name == "svm") return ModelFamily::svm;
  if (name == "knn") return ModelFamily::knn;
  if (name == "rf" || name == "forest") return ModelFamily::forest;
  throw std::invalid_argument("unknown model family '" + std::string(name) + "'");
}

std::string family_name(ModelFamily family) {
  switch (family) {
    case ModelFamily::logistic: return "lr";
    case ModelFamily::svm: return "svm";
    case ModelFamily::knn: return "knn";
    case ModelFamily::forest: return "rf";
  }
  return "?";
}

ParamMap default_params(ModelFamily family) {
  switch (family) {
    case ModelFamily::logistic:
      return {{"c", "1"}, {"penalty", "l1"}, {"tolerance", "1e-06"}, {"max_iter", "10000"}};
    case ModelFamily::svm:
      return {{"c", "1"}, {"kernel", "linear"}, {"tolerance", "1e-06"}, {"max_iter", "20000"}};
    case ModelFamily::knn:
      return {{"n_neighbors", "5"}, {"p", "2"}, {"leaf_size", "30"}};
    case ModelFamily::forest:
      return {{"n_estimators", "100"}, {"criterion", "gini"},    {"max_features", "all"},
              {"max_depth", "none"},  {"min_samples_split", "2"}, {"bootstrap", "true"}};
  }
  return {};
}

ParamMap tuned_preset(ModelFamily family) {
  ParamMap p = default_params(family);
  switch (family) {
    case ModelFamily::logistic: p["c"] = "25"; break;
    case ModelFamily::svm: p["c"] = "0.009"; break;
    case ModelFamily::knn:
      p["n_neighbors"] = "24";
      p["p"] = "1";
      p["leaf_size"] = "2";
      break;
    case ModelFamily::forest:
      p["n_estimators"] = "300";
      p["criterion"] = "entropy";
      p["max_features"] = "4";
      p["max_depth"] = "none";
      p["min_samples_split"] = "15";
      p["bootstrap"] = "true";
      break;
  }
  return p;
}

Grid default_grid(ModelFamily family) {
  switch (family) {
    case ModelFamily::logistic: return {{"c", {"0.01", "0.1", "1", "10", "25", "100"}}};
    case ModelFamily::svm: return {{"c", {"0.001", "0.009", "0.1", "1"}}};
    case ModelFamily::knn: return {{"n_neighbors", {"5", "12", "24", "48"}}, {"p", {"1", "2"}}};
    case ModelFamily::forest:
      return {{"n_estimators", {"100", "300"}},
              {"criterion", {"gini", "entropy"}},
              {"max_features", {"2", "4"}},
              {"min_samples_split", {"2", "15"}},
              {"max_depth", {"none", "10"}}};
  }
  return {};
}

std::string format_params(const ParamMap& params) {
  std::string out;
  for (const auto& [k, v] : params) {
    if (!out.empty()) out += ' ';
    out += k + '=' + v;
  }
  return out;
}

Classifier::Classifier(ModelFamily family, ParamMap params, std::uint64_t seed, unsigned threads)
    : family_(family), seed_(seed), threads_(std::max(1u, threads)) {
  params_ = default_params(family);
  for (auto& [k, v] : params) {
    auto it = params_.find(k);
    if (it == params_.end()) {
      throw std::invalid_argument("unknown parameter '" + k + "' for model " + family_name(family));
    }
    it->second = std::move(v);
  }
  validate(family_, params_);
  use_standardizer_ = family_ != ModelFamily::forest;
}

void Classifier::fit(const Matrix& x, std::span<const int> labels) {
  if (labels.size() != x.rows()) throw std::invalid_argument("label count mismatch");
  if (x.rows() < 2) throw std::invalid_argument("need at least 2 training rows");
  if (use_standardizer_) {
    standardizer_ = standardize_fit(x);
  } else {
    standardizer_.mean.assign(x.cols(), 0.0);
    standardizer_.scale.assign(x.cols(), 1.0);
  }
  switch (family_) {
    case ModelFamily::logistic:
      state_ = fit_logistic_l1(standardize_apply(standardizer_, x), labels, logistic_options(params_));
      break;
    case ModelFamily::svm:
      state_ = fit_linear_svm(standardize_apply(standardizer_, x), labels, svm_options(params_));
      break;
    case ModelFamily::knn: {
      const auto opt = knn_options(params_);
      if (static_cast<std::size_t>(opt.k) > x.rows()) {
        throw std::invalid_argument("n_neighbors exceeds the number of training rows");
      }
      state_ = KnnState{standardize_apply(standardizer_, x), {labels.begin(), labels.end()}};
      break;
    }
    case ModelFamily::forest:
      state_ = fit_random_forest(x, labels, forest_params(params_), seed_, threads_);
      break;
  }
}

std::vector<double> Classifier::prepare(std::span<const double> row) const {
  if (row.size() != standardizer_.mean.size()) throw std::invalid_argument("row width mismatch");
  std::vector<double> out(row.size());
  standardize_row(standardizer_, row, out);
  return out;
}

double Classifier::score(std::span<const double> row) const {
  if (!fitted()) throw std::logic_error("classifier used before fit");
  const auto z = prepare(row);
  if (const auto* lin = std::get_if<LinearModel>(&state_)) {
    return lin->kind == LinearKind::svm ? lin->decision(z) : predict_proba(*lin, z);
  }
  if (const auto* knn = std::get_if<KnnState>(&state_)) {
    const auto opt = knn_options(params_);
    return knn_predict(knn->train, knn->labels, z, opt.k, opt.p).positive_fraction;
  }
  return forest_proba(std::get<Forest>(state_), z);
}

std::vector<double> Classifier::scores(const Matrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = score(x.row(i));
  return out;
}

double Classifier::label_threshold(double probability_threshold) const {
  return family_ == ModelFamily::svm ? 0.0 : probability_threshold;
}

int Classifier::predict(std::span<const double> row, double probability_threshold) const {
  const double s = score(row);
  // Strict majority for vote-based scores keeps even splits at label 0.
  if (family_ == ModelFamily::svm) return s >= 0.0 ? 1 : 0;
  return s > probability_threshold ? 1 : 0;
}

void Classifier::save(std::ostream& out) const {
  if (!fitted()) throw std::logic_error("cannot save an unfitted classifier");
  out << kMagic << ' ' << kFormatVersion << " kind=" << family_name(family_) << " seed=" << seed_;
  for (const auto& [k, v] : params_) out << ' ' << k << '=' << v;
  out << '\n';
  out << "standardizer " << standardizer_.mean.size() << '\n';
  write_vector(out, "mean", standardizer_.mean);
  write_vector(out, "scale", standardizer_.scale);

  if (const auto* lin = std::get_if<LinearModel>(&state_)) {
    write_vector(out, "weights", lin->weights);
    out << "intercept " << format_double(lin->intercept) << '\n';
  } else if (const auto* knn = std::get_if<KnnState>(&state_)) {
    out << "train " << knn->train.rows() << '\n';
    for (std::size_t i = 0; i < knn->train.rows(); ++i) {
      out << knn->labels[i];
      for (const double v : knn->train.row(i)) out << ' ' << format_double(v);
      out << '\n';
    }
  } else {
    const auto& forest = std::get<Forest>(state_);
    out << "forest " << forest.trees.size() << ' ' << forest.params.max_features << '\n';
    for (const auto& tree : forest.trees) {
      out << "tree " << tree.nodes.size() << '\n';
      for (const auto& n : tree.nodes) {
        out << n.feature << ' ' << format_double(n.threshold) << ' ' << n.left << ' ' << n.right
            << ' ' << n.counts[0] << ' ' << n.counts[1] << '\n';
      }
    }
  }
  if (!out) throw std::runtime_error("failed writing model");
}

Classifier Classifier::load(std::istream& in) {
  const auto header = read_fields(in, "header");
  if (header.size() < 4 || header[0] != kMagic) throw DataError("not a churn model file");
  if (field_int(header[1]) != kFormatVersion) {
    throw DataError("unsupported model format version " + header[1]);
  }
  ParamMap params;
  std::string kind;
  std::uint64_t seed = 0;
  for (std::size_t i = 2; i < header.size(); ++i) {
    const auto eq = header[i].find('=');
    if (eq == std::string::npos) throw DataError("model header: malformed field " + header[i]);
    const auto key = header[i].substr(0, eq), value = header[i].substr(eq + 1);
    if (key == "kind") {
      kind = value;
    } else if (key == "seed") {
      seed = static_cast<std::uint64_t>(std::stoull(value));
    } else {
      params[key] = value;
    }
  }
  ModelFamily family;
  try {
    family = parse_family(kind);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("model header: ") + e.what());
  }
  Classifier c = [&] {
    try {
      return Classifier(family, params, seed);
    } catch (const std::invalid_argument& e) {
      throw DataError(std::string("model header: ") + e.what());
    }
  }();

  const auto sz = read_fields(in, "standardizer");
  if (sz.size() != 2 || sz[0] != "standardizer") throw DataError("model file: missing standardizer");
  const auto p = static_cast<std::size_t>(field_int(sz[1]));
  c.standardizer_.mean = read_vector(in, "mean", p);
  c.standardizer_.scale = read_vector(in, "scale", p);

  switch (family) {
    case ModelFamily::logistic:
    case ModelFamily::svm: {
      LinearModel m;
      m.kind = family == ModelFamily::svm ? LinearKind::svm : LinearKind::logistic;
      m.weights = read_vector(in, "weights", p);
      m.intercept = read_vector(in, "intercept", 1)[0];
      c.state_ = std::move(m);
      break;
    }
    case ModelFamily::knn: {
      const auto h = read_fields(in, "train");
      if (h.size() != 2 || h[0] != "train") throw DataError("model file: missing train block");
      const auto rows = static_cast<std::size_t>(field_int(h[1]));
      KnnState s{Matrix(rows, p), {}};
      for (std::size_t i = 0; i < rows; ++i) {
        const auto f = read_fields(in, "train row");
        if (f.size() != p + 1) throw DataError("model file: train row width mismatch");
        s.labels.push_back(static_cast<int>(field_int(f[0])));
        for (std::size_t j = 0; j < p; ++j) s.train(i, j) = field_double(f[j + 1]);
      }
      c.state_ = std::move(s);
      break;
    }
    case ModelFamily::forest: {
      const auto h = read_fields(in, "forest");
      if (h.size() != 3 || h[0] != "forest") throw DataError("model file: missing forest block");
      Forest f;
      f.params = forest_params(c.params_);
      f.params.max_features = static_cast<int>(field_int(h[2]));
      f.seed = seed;
      f.n_features = p;
      f.trees.resize(static_cast<std::size_t>(field_int(h[1])));
      for (auto& tree : f.trees) {
        const auto th = read_fields(in, "tree");
        if (th.size() != 2 || th[0] != "tree") throw DataError("model file: missing tree header");
        const auto count = static_cast<std::size_t>(field_int(th[1]));
        if (count == 0) throw DataError("model file: empty tree");
        tree.nodes.resize(count);
        for (auto& n : tree.nodes) {
          const auto nf = read_fields(in, "node");
          if (nf.size() != 6) throw DataError("model file: malformed node");
          n.feature = static_cast<int>(field_int(nf[0]));
          n.threshold = field_double(nf[1]);
          n.left = static_cast<int>(field_int(nf[2]));
          n.right = static_cast<int>(field_int(nf[3]));
          n.counts = {static_cast<std::uint32_t>(field_int(nf[4])),
                      static_cast<std::uint32_t>(field_int(nf[5]))};
          const auto limit = static_cast<long long>(count);
          if (n.feature >= static_cast<int>(p) ||
              (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= limit || n.right >= limit))) {
            throw DataError("model file: node references out of range");
          }
        }
      }
      c.state_ = std::move(f);
      break;
    }
  }
  return c;
}

}  // namespace churn
