#include "churn/app.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "churn/classifier.hpp"
#include "churn/error.hpp"
#include "churn/evaluation.hpp"
#include "churn/profile.hpp"
#include "churn/report.hpp"
#include "churn/rng.hpp"
#include "churn/survival.hpp"
#include "churn/synth.hpp"
#include "churn/trace.hpp"

namespace churn {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Seed streams derived from the master seed.
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kCvStream = 2;
constexpr std::uint64_t kModelStream = 3;
constexpr std::uint64_t kSearchStream = 4;
constexpr std::uint64_t kClusterStream = 5;

// Raw command-line values. Empty/zero means "not given"; CLI11's count()
// decides presence for the few options where zero is meaningful.
struct Flags {
  std::string config;
  std::vector<std::string> inputs;
  std::string out_dir;
  unsigned threads = 1;
  std::uint64_t seed = 0;
  int gap_days = 0;
  int trial_days = 0;
  std::string window_start, window_end;
  std::string features_file;
  // survival
  std::vector<int> gaps;
  // train / evaluate
  std::vector<std::string> models;
  std::string preset;
  std::string search;
  int n_iter = 0;
  int cv_folds = 0;
  std::string metric;
  std::vector<std::string> params;
  double threshold = 0.5;
  std::string model_file;
  int clusters = 0;
  int select_k = 0;
  // synth
  std::string synth_preset;
  std::size_t players = 0;
  int join_spread = -1;
};

const json* lookup(const json& cfg, std::initializer_list<const char*> path) {
  const json* node = &cfg;
  for (const char* key : path) {
    if (!node->is_object()) return nullptr;
    auto it = node->find(key);
    if (it == node->end()) return nullptr;
    node = &*it;
  }
  return node;
}

template <typename T>
T config_value(const json& cfg, std::initializer_list<const char*> path, T fallback) {
  const json* node = lookup(cfg, path);
  if (!node || node->is_null()) return fallback;
  try {
    return node->get<T>();
  } catch (const json::exception& e) {
    std::string key;
    for (const char* k : path) key += (key.empty() ? "" : ".") + std::string(k);
    throw std::invalid_argument("config key '" + key + "': " + e.what());
  }
}

Instant parse_instant_arg(const std::string& text, const char* what) {
  const auto t = parse_timestamp(text, TimestampFormat::iso);
  if (!t) throw std::invalid_argument(std::string(what) + ": expected 'YYYY-MM-DD HH:MM:SS', got '" + text + "'");
  return *t;
}

std::string param_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_null()) return "none";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return format_double(v.get<double>());
  throw std::invalid_argument("model parameter values must be scalars");
}

// Everything a command needs, resolved with precedence flag > config > default.
struct Context {
  std::string command;
  Flags flags;
  const CLI::App* sub = nullptr;
  json config = json::object();
  json effective = json::object();  // hashed into the manifest
  fs::path out_dir;
  unsigned threads = 1;
  std::uint64_t seed = 42;
  Window window = default_window();
  Schema schema = default_schema();
  int gap_days = 180;
  int trial_days = 30;
  DensityMode density = DensityMode::calendar;
  std::vector<std::string> features = default_feature_spec();
  std::vector<std::pair<std::string, std::string>> artifacts;  // name, sha256

  bool given(const char* option) const {
    const auto* opt = sub ? sub->get_option_no_throw(option) : nullptr;
    return opt && opt->count() > 0;
  }

  void load() {
    if (!flags.config.empty()) {
      std::ifstream in(flags.config);
      if (!in) throw DataError("cannot read config file " + flags.config);
      try {
        config = json::parse(in);
      } catch (const json::exception& e) {
        throw DataError("config file " + flags.config + ": " + e.what());
      }
      if (!config.is_object()) throw DataError("config file " + flags.config + ": top level must be an object");
    }
    out_dir = given("--out") ? flags.out_dir : config_value<std::string>(config, {"output_dir"}, "out");
    threads = given("--threads") ? flags.threads : config_value<unsigned>(config, {"threads"}, 1u);
    if (threads == 0) throw std::invalid_argument("--threads must be >= 1");
    seed = given("--seed") ? flags.seed : config_value<std::uint64_t>(config, {"seed"}, 42);
    gap_days = given("--gap-days") ? flags.gap_days : config_value<int>(config, {"gap_days"}, 180);
    trial_days = given("--trial-days") ? flags.trial_days : config_value<int>(config, {"trial_days"}, 30);
    if (gap_days <= 0) throw std::invalid_argument("gap_days must be positive");
    if (trial_days < 0) throw std::invalid_argument("trial_days must be >= 0");

    const auto start = given("--window-start") ? flags.window_start
                                               : config_value<std::string>(config, {"window", "start"}, "");
    const auto end = given("--window-end") ? flags.window_end
                                           : config_value<std::string>(config, {"window", "end"}, "");
    if (!start.empty()) window.start = parse_instant_arg(start, "window start");
    if (!end.empty()) window.end = parse_instant_arg(end, "window end");
    if (window.start > window.end) throw std::invalid_argument("window start is after window end");

    const auto density_name = config_value<std::string>(config, {"density"}, "calendar");
    if (density_name == "calendar") {
      density = DensityMode::calendar;
    } else if (density_name == "per_slot") {
      density = DensityMode::per_slot;
    } else {
      throw std::invalid_argument("density must be calendar or per_slot");
    }
    features = config_value(config, {"features"}, features);

    schema.columns = config_value(config, {"schema", "columns"}, schema.columns);
    const auto delim = config_value<std::string>(config, {"schema", "delimiter"}, ",");
    if (delim.size() != 1) throw std::invalid_argument("schema.delimiter must be one character");
    schema.delimiter = delim[0];
    const auto header = config_value<std::string>(config, {"schema", "header"}, "auto");
    if (header == "auto") {
      schema.header = HeaderMode::auto_detect;
    } else if (header == "present") {
      schema.header = HeaderMode::present;
    } else if (header == "absent") {
      schema.header = HeaderMode::absent;
    } else {
      throw std::invalid_argument("schema.header must be auto, present or absent");
    }
    const auto ts = config_value<std::string>(config, {"schema", "timestamp_format"}, "iso");
    if (ts == "iso") {
      schema.timestamp_format = TimestampFormat::iso;
    } else if (ts == "us_short") {
      schema.timestamp_format = TimestampFormat::us_short;
    } else {
      throw std::invalid_argument("schema.timestamp_format must be iso or us_short");
    }
    schema.no_guild_tokens = config_value(config, {"schema", "no_guild_tokens"}, schema.no_guild_tokens);
    schema.races = config_value(config, {"schema", "races"}, schema.races);
    schema.classes = config_value(config, {"schema", "classes"}, schema.classes);
    schema.strict = config_value(config, {"schema", "strict"}, schema.strict);
    schema.validate();

    effective["command"] = command;
    effective["seed"] = seed;
    effective["gap_days"] = gap_days;
    effective["trial_days"] = trial_days;
    effective["window"] = {{"start", format_timestamp(window.start)}, {"end", format_timestamp(window.end)}};
    effective["density"] = density_name;
    effective["features"] = features;
    effective["schema"] = {{"columns", schema.columns},
                           {"delimiter", delim},
                           {"header", header},
                           {"timestamp_format", ts},
                           {"no_guild_tokens", schema.no_guild_tokens},
                           {"races", schema.races},
                           {"classes", schema.classes},
                           {"strict", schema.strict}};
    effective["inputs"] = inputs();
    if (!flags.features_file.empty()) effective["features_file"] = flags.features_file;

    fs::create_directories(out_dir);
  }

  std::vector<std::string> inputs() const {
    if (!flags.inputs.empty()) return flags.inputs;
    return config_value<std::vector<std::string>>(config, {"inputs"}, {});
  }

  fs::path path(const std::string& name) const { return out_dir / name; }

  void record(const std::string& name) { artifacts.emplace_back(name, sha256_file(path(name))); }

  void write_table(const std::string& name, const CsvTable& table) {
    emit_csv(table, path(name));
    record(name);
  }

  void write_svg(const std::string& name, const ChartSpec& spec) {
    emit_svg(spec, path(name));
    record(name);
  }

  void write_manifest() {
    // The effective settings are stored next to the manifest so a run can
    // be replayed with --config.
    const std::string cfg_name = "run_config_" + command + ".json";
    {
      std::ofstream out(path(cfg_name), std::ios::binary);
      out << effective.dump(2) << '\n';
      if (!out) throw std::runtime_error("cannot write " + path(cfg_name).string());
    }
    record(cfg_name);
    auto sorted = artifacts;
    std::sort(sorted.begin(), sorted.end());
    CsvTable t;
    t.header = {"key", "value"};
    t.rows.push_back({"command", command});
    t.rows.push_back({"config_hash", sha256_hex(effective.dump())});
    t.rows.push_back({"seed", std::to_string(seed)});
    for (const auto& [name, sum] : sorted) t.rows.push_back({"artifact:" + name, sum});
    emit_csv(t, path("manifest_" + command + ".csv"));
  }
};

IngestResult ingest_inputs(Context& ctx) {
  const auto names = ctx.inputs();
  if (names.empty()) throw std::invalid_argument("no input trace files (use --input or config 'inputs')");
  std::vector<fs::path> paths(names.begin(), names.end());
  IngestOptions options;
  options.schema = ctx.schema;
  options.threads = ctx.threads;
  options.spill_threshold_rows =
      config_value<std::size_t>(ctx.config, {"spill_threshold_rows"}, options.spill_threshold_rows);
  options.temp_dir = config_value<std::string>(ctx.config, {"temp_dir"}, "");
  return ingest_traces(paths, options);
}

std::vector<SnapshotRecord> windowed_records(Context& ctx) {
  auto result = ingest_inputs(ctx);
  return window_filter(result.records, ctx.window.start, ctx.window.end);
}

std::vector<PlayerProfile> trial_profiles(Context& ctx, std::span<const SnapshotRecord> records) {
  const auto all = build_profiles(records, ctx.window, ctx.density, ctx.threads);
  return filter_trial(all, ctx.trial_days);
}

FeatureMatrix load_features(Context& ctx) {
  if (!ctx.flags.features_file.empty()) {
    auto table = read_csv_file(ctx.flags.features_file);
    return feature_matrix_from_table(table);
  }
  const auto records = windowed_records(ctx);
  const auto profiles = trial_profiles(ctx, records);
  return assemble_dataset(profiles, ctx.features, ctx.gap_days, ctx.window);
}

std::vector<int> pick(std::span<const int> labels, std::span<const std::size_t> idx) {
  std::vector<int> out;
  for (const auto i : idx) out.push_back(labels[i]);
  return out;
}

// ---------------------------------------------------------------------------

void cmd_ingest(Context& ctx) {
  const auto result = ingest_inputs(ctx);
  write_trace_file(ctx.path("traces.csv"), result.records);
  ctx.record("traces.csv");
  ctx.write_table("ingest_stats.csv", stats_table(result.stats));
  CsvTable errors;
  errors.header = {"path", "line", "kind", "message"};
  for (const auto& e : result.errors) {
    errors.rows.push_back({e.path, std::to_string(e.line), std::string(to_string(e.kind)), e.message});
  }
  ctx.write_table("ingest_errors.csv", errors);
}

void cmd_profile(Context& ctx) {
  const auto records = windowed_records(ctx);
  const auto all = build_profiles(records, ctx.window, ctx.density, ctx.threads);
  const auto kept = filter_trial(all, ctx.trial_days);
  ctx.write_table("profiles.csv", profiles_table(kept));
  const auto fm = assemble_dataset(kept, ctx.features, ctx.gap_days, ctx.window);
  ctx.write_table("features_" + std::to_string(ctx.gap_days) + ".csv", feature_matrix_table(fm));
  CsvTable summary;
  summary.header = {"key", "value"};
  summary.rows = {{"characters", std::to_string(all.size())},
                  {"after_trial_filter", std::to_string(kept.size())},
                  {"churned", std::to_string(std::count(fm.labels.begin(), fm.labels.end(), 1))}};
  ctx.write_table("profile_summary.csv", summary);
}

struct Factor {
  std::string name, reference, group;
  bool (*in_reference)(const PlayerProfile&);
};

const std::vector<Factor>& factors() {
  static const std::vector<Factor> f = {
      {"guild", "in_guild", "no_guild", [](const PlayerProfile& p) { return p.in_guild; }},
      {"daily_hours", "hours>=1", "hours<1", [](const PlayerProfile& p) { return p.avg_daily_hours >= 1.0; }},
      {"playing_density", "density>=0.5", "density<0.5",
       [](const PlayerProfile& p) { return p.playing_density >= 0.5; }},
      {"level", "level80", "below80", [](const PlayerProfile& p) { return p.max_level == kMaxLevel; }},
  };
  return f;
}

void cmd_survival(Context& ctx) {
  std::vector<int> gaps = ctx.flags.gaps;
  if (gaps.empty()) gaps = config_value<std::vector<int>>(ctx.config, {"survival", "gaps"}, {ctx.gap_days});
  for (const int g : gaps) {
    if (g <= 0) throw std::invalid_argument("gap days must be positive");
  }
  ctx.effective["gaps"] = gaps;
  const auto records = windowed_records(ctx);
  const auto profiles = trial_profiles(ctx, records);
  if (profiles.empty()) throw DataError("no players left after the trial filter");

  ChartSpec overlay{ChartKind::step, "Kaplan-Meier survival by churn gap", "days", "survival probability", {}, {}};
  CsvTable groups;
  groups.header = {"gap_days", "factor", "reference", "group", "n_reference", "n_group", "tau",
                   "rmst_reference", "rmst_group", "churn_ratio", "chi_square", "p_value"};
  CsvTable sweep;
  sweep.header = {"gap_days", "factor", "tau", "churn_ratio"};

  for (const int gap : gaps) {
    const auto obs = label_all(profiles, gap, ctx.window);
    const auto curve = km_estimate(obs);
    ctx.write_table("km_gap" + std::to_string(gap) + ".csv", curve_table(curve));
    overlay.series.push_back(survival_series(curve, std::to_string(gap) + "-day gap"));

    for (const auto& f : factors()) {
      std::vector<SurvivalObservation> ref, grp;
      for (std::size_t i = 0; i < profiles.size(); ++i) (f.in_reference(profiles[i]) ? ref : grp).push_back(obs[i]);
      std::vector<std::string> row{std::to_string(gap), f.name, f.reference, f.group,
                                   std::to_string(ref.size()), std::to_string(grp.size())};
      try {
        if (ref.empty() || grp.empty()) throw DataError("one side is empty");
        const auto cr = km_estimate(ref), cg = km_estimate(grp);
        const double tau = common_tau(cr, cg);
        row.push_back(format_double(tau));
        row.push_back(format_double(rmst(cr, tau)));
        row.push_back(format_double(rmst(cg, tau)));
        row.push_back(format_double(churn_ratio(ref, grp, tau)));
        const auto lr = log_rank(ref, grp);
        row.push_back(format_double(lr.chi_square));
        row.push_back(format_double(lr.p_value));
        for (int t = 30; t < tau; t += 30) {
          sweep.rows.push_back({std::to_string(gap), f.name, std::to_string(t),
                                format_double(churn_ratio(ref, grp, t))});
        }
        sweep.rows.push_back({std::to_string(gap), f.name, format_double(tau), row[9]});
        if (gap == gaps.front()) {
          ChartSpec chart{ChartKind::step, f.name + " (" + std::to_string(gap) + "-day gap)", "days",
                          "survival probability", {survival_series(cr, f.reference), survival_series(cg, f.group)}, {}};
          ctx.write_svg("km_" + f.name + ".svg", chart);
        }
      } catch (const std::exception& e) {
        warn("survival: " + f.name + " at gap " + std::to_string(gap) + ": " + e.what());
        row.resize(groups.header.size());
      }
      groups.rows.push_back(std::move(row));
    }
  }
  ctx.write_svg("km_overlay.svg", overlay);
  ctx.write_table("survival_groups.csv", groups);
  ctx.write_table("tau_sweep.csv", sweep);
}

std::vector<ModelFamily> requested_models(const Context& ctx) {
  auto names = ctx.flags.models;
  if (names.empty()) names = config_value<std::vector<std::string>>(ctx.config, {"train", "models"}, {"all"});
  std::vector<ModelFamily> out;
  for (const auto& n : names) {
    if (n == "all") {
      for (auto f : {ModelFamily::logistic, ModelFamily::svm, ModelFamily::knn, ModelFamily::forest}) out.push_back(f);
    } else {
      out.push_back(parse_family(n));
    }
  }
  return out;
}

ParamMap model_params(const Context& ctx, ModelFamily family, const std::string& preset) {
  ParamMap p;
  if (preset == "tuned") {
    p = tuned_preset(family);
  } else if (preset == "default") {
    p = default_params(family);
  } else {
    throw std::invalid_argument("unknown preset '" + preset + "' (tuned or default)");
  }
  if (const json* node = lookup(ctx.config, {"models", family_name(family).c_str()})) {
    if (!node->is_object()) throw std::invalid_argument("config models." + family_name(family) + " must be an object");
    for (const auto& [k, v] : node->items()) p[k] = param_string(v);
  }
  for (const auto& kv : ctx.flags.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--param expects key=value, got '" + kv + "'");
    p[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return p;
}

Grid model_grid(const Context& ctx, ModelFamily family) {
  const json* node = lookup(ctx.config, {"grids", family_name(family).c_str()});
  if (!node) return default_grid(family);
  if (!node->is_object()) throw std::invalid_argument("config grids." + family_name(family) + " must be an object");
  Grid g;
  for (const auto& [k, values] : node->items()) {
    if (!values.is_array()) throw std::invalid_argument("grid values for '" + k + "' must be a list");
    std::vector<std::string> vs;
    for (const auto& v : values) vs.push_back(param_string(v));
    g.emplace_back(k, std::move(vs));
  }
  return g;
}

void cmd_train(Context& ctx) {
  const auto fm = load_features(ctx);
  const auto models = requested_models(ctx);
  const std::string preset = !ctx.flags.preset.empty()
                                 ? ctx.flags.preset
                                 : config_value<std::string>(ctx.config, {"train", "preset"}, "tuned");
  const std::string search = !ctx.flags.search.empty()
                                 ? ctx.flags.search
                                 : config_value<std::string>(ctx.config, {"train", "search"}, "none");
  if (search != "none" && search != "grid" && search != "random") {
    throw std::invalid_argument("--search must be none, grid or random");
  }
  const int n_iter = ctx.given("--n-iter") ? ctx.flags.n_iter : config_value<int>(ctx.config, {"train", "n_iter"}, 10);
  const int folds = ctx.given("--cv-folds") ? ctx.flags.cv_folds : config_value<int>(ctx.config, {"train", "cv_folds"}, 10);
  const Metric metric = parse_metric(!ctx.flags.metric.empty()
                                         ? ctx.flags.metric
                                         : config_value<std::string>(ctx.config, {"train", "metric"}, "roc_auc"));
  const double threshold = ctx.given("--threshold") ? ctx.flags.threshold
                                                    : config_value<double>(ctx.config, {"train", "threshold"}, 0.5);
  if (folds == 1 || folds < 0) throw std::invalid_argument("--cv-folds must be 0 (off) or >= 2");

  const auto split = holdout_split(fm.labels, derive_seed(ctx.seed, kSplitStream));
  const Matrix x_train = fm.rows.select_rows(split.train), x_test = fm.rows.select_rows(split.test);
  const auto y_train = pick(fm.labels, split.train), y_test = pick(fm.labels, split.test);
  std::optional<CvPlan> plan;
  if (folds >= 2) plan = stratified_kfold(y_train, folds, derive_seed(ctx.seed, kCvStream));

  json eff_models = json::object();
  ChartSpec roc_chart{ChartKind::line, "ROC (test split)", "false positive rate", "true positive rate", {}, {}};
  CsvTable summary;
  summary.header = {"model", "params", "cv_roc_auc", "test_roc_auc", "test_accuracy", "false_positives"};

  for (const auto family : models) {
    const auto name = family_name(family);
    ParamMap params = model_params(ctx, family, preset);
    SearchOptions so;
    so.metric = metric;
    so.seed = derive_seed(ctx.seed, kModelStream);
    so.threads = ctx.threads;
    if (search != "none") {
      if (!plan) throw std::invalid_argument("hyperparameter search needs --cv-folds >= 2");
      so.base = params;
      const auto grid = model_grid(ctx, family);
      const auto result = search == "grid"
                              ? grid_search(family, grid, x_train, y_train, *plan, so)
                              : random_search(family, grid, n_iter, derive_seed(ctx.seed, kSearchStream),
                                              x_train, y_train, *plan, so);
      ctx.write_table("search_" + name + ".csv", search_table(name, result, metric));
      for (const auto& [k, v] : result.best) params[k] = v;
      so.base.clear();
    }

    CsvTable metrics;
    metrics.header = {"model", "params", "fold", "metric", "value"};
    Classifier model(family, params, so.seed, ctx.threads);
    const auto ptext = format_params(model.params());
    std::string cv_mean;
    if (plan) {
      SearchOptions cv = so;
      cv.metric = Metric::roc_auc;
      const auto scores = cross_validate(family, model.params(), x_train, y_train, *plan, cv);
      double mean = 0.0;
      for (std::size_t f = 0; f < scores.size(); ++f) {
        metrics.rows.push_back({name, ptext, std::to_string(f), "roc_auc", format_double(scores[f])});
        mean += scores[f];
      }
      mean /= static_cast<double>(scores.size());
      cv_mean = format_double(mean);
      metrics.rows.push_back({name, ptext, "cv_mean", "roc_auc", cv_mean});
    }
    model.fit(x_train, y_train);
    const auto s = model.scores(x_test);
    const auto roc = roc_auc(y_test, s);
    std::vector<int> pred(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) pred[i] = model.predict(x_test.row(i), threshold);
    const auto cm = confusion(y_test, pred);
    auto add = [&](const std::string& m, const std::string& v) { metrics.rows.push_back({name, ptext, "test", m, v}); };
    add("roc_auc", format_double(roc.auc));
    add("accuracy", format_double(cm.accuracy()));
    add("tp", std::to_string(cm.tp));
    add("fp", std::to_string(cm.fp));
    add("tn", std::to_string(cm.tn));
    add("fn", std::to_string(cm.fn));
    add("tpr", cm.tpr() ? format_double(*cm.tpr()) : "undefined");
    add("fpr", cm.fpr() ? format_double(*cm.fpr()) : "undefined");
    ctx.write_table("metrics_" + name + ".csv", metrics);
    ctx.write_table("roc_" + name + ".csv", roc_table(roc));
    summary.rows.push_back({name, ptext, cv_mean, format_double(roc.auc), format_double(cm.accuracy()),
                            std::to_string(cm.fp)});

    {
      std::ofstream out(ctx.path("model_" + name + ".txt"), std::ios::binary);
      model.save(out);
    }
    ctx.record("model_" + name + ".txt");
    roc_chart.series.push_back({name + " (AUC " + format_fixed(roc.auc, 3) + ")", roc.fpr, roc.tpr, {}, {}});
    eff_models[name] = model.params();
  }
  ctx.write_table("metrics_summary.csv", summary);
  ctx.write_svg("roc.svg", roc_chart);
  ctx.effective["train"] = {{"models", eff_models}, {"preset", preset}, {"search", search}, {"n_iter", n_iter},
                            {"cv_folds", folds}, {"metric", metric_name(metric)}, {"threshold", threshold}};
}

void cmd_evaluate(Context& ctx) {
  const auto fm = load_features(ctx);
  const int k = ctx.given("--clusters") ? ctx.flags.clusters : config_value<int>(ctx.config, {"evaluate", "clusters"}, 2);
  const int restarts = config_value<int>(ctx.config, {"evaluate", "restarts"}, 10);
  const auto p = fm.feature_names.size();
  const int select_k = ctx.given("--select-k") ? ctx.flags.select_k
                                              : config_value<int>(ctx.config, {"evaluate", "select_k"},
                                                                  static_cast<int>(std::max<std::size_t>(1, p / 2)));
  ctx.effective["evaluate"] = {{"clusters", k}, {"restarts", restarts}, {"select_k", select_k}};

  const auto split = holdout_split(fm.labels, derive_seed(ctx.seed, kSplitStream));
  const Matrix x_train = fm.rows.select_rows(split.train), x_test = fm.rows.select_rows(split.test);
  const auto y_train = pick(fm.labels, split.train), y_test = pick(fm.labels, split.test);
  const auto st = standardize_fit(x_train);
  const Matrix z_train = standardize_apply(st, x_train), z_test = standardize_apply(st, x_test);

  // Clustering baselines.
  KMeansOptions ko;
  ko.restarts = restarts;
  auto accuracy_of = [&](const KMeansModel& m, const Matrix& rows) {
    std::vector<int> pred(rows.rows());
    for (std::size_t i = 0; i < rows.rows(); ++i) pred[i] = kmeans_classify(m, rows.row(i));
    return confusion(y_test, pred).accuracy();
  };
  CsvTable clustering;
  clustering.header = {"method", "dimensions", "test_accuracy", "inertia"};
  const std::uint64_t kseed = derive_seed(ctx.seed, kClusterStream);
  const auto km = fit_kmeans(z_train, k, kseed, y_train, ko);
  clustering.rows.push_back({"kmeans", std::to_string(p), format_double(accuracy_of(km, z_test)), format_double(km.inertia)});

  const int max_components = static_cast<int>(std::min(p, z_train.rows() - 1));
  const auto pca_full = fit_pca(z_train, max_components);
  CsvTable variance;
  variance.header = {"component", "explained_variance", "ratio", "cumulative"};
  double cum = 0.0;
  for (std::size_t c = 0; c < pca_full.explained_variance.size(); ++c) {
    cum += pca_full.explained_variance_ratio[c];
    variance.rows.push_back({std::to_string(c + 1), format_double(pca_full.explained_variance[c]),
                             format_double(pca_full.explained_variance_ratio[c]), format_double(cum)});
  }
  ctx.write_table("pca_variance.csv", variance);
  CsvTable rule;
  rule.header = {"variance_threshold", "components"};
  for (const double t : {0.85, 0.95}) {
    rule.rows.push_back({format_double(t), std::to_string(components_for_variance(pca_full.explained_variance_ratio, t))});
  }
  ctx.write_table("pca_components.csv", rule);

  for (const int dims : {2, 3}) {
    if (dims > max_components) continue;
    const auto pca = fit_pca(z_train, dims);
    const auto pt = pca_transform(pca, z_train), pv = pca_transform(pca, z_test);
    const auto m = fit_kmeans(pt, k, kseed, y_train, ko);
    clustering.rows.push_back({"pca_kmeans", std::to_string(dims), format_double(accuracy_of(m, pv)), format_double(m.inertia)});
    if (dims == 2) {
      Series s{"test rows by label", {}, {}, {}, {}};
      for (std::size_t i = 0; i < pv.rows(); ++i) {
        s.x.push_back(pv(i, 0));
        s.y.push_back(pv(i, 1));
        s.groups.push_back(y_test[i]);
      }
      ctx.write_svg("pca_scatter.svg", ChartSpec{ChartKind::scatter, "PCA projection", "PC1", "PC2", {s}, {}});
    }
  }
  ctx.write_table("clustering.csv", clustering);

  // Feature selection on the training split.
  const auto f = anova_f_scores(x_train, y_train);
  const auto ranked = univariate_select(x_train, y_train, p);
  CsvTable uni;
  uni.header = {"rank", "feature", "f_score", "selected"};
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    uni.rows.push_back({std::to_string(r + 1), fm.feature_names[ranked[r]], format_double(f[ranked[r]]),
                        r < static_cast<std::size_t>(select_k) ? "1" : "0"});
  }
  ctx.write_table("univariate_selection.csv", uni);
  const auto elim = rfe(x_train, y_train, static_cast<std::size_t>(select_k), 1,
                        config_value<double>(ctx.config, {"evaluate", "rfe_c"}, 25.0));
  CsvTable rfe_table;
  rfe_table.header = {"round", "eliminated", "survivors"};
  for (std::size_t r = 0; r < elim.eliminated.size(); ++r) {
    std::string names;
    for (const auto i : elim.eliminated[r]) names += (names.empty() ? "" : ";") + fm.feature_names[i];
    rfe_table.rows.push_back({std::to_string(r + 1), names, ""});
  }
  std::string survivors;
  for (const auto i : elim.selected) survivors += (survivors.empty() ? "" : ";") + fm.feature_names[i];
  rfe_table.rows.push_back({"final", "", survivors});
  ctx.write_table("rfe.csv", rfe_table);

  if (!ctx.flags.model_file.empty()) {
    std::ifstream in(ctx.flags.model_file);
    if (!in) throw DataError("cannot read model file " + ctx.flags.model_file);
    const auto model = Classifier::load(in);
    const auto s = model.scores(x_test);
    CsvTable scores;
    scores.header = {"char_id", "label", "score", "prediction"};
    std::vector<int> pred(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      pred[i] = model.predict(x_test.row(i));
      scores.rows.push_back({std::to_string(fm.char_ids[split.test[i]]), std::to_string(y_test[i]),
                             format_double(s[i]), std::to_string(pred[i])});
    }
    ctx.write_table("scores.csv", scores);
    CsvTable m;
    m.header = {"model", "params", "fold", "metric", "value"};
    const auto name = family_name(model.family()), ptext = format_params(model.params());
    m.rows.push_back({name, ptext, "test", "roc_auc", format_double(roc_auc(y_test, s).auc)});
    m.rows.push_back({name, ptext, "test", "accuracy", format_double(confusion(y_test, pred).accuracy())});
    ctx.write_table("model_metrics.csv", m);
    ctx.effective["model_file"] = ctx.flags.model_file;
  }
}

void cmd_report(Context& ctx) {
  const auto records = windowed_records(ctx);
  for (const auto key : {FrequencyKey::level, FrequencyKey::level_interval, FrequencyKey::race, FrequencyKey::char_class,
                         FrequencyKey::race_class, FrequencyKey::zone, FrequencyKey::guild, FrequencyKey::guild_class}) {
    const auto table = frequency_table(records, key);
    const auto name = frequency_key_name(key);
    ctx.write_table("freq_" + name + ".csv", to_table(table));
    if (key == FrequencyKey::guild || key == FrequencyKey::zone) continue;
    // Bars in natural order for levels, by count otherwise.
    auto rows = table.rows;
    if (key == FrequencyKey::level || key == FrequencyKey::level_interval) {
      const auto labels = level_interval_labels();
      auto order = [&](const std::string& v) -> long {
        if (key == FrequencyKey::level) return std::stol(v);
        return std::find(labels.begin(), labels.end(), v) - labels.begin();
      };
      std::sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) { return order(a.first) < order(b.first); });
    }
    ChartSpec chart{ChartKind::bar, name + " distribution", name, "characters", {Series{}}, {}};
    for (std::size_t i = 0; i < rows.size(); ++i) {
      chart.categories.push_back(rows[i].first);
      chart.series[0].x.push_back(static_cast<double>(i));
      chart.series[0].y.push_back(static_cast<double>(rows[i].second));
    }
    ctx.write_svg("freq_" + name + ".svg", chart);
  }
  for (const auto g : {Granularity::hour, Granularity::day, Granularity::month, Granularity::weekday}) {
    const auto series = activity_series(records, g);
    const auto name = granularity_name(g);
    ctx.write_table("activity_" + name + ".csv", to_table(series));
    ChartSpec chart{g == Granularity::day ? ChartKind::line : ChartKind::bar, "distinct active characters per " + name,
                    name, "characters", {Series{}}, {}};
    for (std::size_t i = 0; i < series.rows.size(); ++i) {
      if (g != Granularity::day) chart.categories.push_back(series.rows[i].bucket);
      chart.series[0].x.push_back(static_cast<double>(i));
      chart.series[0].y.push_back(static_cast<double>(series.rows[i].active_characters));
    }
    ctx.write_svg("activity_" + name + ".svg", chart);
  }
  ctx.write_table("activity_hour_by_level_interval.csv",
                  to_table(activity_series(records, Granularity::hour, GroupKey::level_interval)));
  const auto profiles = build_profiles(records, ctx.window, ctx.density, ctx.threads);
  const std::vector<double> pct = config_value<std::vector<double>>(ctx.config, {"report", "percentiles"},
                                                                    {25, 50, 75, 90, 95, 99});
  ctx.effective["report"] = {{"percentiles", pct}};
  if (!profiles.empty()) ctx.write_table("playtime_percentiles.csv", to_table(playtime_percentiles(profiles, pct)));
}

SynthGroup group_from_json(const json& j, std::size_t index) {
  if (!j.is_object()) throw std::invalid_argument("synth.groups entries must be objects");
  SynthGroup g;
  g.name = "group" + std::to_string(index);
  auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) {
      try {
        field = j.at(key).get<std::decay_t<decltype(field)>>();
      } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("synth group key '") + key + "': " + e.what());
      }
    }
  };
  take("name", g.name);
  take("fraction", g.fraction);
  take("mean_lifetime_days", g.mean_lifetime_days);
  take("activity_prob", g.activity_prob);
  take("snapshots_per_day", g.snapshots_per_day);
  take("guild_prob", g.guild_prob);
  take("start_level", g.start_level);
  take("level_up_prob", g.level_up_prob);
  take("break_prob", g.break_prob);
  take("break_days", g.break_days);
  return g;
}

json group_to_json(const SynthGroup& g) {
  return {{"name", g.name},
          {"fraction", g.fraction},
          {"mean_lifetime_days", g.mean_lifetime_days},
          {"activity_prob", g.activity_prob},
          {"snapshots_per_day", g.snapshots_per_day},
          {"guild_prob", g.guild_prob},
          {"start_level", g.start_level},
          {"level_up_prob", g.level_up_prob},
          {"break_prob", g.break_prob},
          {"break_days", g.break_days}};
}

void cmd_synth(Context& ctx) {
  const std::string preset = !ctx.flags.synth_preset.empty()
                                 ? ctx.flags.synth_preset
                                 : config_value<std::string>(ctx.config, {"synth", "preset"}, "churn");
  SynthConfig cfg = synth_preset(preset);
  cfg.seed = ctx.seed;
  cfg.window_start = ctx.window.start - ctx.window.start % kSecondsPerDay;
  cfg.players = config_value(ctx.config, {"synth", "players"}, cfg.players);
  cfg.window_days = config_value(ctx.config, {"synth", "window_days"}, cfg.window_days);
  cfg.join_spread_days = config_value(ctx.config, {"synth", "join_spread_days"}, cfg.join_spread_days);
  cfg.zone_count = config_value(ctx.config, {"synth", "zone_count"}, cfg.zone_count);
  cfg.guild_count = config_value(ctx.config, {"synth", "guild_count"}, cfg.guild_count);
  if (const json* groups = lookup(ctx.config, {"synth", "groups"})) {
    if (!groups->is_array()) throw std::invalid_argument("synth.groups must be a list");
    cfg.groups.clear();
    for (std::size_t i = 0; i < groups->size(); ++i) cfg.groups.push_back(group_from_json((*groups)[i], i));
  }
  if (ctx.given("--players")) cfg.players = ctx.flags.players;
  if (ctx.given("--join-spread")) cfg.join_spread_days = ctx.flags.join_spread;
  cfg.validate();

  json groups = json::array();
  for (const auto& g : cfg.groups) groups.push_back(group_to_json(g));
  ctx.effective["synth"] = {{"preset", preset},
                            {"players", cfg.players},
                            {"window_start", format_timestamp(cfg.window_start)},
                            {"window_days", cfg.window_days},
                            {"join_spread_days", cfg.join_spread_days},
                            {"zone_count", cfg.zone_count},
                            {"guild_count", cfg.guild_count},
                            {"groups", groups}};

  const auto out = generate_traces(cfg, ctx.threads);
  write_trace_file(ctx.path("traces.csv"), out.records);
  ctx.record("traces.csv");
  ctx.write_table("ground_truth.csv", truth_table(out.truth));
}

void add_common(CLI::App* sub, Flags& f, bool needs_inputs) {
  sub->add_option("-c,--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option("-o,--out", f.out_dir, "Output directory (default: out)");
  sub->add_option("--threads", f.threads, "Worker cap; 1 is the reference output");
  sub->add_option("--seed", f.seed, "Master seed (default: 42)");
  sub->add_option("--window-start", f.window_start, "Window start, 'YYYY-MM-DD HH:MM:SS'");
  sub->add_option("--window-end", f.window_end, "Window end, 'YYYY-MM-DD HH:MM:SS'");
  if (needs_inputs) {
    sub->add_option("-i,--input", f.inputs, "Trace files");
    sub->add_option("--gap-days", f.gap_days, "Churn inactivity gap in days (default: 180)");
    sub->add_option("--trial-days", f.trial_days, "Minimum observed lifetime in days (default: 30)");
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Churn analytics for MMORPG activity traces", "churn"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  Flags flags;

  auto* ingest = app.add_subcommand("ingest", "Parse, sort and de-duplicate trace files");
  add_common(ingest, flags, true);
  auto* profile = app.add_subcommand("profile", "Build player profiles and the feature matrix");
  add_common(profile, flags, true);
  auto* survival = app.add_subcommand("survival", "Kaplan-Meier curves, RMST churn ratios, log-rank tests");
  add_common(survival, flags, true);
  survival->add_option("--gaps", flags.gaps, "Comma-separated churn gaps in days")->delimiter(',');
  auto* train = app.add_subcommand("train", "Fit classifiers with an 80/20 split and cross-validation");
  add_common(train, flags, true);
  train->add_option("--features", flags.features_file, "Feature matrix CSV from 'profile'");
  train->add_option("--model", flags.models, "rf, lr, svm, knn or all")->delimiter(',');
  train->add_option("--preset", flags.preset, "tuned or default");
  train->add_option("--search", flags.search, "none, grid or random");
  train->add_option("--n-iter", flags.n_iter, "Configurations for random search");
  train->add_option("--cv-folds", flags.cv_folds, "Cross-validation folds (0 disables, default 10)");
  train->add_option("--metric", flags.metric, "Search metric: roc_auc or accuracy");
  train->add_option("--param", flags.params, "Model parameter override key=value");
  train->add_option("--threshold", flags.threshold, "Probability threshold for labels (default 0.5)");
  auto* evaluate = app.add_subcommand("evaluate", "Clustering baselines, PCA, feature selection, saved-model scoring");
  add_common(evaluate, flags, true);
  evaluate->add_option("--features", flags.features_file, "Feature matrix CSV from 'profile'");
  evaluate->add_option("--model-file", flags.model_file, "Saved model to score on the test split");
  evaluate->add_option("--clusters", flags.clusters, "k for k-means (default 2)");
  evaluate->add_option("--select-k", flags.select_k, "Features kept by selection");
  auto* report = app.add_subcommand("report", "Frequency tables, activity series and playtime percentiles");
  add_common(report, flags, true);
  auto* synth = app.add_subcommand("synth", "Generate a synthetic trace with ground truth");
  add_common(synth, flags, false);
  synth->add_option("--preset", flags.synth_preset, "churn, two_groups or default");
  synth->add_option("--players", flags.players, "Number of players");
  synth->add_option("--join-spread", flags.join_spread, "Join day spread in days");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  Context ctx;
  ctx.flags = flags;
  ctx.sub = app.get_subcommands().front();
  ctx.command = ctx.sub->get_name();

  WarningHandler handler = [&err](const std::string& m) { err << "warning: " << m << '\n'; };
  auto previous = set_warning_handler(handler);
  int code = 0;
  try {
    ctx.load();
    if (ctx.command == "ingest") cmd_ingest(ctx);
    else if (ctx.command == "profile") cmd_profile(ctx);
    else if (ctx.command == "survival") cmd_survival(ctx);
    else if (ctx.command == "train") cmd_train(ctx);
    else if (ctx.command == "evaluate") cmd_evaluate(ctx);
    else if (ctx.command == "report") cmd_report(ctx);
    else if (ctx.command == "synth") cmd_synth(ctx);
    ctx.write_manifest();
    out << ctx.command << ": wrote " << ctx.artifacts.size() << " artifacts to " << ctx.out_dir.string() << '\n';
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    code = 2;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    code = 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    code = 3;
  }
  set_warning_handler(std::move(previous));
  return code;
}

}  // namespace churn
