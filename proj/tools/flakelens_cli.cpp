// flakelens command-line driver: every subcommand resolves a RunConfig
// (defaults < --config file < flags), writes its artifacts plus the effective
// config.json under <out>/<run-id>, and never touches an existing run unless
// --force is given.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "flakelens/baseline.hpp"
#include "flakelens/dataset.hpp"
#include "flakelens/errors.hpp"
#include "flakelens/experiment.hpp"
#include "flakelens/explainer.hpp"
#include "flakelens/feature_io.hpp"
#include "flakelens/format.hpp"
#include "flakelens/learner.hpp"
#include "flakelens/model_io.hpp"
#include "flakelens/synth.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace flakelens {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DurationModel, pass_mean, fail_mean, timeout_mean, fast_fail_mean,
                                                noise_sd)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SynthConfig, n_flaky, n_nonflaky, history_length,
                                                flaky_failure_prob, failure_prob_spread, timeout_failure_share,
                                                fast_failure_share, rerun_detect_prob, cached_share,
                                                regression_segments, regression_mean_length,
                                                regression_length_spread, recent_regression_prob,
                                                trivial_nonflaky_share, fixed_flaky_share, fixed_stable_min,
                                                fixed_stable_max, durations, n_repos, timeline_days,
                                                churn_intensity, regression_burst_mean, flaky_pr_mean,
                                                nonflaky_pr_mean, seed)

}  // namespace flakelens

namespace {

using namespace flakelens;

// ---------------------------------------------------------------- config

struct InputConfig {
  std::string dataset;                 // directory written by `synth`
  std::vector<std::string> histories;  // *.xml (JUnit) or JSONL
  std::int64_t junit_default_timestamp = 0;
  std::string labels;
  std::vector<std::string> churn;              // *.tsv files or directories of them
  std::map<std::string, std::string> git_repos;  // repo id -> working copy
  std::string pull_requests;
  std::string features;  // features.csv from `extract`
  std::string schema;    // defaults to schema.json next to `features`
  std::string model;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(InputConfig, dataset, histories, junit_default_timestamp, labels,
                                                churn, git_repos, pull_requests, features, schema, model)

struct FeatureConfig {
  std::string preset;  // when set, overrides groups, decay kinds, learner kind and top_k
  std::vector<std::string> decay_kinds{"reciprocal_squared"};
  bool entropy = false;
  bool mean_duration = false;
  bool mean_duration_diff = false;
  bool churn_counts = false;
  bool project = false;
  bool pull_request = false;
  std::vector<int> windows_days{3, 14, 54};
  double max_age_days = 90;
  std::size_t max_count = 10000;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(FeatureConfig, preset, decay_kinds, entropy, mean_duration,
                                                mean_duration_diff, churn_counts, project, pull_request,
                                                windows_days, max_age_days, max_count)

struct LearnerConfig {
  std::string kind = "gbm";
  int n_trees = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
  int min_split = 2;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LearnerConfig, kind, n_trees, learning_rate, max_depth, min_split)

struct RunConfig {
  InputConfig inputs;
  FeatureConfig features;
  LearnerConfig learner;
  int k = 5;
  std::size_t top_k = 0;  // 0: no SHAP-based selection
  std::size_t top_n = 10;
  std::size_t baseline_window = kBaselineWindow;
  std::string scenario = "default";  // synth base: default | recently_fixed
  SynthConfig synth;
  std::uint64_t seed = 42;
  std::string out = "runs";
  std::string run_id = "run";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RunConfig, inputs, features, learner, k, top_k, top_n,
                                                baseline_window, scenario, synth, seed, out, run_id)

/// Error with the process exit code it maps to.
struct CliError : std::runtime_error {
  int code;
  CliError(int c, const std::string& what) : std::runtime_error(what), code(c) {}
};

constexpr int kExitFailure = 1;
constexpr int kExitInput = 2;
constexpr int kExitSchema = 3;

/// Reads and parses one input file; any failure names the file.
template <typename Parse>
auto load(const std::string& path, Parse&& parse) {
  try {
    return parse(read_file(path));
  } catch (const SchemaMismatchError&) {
    throw;
  } catch (const Error& e) {
    throw CliError(kExitInput, path + ": " + e.what());
  }
}

json read_json_file(const std::string& path) {
  return load(path, [&](const std::string& text) {
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(e.what(), e.byte, ParseError::Location::ByteOffset);
    }
  });
}

/// One command-line override: flag text bound to a JSON pointer.
struct Override {
  enum class Kind { String, Int, Double, Bool, StringList, IntList, StringMap };
  std::string flag;
  std::string pointer;
  Kind kind;
  std::string help;
  std::vector<std::string> values;
  bool flag_value = false;
};

std::vector<Override> make_overrides() {
  using K = Override::Kind;
  return {
      {"--out", "/out", K::String, "output root directory"},
      {"--run-id", "/run_id", K::String, "run directory name under --out"},
      {"--seed", "/seed", K::Int, "seed for generation and fold assignment"},
      {"--dataset", "/inputs/dataset", K::String, "dataset directory (histories.jsonl, labels.csv, churn/, ...)"},
      {"--histories", "/inputs/histories", K::StringList, "history files: JUnit *.xml or JSONL"},
      {"--junit-timestamp", "/inputs/junit_default_timestamp", K::Int, "epoch seconds for suites without one"},
      {"--labels", "/inputs/labels", K::String, "units CSV"},
      {"--churn", "/inputs/churn", K::StringList, "churn TSV files or directories (repo id = file stem)"},
      {"--git-repo", "/inputs/git_repos", K::StringMap, "repo_id=path of a git working copy to mine"},
      {"--pull-requests", "/inputs/pull_requests", K::String, "pull request JSON"},
      {"--features", "/inputs/features", K::String, "features CSV written by extract"},
      {"--schema", "/inputs/schema", K::String, "schema JSON (default: next to --features)"},
      {"--model", "/inputs/model", K::String, "model JSON written by train"},
      {"--preset", "/features/preset", K::String, "named feature/learner configuration"},
      {"--decay", "/features/decay_kinds", K::StringList, "flip-rate decay kinds"},
      {"--windows", "/features/windows_days", K::IntList, "churn window lengths in days"},
      {"--max-age-days", "/features/max_age_days", K::Double, "history window age limit"},
      {"--max-count", "/features/max_count", K::Int, "history window record limit"},
      {"--learner", "/learner/kind", K::String, "stump | cart | gbm"},
      {"--n-trees", "/learner/n_trees", K::Int, "boosting iterations"},
      {"--learning-rate", "/learner/learning_rate", K::Double, "boosting shrinkage"},
      {"--max-depth", "/learner/max_depth", K::Int, "tree depth limit"},
      {"--k", "/k", K::Int, "cross-validation folds"},
      {"--top-k", "/top_k", K::Int, "re-evaluate on the k best SHAP-ranked features (0: off)"},
      {"--top-n", "/top_n", K::Int, "features shown in SHAP exports"},
      {"--baseline-window", "/baseline_window", K::Int, "executions inspected by the baseline"},
      {"--scenario", "/scenario", K::String, "synth base configuration: default | recently_fixed"},
      {"--n-flaky", "/synth/n_flaky", K::Int, "synthetic flaky units"},
      {"--n-nonflaky", "/synth/n_nonflaky", K::Int, "synthetic non-flaky units"},
      {"--entropy", "/features/entropy", K::Bool, "add the entropy feature"},
      {"--durations", "/features/mean_duration", K::Bool, "add mean duration"},
      {"--duration-diff", "/features/mean_duration_diff", K::Bool, "add mean duration difference"},
      {"--churn-counts", "/features/churn_counts", K::Bool, "add churn counts"},
      {"--project", "/features/project", K::Bool, "add project one-hot columns"},
      {"--pr", "/features/pull_request", K::Bool, "add pull request counts"},
  };
}

json override_value(const Override& o) {
  using K = Override::Kind;
  auto number = [&](const std::string& s) -> json {
    try {
      if (o.kind == K::Double) return parse_double(s);
      std::size_t used = 0;
      const long long v = std::stoll(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw CliError(kExitFailure, o.flag + ": not a number: " + s);
    }
  };
  switch (o.kind) {
    case K::String: return o.values.front();
    case K::Int:
    case K::Double: return number(o.values.front());
    case K::Bool: return o.flag_value;
    case K::StringList: return o.values;
    case K::IntList: {
      json out = json::array();
      for (const auto& v : o.values) out.push_back(number(v));
      return out;
    }
    case K::StringMap: {
      json out = json::object();
      for (const auto& v : o.values) {
        const auto eq = v.find('=');
        if (eq == std::string::npos || eq == 0) throw CliError(kExitFailure, o.flag + " expects repo_id=path");
        out[v.substr(0, eq)] = v.substr(eq + 1);
      }
      return out;
    }
  }
  return nullptr;
}

/// defaults < config file < command line, with the synth block based on the
/// chosen scenario.
RunConfig resolve_config(const std::string& config_path, const std::vector<Override>& overrides) {
  json doc = RunConfig{};
  // Synth defaults depend on the scenario, so only explicit keys are kept here.
  doc["synth"] = json::object();
  if (!config_path.empty()) {
    const json file = read_json_file(config_path);
    if (!file.is_object()) throw CliError(kExitInput, config_path + ": config must be a JSON object");
    doc.merge_patch(file);
  }
  for (const auto& o : overrides) {
    if (o.values.empty() && !o.flag_value) continue;
    doc[json::json_pointer(o.pointer)] = override_value(o);
  }

  try {
    RunConfig config = doc.get<RunConfig>();
    SynthConfig base;
    if (config.scenario == "recently_fixed") base = SynthConfig::recently_fixed();
    else if (config.scenario != "default") throw ValidationError("unknown scenario '" + config.scenario + "'");
    json synth = base;
    synth.merge_patch(doc.value("synth", json::object()));
    config.synth = synth.get<SynthConfig>();
    config.synth.seed = config.seed;

    if (!config.features.preset.empty()) {
      const Preset p = preset_by_name(config.features.preset);
      auto& f = config.features;
      f.decay_kinds.clear();
      for (const auto& d : p.flags.decay_kinds) f.decay_kinds.push_back(d.name());
      f.entropy = p.flags.entropy;
      f.mean_duration = p.flags.mean_duration;
      f.mean_duration_diff = p.flags.mean_duration_diff;
      f.churn_counts = p.flags.churn_counts;
      f.project = p.flags.project;
      f.pull_request = p.flags.pull_request;
      config.learner.kind = std::string(model_kind_name(p.learner));
      config.top_k = p.top_k.value_or(0);
    }
    model_kind_from_name(config.learner.kind);
    if (config.k < 2) throw ValidationError("k must be at least 2");
    if (config.run_id.empty() || config.run_id.find('/') != std::string::npos) {
      throw ValidationError("run id must be a non-empty name without '/'");
    }
    return config;
  } catch (const json::exception& e) {
    throw CliError(kExitFailure, std::string("invalid config: ") + e.what());
  } catch (const Error& e) {
    throw CliError(kExitFailure, std::string("invalid config: ") + e.what());
  }
}

FeatureFlags flags_of(const RunConfig& config) {
  FeatureFlags f;
  f.decay_kinds.clear();
  for (const auto& d : config.features.decay_kinds) f.decay_kinds.push_back(DecayKind::from_name(d));
  f.entropy = config.features.entropy;
  f.mean_duration = config.features.mean_duration;
  f.mean_duration_diff = config.features.mean_duration_diff;
  f.churn_counts = config.features.churn_counts;
  f.project = config.features.project;
  f.pull_request = config.features.pull_request;
  f.windows_days = config.features.windows_days;
  return f;
}

WindowLimits limits_of(const RunConfig& config) {
  return {static_cast<Timestamp>(config.features.max_age_days * static_cast<double>(kSecondsPerDay)),
          config.features.max_count};
}

Preset preset_of(const RunConfig& config) {
  Preset p{config.features.preset.empty() ? "custom" : config.features.preset, flags_of(config),
           model_kind_from_name(config.learner.kind), std::nullopt};
  if (config.top_k > 0) p.top_k = config.top_k;
  return p;
}

LearnerOptions learner_options(const RunConfig& config) {
  LearnerOptions o;
  o.gbm = {config.learner.n_trees, config.learner.learning_rate, config.learner.max_depth, config.learner.min_split};
  o.cart = {config.learner.max_depth, config.learner.min_split};
  return o;
}

// ---------------------------------------------------------------- inputs

void require_exists(const std::string& path) {
  if (!path.empty() && !fs::exists(path)) throw CliError(kExitInput, path + ": no such file or directory");
}

void validate_paths(const RunConfig& config) {
  const auto& in = config.inputs;
  for (const auto* p : {&in.dataset, &in.labels, &in.pull_requests, &in.features, &in.schema, &in.model}) {
    require_exists(*p);
  }
  for (const auto& p : in.histories) require_exists(p);
  for (const auto& p : in.churn) require_exists(p);
  for (const auto& [repo, p] : in.git_repos) require_exists(p);
}

bool has_raw_inputs(const RunConfig& config) {
  return !config.inputs.dataset.empty() || !config.inputs.labels.empty();
}

Dataset load_dataset(const RunConfig& config) {
  const auto& in = config.inputs;
  if (!in.dataset.empty()) {
    try {
      return read_dataset(in.dataset);
    } catch (const Error& e) {
      throw CliError(kExitInput, in.dataset + ": " + e.what());
    }
  }
  if (in.labels.empty()) throw CliError(kExitFailure, "no inputs: give --dataset or --labels with --histories");

  Dataset d;
  std::vector<ExecutionRecord> records;
  for (const auto& path : in.histories) {
    auto part = load(path, [&](const std::string& text) {
      return fs::path(path).extension() == ".xml" ? parse_junit_report(text, in.junit_default_timestamp)
                                                  : parse_history_jsonl(text);
    });
    records.insert(records.end(), part.begin(), part.end());
  }
  for (auto& h : group_histories(records)) {
    auto id = h.test_id;
    d.histories.emplace(std::move(id), std::move(h));
  }
  d.units = load(in.labels, [](const std::string& text) { return parse_units_csv(text); });

  std::vector<fs::path> churn_files;
  for (const auto& p : in.churn) {
    if (!fs::is_directory(p)) {
      churn_files.emplace_back(p);
      continue;
    }
    std::vector<fs::path> found;
    for (const auto& entry : fs::directory_iterator(p)) {
      if (entry.path().extension() == ".tsv") found.push_back(entry.path());
    }
    std::sort(found.begin(), found.end());
    churn_files.insert(churn_files.end(), found.begin(), found.end());
  }
  for (const auto& f : churn_files) {
    const auto repo = f.stem().string();
    d.logs.insert_or_assign(repo, load(f.string(), [&](const std::string& text) { return parse_churn_tsv(text, repo); }));
  }
  for (const auto& [repo, path] : in.git_repos) {
    try {
      d.logs.insert_or_assign(repo, export_churn_from_vcs(path, 0, repo));
    } catch (const Error& e) {
      throw CliError(kExitInput, path + ": " + e.what());
    }
  }
  if (!in.pull_requests.empty()) {
    d.pull_requests = load(in.pull_requests, [&](const std::string& text) {
      return parse_pull_requests_json(text, d.units, d.logs);
    });
  }
  return d;
}

FeatureSchema load_schema(const std::string& path) {
  return load(path, [](const std::string& text) {
    try {
      return schema_from_json(json::parse(text));
    } catch (const json::exception& e) {
      throw ValidationError(std::string("malformed schema: ") + e.what());
    }
  });
}

TreeEnsembleModel load_model(const RunConfig& config) {
  if (config.inputs.model.empty()) throw CliError(kExitFailure, "this subcommand needs --model");
  return load(config.inputs.model, [](const std::string& text) { return model_from_json(text); });
}

/// Feature matrix from --features (+ schema) or extracted from raw inputs;
/// `frozen` pins the columns (prediction against a trained model).
FeatureMatrix load_features(const RunConfig& config, const FeatureSchema* frozen = nullptr) {
  const auto& in = config.inputs;
  if (!in.features.empty()) {
    const std::string schema_path =
        !in.schema.empty() ? in.schema : (fs::path(in.features).parent_path() / "schema.json").string();
    require_exists(schema_path);
    const FeatureSchema schema = load_schema(schema_path);
    return load(in.features, [&](const std::string& text) { return features_from_csv(text, schema); });
  }
  if (!has_raw_inputs(config)) throw CliError(kExitFailure, "no inputs: give --features, --dataset or --labels");
  const Dataset d = load_dataset(config);
  return frozen ? extract_features(d, *frozen, limits_of(config)).matrix
                : extract_features(d, flags_of(config), limits_of(config)).matrix;
}

/// Rows that carry a label.
FeatureMatrix labeled_rows(const FeatureMatrix& m) {
  std::vector<Eigen::Index> rows;
  FeatureMatrix out{m.schema, {}, {}};
  for (std::size_t i = 0; i < m.units.size(); ++i) {
    if (!m.units[i].label) continue;
    rows.push_back(static_cast<Eigen::Index>(i));
    out.units.push_back(m.units[i]);
  }
  out.values = m.values(rows, Eigen::all);
  return out;
}

std::vector<std::string> unit_ids(const FeatureMatrix& m) {
  std::vector<std::string> ids;
  for (const auto& u : m.units) ids.push_back(u.unit_id);
  return ids;
}

// ---------------------------------------------------------------- outputs

/// Artifacts are staged next to the run directory and moved into place only
/// when the command succeeds, so a run directory is always complete.
class RunDirectory {
 public:
  RunDirectory(const RunConfig& config, bool force)
      : final_(fs::path(config.out) / config.run_id), path_(fs::path(config.out) / ("." + config.run_id + ".partial")) {
    if (fs::exists(final_) && !force) {
      throw CliError(kExitFailure, "run directory " + final_.string() + " exists; pick another --run-id or --force");
    }
    std::error_code ec;
    fs::remove_all(path_, ec);
    fs::create_directories(path_, ec);
    if (ec) throw CliError(kExitFailure, "cannot create " + path_.string() + ": " + ec.message());
    write("config.json", json(config).dump(2) + "\n");
  }

  ~RunDirectory() {
    std::error_code ec;
    if (!committed_) fs::remove_all(path_, ec);
  }

  void write(const std::string& name, std::string_view contents) const {
    const fs::path target = path_ / name;
    fs::create_directories(target.parent_path());
    write_file(target.string(), contents);
  }

  void commit() {
    fs::remove_all(final_);
    fs::rename(path_, final_);
    committed_ = true;
  }

  /// Where artifacts are being written (the staging directory).
  const fs::path& path() const { return path_; }
  const fs::path& final_path() const { return final_; }

 private:
  fs::path final_;
  fs::path path_;
  bool committed_ = false;
};

std::string beeswarm_csv(const ShapExplanation& shap, const FeatureMatrix& m, std::size_t top_n) {
  std::ostringstream out;
  export_beeswarm(shap, m.values, unit_ids(m), std::min(top_n, m.schema.size()), out);
  return out.str();
}

std::string selected_json(const FeatureSchema& selected) {
  return schema_to_json(selected).dump(2) + "\n";
}

// ---------------------------------------------------------------- subcommands

void cmd_synth(const RunConfig& config, const RunDirectory& run) {
  config.synth.validate();
  const SynthDataset generated = generate(config.synth);
  write_dataset(generated.data, run.path().string());
  std::string mechanisms = "unit_id,mechanism\n";
  for (std::size_t i = 0; i < generated.mechanisms.size(); ++i) {
    mechanisms += csv_escape(generated.data.units[i].unit_id) + "," +
                  std::string(mechanism_name(generated.mechanisms[i])) + "\n";
  }
  run.write("mechanisms.csv", mechanisms);
  std::cout << "generated " << generated.data.units.size() << " units\n";
}

void cmd_extract(const RunConfig& config, const RunDirectory& run) {
  const Dataset d = load_dataset(config);
  const ExtractResult result = extract_features(d, flags_of(config), limits_of(config));
  run.write("features.csv", features_to_csv(result.matrix));
  run.write("features.jsonl", features_to_jsonl(result.matrix));
  run.write("schema.json", schema_to_json(result.matrix.schema).dump(2) + "\n");
  std::string diag = "unit_id,reason\n";
  for (const auto& [unit, reason] : result.diagnostics) diag += csv_escape(unit) + "," + csv_escape(reason) + "\n";
  run.write("diagnostics.csv", diag);
  std::cout << result.matrix.units.size() << " units x " << result.matrix.schema.size() << " features, "
            << result.diagnostics.size() << " skipped\n";
}

void cmd_train(const RunConfig& config, const RunDirectory& run) {
  const FeatureMatrix all = labeled_rows(load_features(config));
  const Preset preset = preset_of(config);
  FeatureMatrix m = all.select(preset_schema(all.schema, preset.flags));
  if (preset.top_k) {
    const ExperimentResult selection = run_experiment(all, preset, config.k, config.seed, learner_options(config));
    m = m.select(*selection.selected);
    run.write("selected_features.json", selected_json(*selection.selected));
  }
  TreeEnsembleModel model = make_trainer(preset.learner, learner_options(config))(m.values, m.labels());
  model.schema = m.schema;
  run.write("model.json", model_to_json(model));
  std::cout << "trained " << model_kind_name(model.kind) << " on " << m.units.size() << " units x "
            << m.schema.size() << " features\n";
}

void cmd_evaluate(const RunConfig& config, const RunDirectory& run) {
  const FeatureMatrix m = labeled_rows(load_features(config));
  const ExperimentResult result = run_experiment(m, preset_of(config), config.k, config.seed, learner_options(config));
  run.write("report.json", result.report.to_json());
  run.write("report.txt", result.report.to_table());
  run.write("ranking.csv", ranking_csv(result.ranking));
  run.write("shap.csv", beeswarm_csv(result.shap, result.matrix, config.top_n));
  if (result.selected) run.write("selected_features.json", selected_json(*result.selected));
  std::printf("mean F1: %.4f\n", result.report.mean_f1);
}

void cmd_predict(const RunConfig& config, const RunDirectory& run) {
  const TreeEnsembleModel model = load_model(config);
  const FeatureMatrix features = load_features(config, &model.schema);
  const FeatureMatrix m = features.select(model.schema);
  const Eigen::VectorXd prob = predict_proba(model, m.values);
  std::string out = "unit_id,probability,flaky\n";
  for (std::size_t i = 0; i < m.units.size(); ++i) {
    const double p = prob[static_cast<Eigen::Index>(i)];
    out += csv_escape(m.units[i].unit_id) + "," + format_double(p) + "," + (predict_flaky(p) ? "1" : "0") + "\n";
  }
  run.write("predictions.csv", out);
  std::cout << "scored " << m.units.size() << " units\n";
}

void cmd_explain(const RunConfig& config, const RunDirectory& run) {
  const TreeEnsembleModel model = load_model(config);
  const FeatureMatrix m = load_features(config, &model.schema).select(model.schema);
  const ShapExplanation shap = tree_shap(model, m.values);
  run.write("shap.csv", beeswarm_csv(shap, m, config.top_n));
  run.write("beeswarm.svg", beeswarm_svg(shap, m.values, std::min(config.top_n, m.schema.size())));
  const FeatureRanking ranking = rank_features(shap);
  run.write("ranking.csv", ranking_csv(ranking));
  for (std::size_t i = 0; i < ranking.size() && i < config.top_n; ++i) {
    std::printf("%-40s %.6f\n", ranking[i].first.c_str(), ranking[i].second);
  }
}

void cmd_baseline(const RunConfig& config, const RunDirectory& run) {
  const Dataset d = load_dataset(config);
  std::string out = "unit_id,test_id,verdict,flaky\n";
  std::vector<bool> predicted;
  std::vector<int> truth;
  for (const auto& unit : d.units) {
    TestHistory visible{unit.test_id, {}};
    if (auto h = d.histories.find(unit.test_id); h != d.histories.end()) {
      for (const auto& r : h->second.records) {
        if (r.timestamp <= unit.reference_time) visible.records.push_back(r);
      }
    }
    const bool executed = std::any_of(visible.records.begin(), visible.records.end(), [](const ExecutionRecord& r) {
      return r.outcome == TestOutcome::Passed || r.outcome == TestOutcome::Failed ||
             r.outcome == TestOutcome::FlakyVerdict;
    });
    if (!executed) {
      // Nothing to classify; reported but kept out of the metrics.
      out += csv_escape(unit.unit_id) + "," + csv_escape(unit.test_id) + ",no_executions,\n";
      continue;
    }
    const BaselineVerdict verdict = baseline_classify(visible, config.baseline_window);
    const bool flaky = verdict == BaselineVerdict::FlakyB;
    out += csv_escape(unit.unit_id) + "," + csv_escape(unit.test_id) + "," + std::string(verdict_name(verdict)) +
           "," + (flaky ? "1" : "0") + "\n";
    if (unit.label) {
      predicted.push_back(flaky);
      truth.push_back(*unit.label ? 1 : 0);
    }
  }
  run.write("baseline.csv", out);
  if (!truth.empty()) {
    const Confusion c = confusion(predicted, Eigen::Map<const Labels>(truth.data(), static_cast<Eigen::Index>(truth.size())));
    const Metrics metrics = Metrics::from(c);
    nlohmann::ordered_json doc;
    doc["tp"] = c.tp;
    doc["fp"] = c.fp;
    doc["fn"] = c.fn;
    doc["tn"] = c.tn;
    doc["precision"] = metrics.precision;
    doc["recall"] = metrics.recall;
    doc["f1"] = metrics.f1;
    run.write("baseline_report.json", doc.dump(2) + "\n");
    std::printf("baseline F1: %.4f\n", metrics.f1);
  }
}

using Command = void (*)(const RunConfig&, const RunDirectory&);

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flakelens: flaky test prediction from CI history, durations and code churn"};
  app.require_subcommand(1);

  const std::vector<std::pair<const char*, std::pair<const char*, Command>>> commands{
      {"synth", {"generate a synthetic dataset", cmd_synth}},
      {"extract", {"compute feature matrix files", cmd_extract}},
      {"train", {"fit a model on labeled units", cmd_train}},
      {"evaluate", {"cross-validate a configuration", cmd_evaluate}},
      {"predict", {"score units with a trained model", cmd_predict}},
      {"explain", {"SHAP attributions of a trained model", cmd_explain}},
      {"baseline", {"rule-based verdict per unit", cmd_baseline}},
  };

  std::string config_path;
  bool force = false;
  std::vector<Override> overrides = make_overrides();
  Command selected = nullptr;
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_flag("--force", force, "allow writing into an existing run directory");
    for (auto& o : overrides) {
      if (o.kind == Override::Kind::Bool) {
        sub->add_flag(o.flag, o.flag_value, o.help);
      } else if (o.kind == Override::Kind::StringList || o.kind == Override::Kind::IntList ||
                 o.kind == Override::Kind::StringMap) {
        auto* opt = sub->add_option(o.flag, o.values, o.help);
        if (o.kind == Override::Kind::IntList) opt->type_name("INT");
        if (o.kind == Override::Kind::StringMap) opt->type_name("ID=PATH");
      } else {
        auto* opt = sub->add_option(o.flag, o.values, o.help)->expected(1);
        if (o.kind == Override::Kind::Int) opt->type_name("INT");
        if (o.kind == Override::Kind::Double) opt->type_name("FLOAT");
      }
    }
    sub->callback([&selected, cmd = entry.second] { selected = cmd; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }

  try {
    const RunConfig config = resolve_config(config_path, overrides);
    validate_paths(config);
    RunDirectory run(config, force);
    selected(config, run);
    run.commit();
    std::cout << "wrote " << run.final_path().string() << "\n";
    return 0;
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code;
  } catch (const SchemaMismatchError& e) {
    std::cerr << "error: schema mismatch: " << e.what() << "\n";
    return kExitSchema;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
