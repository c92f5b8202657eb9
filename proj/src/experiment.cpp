#include "flakelens/experiment.hpp"

#include <algorithm>

#include "flakelens/errors.hpp"

namespace flakelens {

namespace {

FeatureFlags none() {
  FeatureFlags f;
  f.decay_kinds.clear();
  return f;
}

FeatureFlags full_flags() {
  FeatureFlags f = FeatureFlags::outcomes_only(DecayKind::reciprocal_squared());
  f.mean_duration = f.mean_duration_diff = true;
  f.churn_counts = f.project = f.pull_request = true;
  return f;
}

}  // namespace

Preset preset_by_name(std::string_view name) {
  const std::string n(name);
  if (n.rfind("rq1-", 0) == 0) {
    const auto rest = n.substr(4);
    if (rest == "entropy") {
      auto f = none();
      f.entropy = true;
      return {n, f, ModelKind::Stump, std::nullopt};
    }
    auto rest_kind = rest == "recsq" ? std::string("reciprocal_squared") : rest;
    return {n, FeatureFlags::outcomes_only(DecayKind::from_name(rest_kind)), ModelKind::Stump, std::nullopt};
  }
  auto f = FeatureFlags::outcomes_only(DecayKind::reciprocal_squared());
  if (n == "rq2-mean") {
    f.mean_duration = true;
    return {n, f, ModelKind::Gbm, std::nullopt};
  }
  if (n == "rq2-diff") {
    f.mean_duration_diff = true;
    return {n, f, ModelKind::Gbm, std::nullopt};
  }
  if (n == "rq2") {
    f.mean_duration = f.mean_duration_diff = true;
    return {n, f, ModelKind::Gbm, std::nullopt};
  }
  if (n == "rq3") {
    f.churn_counts = f.project = f.pull_request = true;
    return {n, f, ModelKind::Gbm, std::nullopt};
  }
  if (n == "full") return {n, full_flags(), ModelKind::Gbm, std::nullopt};
  if (n == "all") return {n, FeatureFlags::all(), ModelKind::Gbm, std::nullopt};
  if (n == "top3") return {n, full_flags(), ModelKind::Gbm, std::size_t{3}};
  throw ValidationError("unknown preset '" + n + "'");
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& k : all_decay_kinds()) out.push_back("rq1-" + k.name());
  for (const char* n : {"rq1-entropy", "rq2-mean", "rq2-diff", "rq2", "rq3", "full", "all", "top3"}) out.push_back(n);
  return out;
}

FeatureSchema preset_schema(const FeatureSchema& full, const FeatureFlags& flags) {
  std::vector<std::string> keep;
  for (const auto& f : full.features()) {
    bool on = false;
    switch (f.group) {
      case FeatureGroup::FlipRate:
        on = std::find(flags.decay_kinds.begin(), flags.decay_kinds.end(), f.decay) != flags.decay_kinds.end();
        break;
      case FeatureGroup::Entropy: on = flags.entropy; break;
      case FeatureGroup::MeanDuration: on = flags.mean_duration; break;
      case FeatureGroup::MeanDurationDiff: on = flags.mean_duration_diff; break;
      case FeatureGroup::ChurnCount:
        on = flags.churn_counts && std::find(flags.windows_days.begin(), flags.windows_days.end(), f.window_days) !=
                                       flags.windows_days.end();
        break;
      case FeatureGroup::Project: on = flags.project; break;
      case FeatureGroup::PrChangedFiles:
      case FeatureGroup::PrContributors: on = flags.pull_request; break;
    }
    if (on) keep.push_back(f.name());
  }
  return full.subset(keep);
}

Trainer make_trainer(ModelKind kind, const LearnerOptions& options) {
  switch (kind) {
    case ModelKind::Stump: return stump_trainer();
    case ModelKind::Cart: return cart_trainer(options.cart);
    case ModelKind::Gbm: return gbm_trainer(options.gbm);
  }
  return gbm_trainer(options.gbm);
}

namespace {

ExperimentResult cross_validate_with_shap(const FeatureMatrix& m, ModelKind learner, int k, std::uint64_t seed,
                                          const LearnerOptions& options) {
  ExperimentResult result;
  result.matrix = m;
  const Labels y = m.labels();
  auto cv = cross_validate(m.values, y, make_trainer(learner, options), k, seed);
  result.report = cv.report;

  auto& shap = result.shap;
  shap.schema = m.schema;
  shap.values = Eigen::MatrixXd::Zero(m.values.rows(), m.values.cols());
  shap.row_base_values = Eigen::VectorXd::Zero(m.values.rows());
  for (std::size_t f = 0; f < cv.folds.size(); ++f) {
    const auto& test = cv.folds[f].test;
    auto& model = cv.models[f];
    model.schema = m.schema;
    const ShapExplanation fold_shap = tree_shap(model, m.values(test, Eigen::all));
    for (std::size_t i = 0; i < test.size(); ++i) {
      shap.values.row(test[i]) = fold_shap.values.row(static_cast<Eigen::Index>(i));
      shap.row_base_values[test[i]] = fold_shap.base_value;
    }
  }
  shap.base_value = shap.row_base_values.mean();
  result.ranking = rank_features(shap);
  return result;
}

}  // namespace

ExperimentResult run_experiment(const FeatureMatrix& features, const Preset& preset, int k, std::uint64_t seed,
                                const LearnerOptions& options) {
  const FeatureMatrix m = features.select(preset_schema(features.schema, preset.flags));
  if (m.schema.size() == 0) throw ValidationError("preset " + preset.name + " selects no features");
  if (preset.learner == ModelKind::Stump && m.schema.size() != 1) {
    throw ValidationError("stump presets need exactly one feature, got " + std::to_string(m.schema.size()));
  }
  ExperimentResult base = cross_validate_with_shap(m, preset.learner, k, seed, options);
  if (!preset.top_k) return base;

  const FeatureSchema selected = select_top_k(base.ranking, m.schema, *preset.top_k);
  ExperimentResult top = cross_validate_with_shap(m.select(selected), preset.learner, k, seed, options);
  top.selected = selected;
  return top;
}

ExperimentResult run_experiment(const Dataset& dataset, const Preset& preset, int k, std::uint64_t seed,
                                const LearnerOptions& options) {
  const auto extracted = extract_features(dataset, preset.flags);
  return run_experiment(extracted.matrix, preset, k, seed, options);
}

}  // namespace flakelens
