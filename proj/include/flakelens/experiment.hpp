#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flakelens/dataset.hpp"
#include "flakelens/evaluation.hpp"
#include "flakelens/explainer.hpp"

namespace flakelens {

/// A named feature configuration plus the learner evaluated on it.
struct Preset {
  std::string name;
  FeatureFlags flags;
  ModelKind learner = ModelKind::Gbm;
  /// Re-evaluate on the k features with the largest mean |SHAP|.
  std::optional<std::size_t> top_k;
};

/// rq1-<decay kind>, rq1-entropy, rq2-mean, rq2-diff, rq2, rq3, full, all, top3.
Preset preset_by_name(std::string_view name);
std::vector<std::string> preset_names();

/// Columns of `full` that belong to the preset's feature groups.
FeatureSchema preset_schema(const FeatureSchema& full, const FeatureFlags& flags);

struct LearnerOptions {
  GbmParams gbm;
  CartParams cart;
};

Trainer make_trainer(ModelKind kind, const LearnerOptions& options = {});

struct ExperimentResult {
  FeatureMatrix matrix;  // columns actually used
  EvaluationReport report;
  ShapExplanation shap;  // out-of-fold, rows aligned with matrix
  FeatureRanking ranking;
  std::optional<FeatureSchema> selected;  // top-k runs: the chosen features
};

/// Cross-validates the preset on an already extracted matrix that contains
/// (at least) the preset's columns. SHAP values come from each fold's model
/// on its own test rows.
ExperimentResult run_experiment(const FeatureMatrix& features, const Preset& preset, int k, std::uint64_t seed,
                                const LearnerOptions& options = {});

/// Extracts features for the preset from a dataset and runs it.
ExperimentResult run_experiment(const Dataset& dataset, const Preset& preset, int k, std::uint64_t seed,
                                const LearnerOptions& options = {});

}  // namespace flakelens
