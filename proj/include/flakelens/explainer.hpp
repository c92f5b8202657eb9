#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "flakelens/tree.hpp"

namespace flakelens {

/// Per-unit additive attributions on the model's raw-score scale.
struct ShapExplanation {
  double base_value = 0.0;
  /// Per-row base values when rows come from different models (out-of-fold
  /// attributions); empty means every row uses base_value.
  Eigen::VectorXd row_base_values;
  Eigen::MatrixXd values;  // units x features
  FeatureSchema schema;
};

/// Features by mean |SHAP|, descending; ties keep schema order.
using FeatureRanking = std::vector<std::pair<std::string, double>>;

/// Path-dependent TreeSHAP: exact Shapley values of the cover-weighted
/// conditional expectation, summed over trees and scaled by the learning
/// rate. Rows satisfy base_value + sum(row) == raw score.
ShapExplanation tree_shap(const TreeEnsembleModel& model, const Eigen::MatrixXd& X);

/// Attributions for a single input row.
Eigen::VectorXd tree_shap_row(const TreeEnsembleModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

inline constexpr Eigen::Index kMaxBruteForceFeatures = 12;

/// Exhaustive Shapley values over all 2^M coalitions using the same
/// cover-weighted coalition value. Refuses M > kMaxBruteForceFeatures.
Eigen::VectorXd brute_force_shapley(const TreeEnsembleModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Cover-weighted expectation of the raw score with the features in `mask`
/// fixed to x.
double coalition_value(const TreeEnsembleModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                       const std::vector<bool>& mask);

FeatureRanking rank_features(const ShapExplanation& explanation);

/// Sub-schema with the k best-ranked features, in the schema's own order.
FeatureSchema select_top_k(const FeatureRanking& ranking, const FeatureSchema& schema, std::size_t k = 3);

/// Mid-rank percentile of every entry of `column` in [0, 1]; 0.5 for a
/// single value.
Eigen::VectorXd percentiles(const Eigen::VectorXd& column);

/// Long-form CSV feature,unit_id,shap_value,feature_value,feature_percentile
/// for the top_n ranked features.
void export_beeswarm(const ShapExplanation& explanation, const Eigen::MatrixXd& X,
                     const std::vector<std::string>& unit_ids, std::size_t top_n, std::ostream& out);

/// Self-contained SVG beeswarm of the same data.
std::string beeswarm_svg(const ShapExplanation& explanation, const Eigen::MatrixXd& X, std::size_t top_n);

/// Ranking as CSV: feature,mean_abs_shap.
std::string ranking_csv(const FeatureRanking& ranking);

}  // namespace flakelens
