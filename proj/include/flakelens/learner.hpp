#pragma once

#include <functional>

#include <Eigen/Dense>

#include "flakelens/tree.hpp"

namespace flakelens {

struct CartParams {
  int max_depth = 3;
  int min_split = 2;  // nodes with fewer samples become leaves
};

struct GbmParams {
  int n_trees = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
  int min_split = 2;
};

/// Depth-1 Gini tree on a single column. Candidate thresholds are midpoints
/// of adjacent distinct values; ties go to the smallest threshold.
TreeEnsembleModel fit_stump(const Eigen::MatrixXd& X, const Labels& y);

/// Gini classification tree; leaves hold the flaky fraction.
TreeEnsembleModel fit_cart(const Eigen::MatrixXd& X, const Labels& y, CartParams params = {});

/// Gradient boosting on the logistic loss with one Newton step per leaf.
/// No row or column sampling, so fitting is deterministic.
TreeEnsembleModel fit_gbm(const Eigen::MatrixXd& X, const Labels& y, GbmParams params = {});

/// Fits a model on (X, y). Used by cross-validation.
using Trainer = std::function<TreeEnsembleModel(const Eigen::MatrixXd&, const Labels&)>;

Trainer stump_trainer();
Trainer cart_trainer(CartParams params = {});
Trainer gbm_trainer(GbmParams params = {});

}  // namespace flakelens
