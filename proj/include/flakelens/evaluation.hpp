#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flakelens/learner.hpp"

namespace flakelens {

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Flaky is the positive class. Zero denominators yield 0.
struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static Metrics from(const Confusion& c);
};

Confusion confusion(const std::vector<bool>& predicted, const Labels& actual);

struct Fold {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> test;
};

/// k disjoint, class-balanced test folds covering every index; fixed by seed.
std::vector<Fold> stratified_kfold(const Labels& y, int k, std::uint64_t seed);

/// Population standard deviation over mean.
double relative_std(const std::vector<double>& values);

struct FoldResult {
  Metrics metrics;
  Confusion confusion;
  std::optional<double> threshold;  // stump models only
};

struct EvaluationReport {
  std::vector<FoldResult> per_fold;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_f1 = 0.0;
  std::optional<double> cv_threshold;  // stump models only

  std::string to_json() const;
  std::string to_table() const;
};

struct CrossValidation {
  std::vector<Fold> folds;
  std::vector<TreeEnsembleModel> models;
  EvaluationReport report;
};

/// Stratified k-fold fit/predict loop that keeps the fold models.
CrossValidation cross_validate(const Eigen::MatrixXd& X, const Labels& y, const Trainer& trainer, int k,
                               std::uint64_t seed);

EvaluationReport evaluate(const Eigen::MatrixXd& X, const Labels& y, const Trainer& trainer, int k,
                          std::uint64_t seed);

}  // namespace flakelens
