#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "flakelens/errors.hpp"
#include "flakelens/features.hpp"

namespace flakelens {

/// Flattened binary tree node. Samples with x[feature] <= threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output
  double cover = std::numeric_limits<double>::quiet_NaN();  // training samples reaching the node

  bool is_leaf() const { return left < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Node 0 is the root.
struct Tree {
  std::vector<TreeNode> nodes;

  int depth() const;
  /// Cover-weighted mean leaf value.
  double expected_value() const;
  bool has_cover() const;

  template <typename Derived>
  double predict(const Eigen::DenseBase<Derived>& x) const {
    int n = 0;
    while (!nodes[static_cast<std::size_t>(n)].is_leaf()) {
      const auto& node = nodes[static_cast<std::size_t>(n)];
      n = x(node.feature) <= node.threshold ? node.left : node.right;
    }
    return nodes[static_cast<std::size_t>(n)].value;
  }
};

enum class ModelKind { Stump, Cart, Gbm };

std::string_view model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(std::string_view name);

/// Raw score = initial_score + learning_rate * sum of tree outputs. For Stump
/// and Cart the raw score is the leaf's flaky fraction; Gbm squashes it with
/// the logistic function.
struct TreeEnsembleModel {
  ModelKind kind = ModelKind::Cart;
  std::vector<Tree> trees;
  double initial_score = 0.0;
  double learning_rate = 1.0;
  Eigen::Index n_features = 0;
  FeatureSchema schema;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

template <typename Derived>
double predict_raw(const TreeEnsembleModel& model, const Eigen::DenseBase<Derived>& x) {
  if (x.size() != model.n_features) {
    throw SchemaMismatchError("expected " + std::to_string(model.n_features) + " features, got " +
                              std::to_string(x.size()));
  }
  double sum = 0.0;
  for (const auto& tree : model.trees) sum += tree.predict(x);
  return model.initial_score + model.learning_rate * sum;
}

template <typename Derived>
double predict_proba(const TreeEnsembleModel& model, const Eigen::DenseBase<Derived>& x) {
  const double raw = predict_raw(model, x);
  return model.kind == ModelKind::Gbm ? sigmoid(raw) : std::clamp(raw, 0.0, 1.0);
}

double predict_proba(const TreeEnsembleModel& model, const FeatureVector& x);

/// Row-wise raw scores / probabilities.
Eigen::VectorXd predict_raw(const TreeEnsembleModel& model, const Eigen::MatrixXd& X);
Eigen::VectorXd predict_proba(const TreeEnsembleModel& model, const Eigen::MatrixXd& X);

/// Class decision at probability 0.5; exact ties are non-flaky.
inline bool predict_flaky(double probability) { return probability > 0.5; }

/// Model restricted to its first `n_trees` trees.
TreeEnsembleModel truncated(const TreeEnsembleModel& model, std::size_t n_trees);

/// Mean binary cross-entropy of the model's probabilities.
double log_loss(const TreeEnsembleModel& model, const Eigen::MatrixXd& X, const Labels& y);

}  // namespace flakelens
