#include "flakelens/tree.hpp"

#include <algorithm>
#include <functional>

namespace flakelens {

int Tree::depth() const {
  std::function<int(int)> walk = [&](int n) -> int {
    const auto& node = nodes[static_cast<std::size_t>(n)];
    if (node.is_leaf()) return 0;
    return 1 + std::max(walk(node.left), walk(node.right));
  };
  return nodes.empty() ? 0 : walk(0);
}

double Tree::expected_value() const {
  std::function<double(int)> walk = [&](int n) -> double {
    const auto& node = nodes[static_cast<std::size_t>(n)];
    if (node.is_leaf()) return node.value;
    const auto& l = nodes[static_cast<std::size_t>(node.left)];
    const auto& r = nodes[static_cast<std::size_t>(node.right)];
    return (l.cover * walk(node.left) + r.cover * walk(node.right)) / node.cover;
  };
  return walk(0);
}

bool Tree::has_cover() const {
  return std::all_of(nodes.begin(), nodes.end(),
                     [](const TreeNode& n) { return std::isfinite(n.cover) && n.cover > 0.0; });
}

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Stump: return "stump";
    case ModelKind::Cart: return "cart";
    case ModelKind::Gbm: return "gbm";
  }
  return "cart";
}

ModelKind model_kind_from_name(std::string_view name) {
  for (auto k : {ModelKind::Stump, ModelKind::Cart, ModelKind::Gbm}) {
    if (model_kind_name(k) == name) return k;
  }
  throw ValidationError("unknown model kind '" + std::string(name) + "'");
}

double predict_proba(const TreeEnsembleModel& model, const FeatureVector& x) {
  return predict_proba(model, x.values);
}

Eigen::VectorXd predict_raw(const TreeEnsembleModel& model, const Eigen::MatrixXd& X) {
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index r = 0; r < X.rows(); ++r) out[r] = predict_raw(model, X.row(r));
  return out;
}

Eigen::VectorXd predict_proba(const TreeEnsembleModel& model, const Eigen::MatrixXd& X) {
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index r = 0; r < X.rows(); ++r) out[r] = predict_proba(model, X.row(r));
  return out;
}

TreeEnsembleModel truncated(const TreeEnsembleModel& model, std::size_t n_trees) {
  TreeEnsembleModel out = model;
  if (out.trees.size() > n_trees) out.trees.resize(n_trees);
  return out;
}

double log_loss(const TreeEnsembleModel& model, const Eigen::MatrixXd& X, const Labels& y) {
  constexpr double eps = 1e-15;
  const Eigen::VectorXd p = predict_proba(model, X);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double pi = std::clamp(p[i], eps, 1.0 - eps);
    loss -= y[i] == 1 ? std::log(pi) : std::log(1.0 - pi);
  }
  return loss / static_cast<double>(X.rows());
}

}  // namespace flakelens
