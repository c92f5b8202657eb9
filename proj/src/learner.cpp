#include "flakelens/learner.hpp"

#include <algorithm>
#include <numeric>

namespace flakelens {

namespace {

using Index = Eigen::Index;
using Rows = std::vector<Index>;

enum class Criterion { Gini, SquaredError };

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double cost = std::numeric_limits<double>::infinity();
};

// Sum of per-side impurities weighted by side size; lower is better.
double side_cost(Criterion criterion, double n, double sum) {
  if (criterion == Criterion::Gini) {
    const double p = sum / n;
    return n * 2.0 * p * (1.0 - p);
  }
  return -(sum * sum) / n;
}

double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid < hi ? mid : lo;
}

// Best split of `rows` over all columns. Targets are 0/1 labels for Gini and
// residuals for squared error.
Split best_split(const Eigen::MatrixXd& X, const Eigen::VectorXd& target, const Rows& rows, Criterion criterion) {
  const double n = static_cast<double>(rows.size());
  double total = 0.0;
  for (Index r : rows) total += target[r];

  Split best;
  Rows order = rows;
  for (Index f = 0; f < X.cols(); ++f) {
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return X(a, f) < X(b, f); });
    double left_sum = 0.0;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      left_sum += target[order[i]];
      const double lo = X(order[i], f);
      const double hi = X(order[i + 1], f);
      if (!(lo < hi)) continue;
      const double nl = static_cast<double>(i + 1);
      const double cost = side_cost(criterion, nl, left_sum) + side_cost(criterion, n - nl, total - left_sum);
      if (cost < best.cost - 1e-12) best = {static_cast<int>(f), midpoint(lo, hi), cost};
    }
  }
  return best;
}

struct Grower {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& target;
  Criterion criterion;
  int max_depth;
  int min_split;
  std::function<double(const Rows&)> leaf_value;
  Tree tree;

  int grow(const Rows& rows, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes.back().cover = static_cast<double>(rows.size());

    auto make_leaf = [&] {
      tree.nodes[static_cast<std::size_t>(id)].value = leaf_value(rows);
      return id;
    };
    if (depth >= max_depth || static_cast<int>(rows.size()) < min_split) return make_leaf();

    const double n = static_cast<double>(rows.size());
    double sum = 0.0;
    for (Index r : rows) sum += target[r];
    if (criterion == Criterion::Gini && (sum == 0.0 || sum == n)) return make_leaf();

    const Split split = best_split(X, target, rows, criterion);
    if (split.feature < 0) return make_leaf();
    // Regression splits must reduce the squared error.
    if (criterion == Criterion::SquaredError && !(split.cost < side_cost(criterion, n, sum) - 1e-12)) {
      return make_leaf();
    }

    Rows left, right;
    for (Index r : rows) (X(r, split.feature) <= split.threshold ? left : right).push_back(r);
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return id;
  }
};

void check_inputs(const Eigen::MatrixXd& X, const Labels& y) {
  if (X.rows() != y.size()) throw ContractViolation("feature rows and labels differ in length");
  if (X.rows() < 2) throw DegenerateModelError("need at least two samples");
  if (!X.allFinite()) throw ContractViolation("non-finite feature value");
  const Index positives = (y.array() == 1).count();
  if ((y.array() == 0).count() + positives != y.size()) throw ContractViolation("labels must be 0 or 1");
  if (positives == 0 || positives == y.size()) throw DegenerateModelError("labels contain a single class");
}

Rows all_rows(Index n) {
  Rows rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  return rows;
}

TreeEnsembleModel classification_tree(const Eigen::MatrixXd& X, const Labels& y, CartParams params,
                                      ModelKind kind) {
  const Eigen::VectorXd target = y.cast<double>();
  auto fraction = [&](const Rows& rows) {
    double s = 0.0;
    for (Index r : rows) s += target[r];
    return s / static_cast<double>(rows.size());
  };
  Grower g{X, target, Criterion::Gini, params.max_depth, params.min_split, fraction, {}};
  g.grow(all_rows(X.rows()), 0);

  TreeEnsembleModel model;
  model.kind = kind;
  model.trees.push_back(std::move(g.tree));
  model.n_features = X.cols();
  return model;
}

}  // namespace

TreeEnsembleModel fit_stump(const Eigen::MatrixXd& X, const Labels& y) {
  if (X.cols() != 1) throw ContractViolation("stump expects exactly one feature column");
  check_inputs(X, y);
  if (X.col(0).minCoeff() == X.col(0).maxCoeff()) throw DegenerateModelError("all feature values are equal");
  return classification_tree(X, y, {.max_depth = 1, .min_split = 2}, ModelKind::Stump);
}

TreeEnsembleModel fit_cart(const Eigen::MatrixXd& X, const Labels& y, CartParams params) {
  check_inputs(X, y);
  if (params.max_depth < 0) throw ContractViolation("max_depth must be non-negative");
  return classification_tree(X, y, params, ModelKind::Cart);
}

TreeEnsembleModel fit_gbm(const Eigen::MatrixXd& X, const Labels& y, GbmParams params) {
  check_inputs(X, y);
  if (params.n_trees < 0 || params.max_depth < 0 || !(params.learning_rate > 0.0)) {
    throw ContractViolation("invalid boosting parameters");
  }
  const Index n = X.rows();
  const Eigen::VectorXd target = y.cast<double>();
  const double base_rate = target.mean();

  TreeEnsembleModel model;
  model.kind = ModelKind::Gbm;
  model.initial_score = std::log(base_rate / (1.0 - base_rate));
  model.learning_rate = params.learning_rate;
  model.n_features = X.cols();

  Eigen::VectorXd raw = Eigen::VectorXd::Constant(n, model.initial_score);
  for (int m = 0; m < params.n_trees; ++m) {
    const Eigen::VectorXd prob = raw.unaryExpr([](double z) { return sigmoid(z); });
    const Eigen::VectorXd residual = target - prob;
    auto newton = [&](const Rows& rows) {
      double num = 0.0, den = 0.0;
      for (Index r : rows) {
        num += residual[r];
        den += prob[r] * (1.0 - prob[r]);
      }
      return den < 1e-150 ? 0.0 : num / den;
    };
    Grower g{X, residual, Criterion::SquaredError, params.max_depth, params.min_split, newton, {}};
    g.grow(all_rows(n), 0);
    for (Index r = 0; r < n; ++r) raw[r] += params.learning_rate * g.tree.predict(X.row(r));
    model.trees.push_back(std::move(g.tree));
  }
  return model;
}

Trainer stump_trainer() {
  return [](const Eigen::MatrixXd& X, const Labels& y) { return fit_stump(X, y); };
}

Trainer cart_trainer(CartParams params) {
  return [params](const Eigen::MatrixXd& X, const Labels& y) { return fit_cart(X, y, params); };
}

Trainer gbm_trainer(GbmParams params) {
  return [params](const Eigen::MatrixXd& X, const Labels& y) { return fit_gbm(X, y, params); };
}

}  // namespace flakelens
