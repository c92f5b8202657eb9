#include <gtest/gtest.h>

#include <random>

#include "flakelens/errors.hpp"
#include "flakelens/learner.hpp"
#include "flakelens/model_io.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace flakelens {
namespace {

Eigen::MatrixXd column(std::vector<double> v) {
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Labels labels(std::vector<int> v) { return Eigen::Map<Labels>(v.data(), static_cast<Eigen::Index>(v.size())); }

TEST(Stump, SeparableMidpoint) {
  auto m = fit_stump(column({0.1, 0.2, 0.8, 0.9}), labels({0, 0, 1, 1}));
  ASSERT_EQ(m.trees.size(), 1u);
  const auto& root = m.trees[0].nodes[0];
  EXPECT_DOUBLE_EQ(root.threshold, 0.5);
  EXPECT_EQ(m.trees[0].nodes[static_cast<std::size_t>(root.right)].value, 1.0);
  EXPECT_EQ(m.trees[0].nodes[static_cast<std::size_t>(root.left)].value, 0.0);
  EXPECT_EQ(root.cover, 4.0);
  EXPECT_TRUE(predict_flaky(predict_proba(m, Eigen::VectorXd::Constant(1, 0.7))));
  EXPECT_FALSE(predict_flaky(predict_proba(m, Eigen::VectorXd::Constant(1, 0.3))));
}

TEST(Stump, Errors) {
  EXPECT_THROW(fit_stump(column({1, 1, 1}), labels({0, 1, 0})), DegenerateModelError);
  EXPECT_THROW(fit_stump(column({1, 2, 3}), labels({1, 1, 1})), DegenerateModelError);
  EXPECT_THROW(fit_stump(Eigen::MatrixXd::Zero(3, 2), labels({0, 1, 0})), ContractViolation);
  EXPECT_THROW(fit_gbm(column({1, NAN, 3}), labels({0, 1, 0})), ContractViolation);
}

TEST(Stump, MatchesExhaustiveGiniScan) {
  {
    std::vector<double> x{0, 1, 2, 3};
    std::vector<int> y{0, 1, 0, 1};
    auto m = fit_stump(column(x), labels(y));
    EXPECT_DOUBLE_EQ(m.trees[0].nodes[0].threshold, oracle::best_gini_threshold(x, y));
  }
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 4 + rng() % 40;
    std::vector<double> x(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng() % 12) / 4.0;
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    if (std::set<double>(x.begin(), x.end()).size() < 2) continue;
    auto m = fit_stump(column(x), labels(y));
    EXPECT_DOUBLE_EQ(m.trees[0].nodes[0].threshold, oracle::best_gini_threshold(x, y));
  }
}

TEST(Cart, XorNeedsDepthTwo) {
  Eigen::MatrixXd X(4, 2);
  X << 0, 0, 0, 1, 1, 0, 1, 1;
  const Labels y = labels({0, 1, 1, 0});
  auto m = fit_cart(X, y, {.max_depth = 2});
  for (Eigen::Index r = 0; r < 4; ++r) EXPECT_EQ(predict_flaky(predict_proba(m, X.row(r))), y[r] == 1);
  EXPECT_EQ(m.trees[0].depth(), 2);
}

TEST(Cart, ZeroDepthAndPurity) {
  Eigen::MatrixXd X(5, 1);
  X << 1, 2, 3, 4, 5;
  auto leaf = fit_cart(X, labels({0, 1, 1, 0, 1}), {.max_depth = 0});
  ASSERT_EQ(leaf.trees[0].nodes.size(), 1u);
  EXPECT_DOUBLE_EQ(predict_proba(leaf, Eigen::VectorXd::Constant(1, 9.0)), 0.6);

  // Pure child nodes are not split further.
  auto pure = fit_cart(X, labels({0, 0, 1, 1, 1}), {.max_depth = 5});
  EXPECT_EQ(pure.trees[0].nodes.size(), 3u);
}

TEST(Cart, PartitionInvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(40, 3);
    Labels y(40);
    for (int i = 0; i < 40; ++i) y[i] = (X(i, 0) + 0.3 * X(i, 1) + 0.2 * std::sin(i) > 0) ? 1 : 0;
    Eigen::MatrixXd Z = X;
    Z.col(1) = X.col(1).array().exp() * 3.0 + 7.0;
    auto a = fit_cart(X, y);
    auto b = fit_cart(Z, y);
    ASSERT_EQ(a.trees[0].nodes.size(), b.trees[0].nodes.size());
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      EXPECT_EQ(predict_proba(a, X.row(r)), predict_proba(b, Z.row(r)));
    }
  }
}

TEST(Gbm, PriorOnlyModel) {
  Eigen::MatrixXd X(4, 1);
  X << 1, 2, 3, 4;
  auto balanced = fit_gbm(X, labels({0, 1, 0, 1}), {.n_trees = 0});
  EXPECT_EQ(balanced.initial_score, 0.0);
  EXPECT_EQ(predict_proba(balanced, Eigen::VectorXd::Constant(1, 2.5)), 0.5);
  auto skewed = fit_gbm(X, labels({0, 1, 1, 1}), {.n_trees = 0});
  EXPECT_NEAR(predict_proba(skewed, Eigen::VectorXd::Constant(1, 0.0)), 0.75, 1e-15);
}

TEST(Gbm, SeparableLossStrictlyDecreases) {
  Eigen::MatrixXd X(8, 2);
  X << 0, 1, 1, 0, 1, 1, 2, 0, 5, 5, 6, 4, 5, 6, 7, 5;
  const Labels y = labels({0, 0, 0, 0, 1, 1, 1, 1});
  auto m = fit_gbm(X, y, {.n_trees = 30});
  double prev = log_loss(truncated(m, 0), X, y);
  for (std::size_t t = 1; t <= m.trees.size(); ++t) {
    const double cur = log_loss(truncated(m, t), X, y);
    EXPECT_LT(cur, prev) << "iteration " << t;
    prev = cur;
  }
}

TEST(Gbm, LossNonIncreasingOnNoisyFixtures) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> noise(0, 1);
  for (int fixture = 0; fixture < 10; ++fixture) {
    const int n = 60 + fixture * 10;
    Eigen::MatrixXd X(n, 4);
    Labels y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < 4; ++j) X(i, j) = noise(rng);
      y[i] = X(i, 0) + 0.5 * X(i, 1) * X(i, 2) + noise(rng) > 0 ? 1 : 0;
    }
    auto m = fit_gbm(X, y);
    double prev = log_loss(truncated(m, 0), X, y);
    for (std::size_t t = 1; t <= m.trees.size(); ++t) {
      const double cur = log_loss(truncated(m, t), X, y);
      EXPECT_LE(cur, prev + 1e-12) << "fixture " << fixture << " iteration " << t;
      prev = cur;
    }
  }
}

TEST(Gbm, Deterministic) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(50, 3);
  Labels y(50);
  for (int i = 0; i < 50; ++i) y[i] = X(i, 2) > 0.1 ? 1 : 0;
  EXPECT_EQ(model_to_json(fit_gbm(X, y)), model_to_json(fit_gbm(X, y)));
}

TEST(Predict, MatchesRecursiveWalk) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    TreeEnsembleModel m;
    m.kind = ModelKind::Gbm;
    m.n_features = 5;
    m.initial_score = 0.3;
    m.learning_rate = 0.1;
    for (int t = 0; t < 5; ++t) m.trees.push_back(testing::random_tree(rng, 5, 4));
    Eigen::VectorXd x = Eigen::VectorXd::Random(5);
    EXPECT_NEAR(predict_raw(m, x), oracle::raw_score(m, x), 1e-12);
    const double p = predict_proba(m, x);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
}

TEST(Predict, Examples) {
  TreeEnsembleModel empty;
  empty.kind = ModelKind::Gbm;
  empty.n_features = 2;
  EXPECT_EQ(predict_proba(empty, Eigen::Vector2d(1, 2)), 0.5);
  EXPECT_THROW(predict_proba(empty, Eigen::Vector3d(1, 2, 3)), SchemaMismatchError);

  Eigen::MatrixXd X = Eigen::MatrixXd::Constant(7, 1, 1.0);
  X(0, 0) = 0.0;
  Labels y = Labels::Ones(7);
  y[0] = 0;
  auto cart = fit_cart(X, y);
  EXPECT_EQ(predict_proba(cart, Eigen::VectorXd::Constant(1, 1.0)), 1.0);  // pure leaf of 6
}

TEST(ModelJson, RoundTrip) {
  std::mt19937_64 rng(15);
  TreeEnsembleModel m;
  m.kind = ModelKind::Gbm;
  m.n_features = 4;
  m.initial_score = -0.123456789012345;
  m.learning_rate = 0.1;
  for (int t = 0; t < 4; ++t) m.trees.push_back(testing::random_tree(rng, 4, 3));
  const auto text = model_to_json(m);
  auto back = model_from_json(text);
  EXPECT_EQ(back.kind, m.kind);
  EXPECT_EQ(back.initial_score, m.initial_score);
  ASSERT_EQ(back.trees.size(), m.trees.size());
  for (std::size_t i = 0; i < m.trees.size(); ++i) EXPECT_EQ(back.trees[i].nodes, m.trees[i].nodes);
  EXPECT_EQ(model_to_json(back), text);
  EXPECT_THROW(model_from_json("{\"format\":\"other\"}"), Error);
  EXPECT_THROW(model_from_json("not json"), Error);
}

}  // namespace
}  // namespace flakelens
