#include "flakelens/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include <json.hpp>

namespace flakelens {

Metrics Metrics::from(const Confusion& c) {
  Metrics m;
  m.precision = c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  m.recall = c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

Confusion confusion(const std::vector<bool>& predicted, const Labels& actual) {
  if (predicted.size() != static_cast<std::size_t>(actual.size())) {
    throw ContractViolation("prediction and label counts differ");
  }
  Confusion c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool truth = actual[static_cast<Eigen::Index>(i)] == 1;
    if (predicted[i] && truth) ++c.tp;
    else if (predicted[i]) ++c.fp;
    else if (truth) ++c.fn;
    else ++c.tn;
  }
  return c;
}

std::vector<Fold> stratified_kfold(const Labels& y, int k, std::uint64_t seed) {
  if (k < 2) throw ContractViolation("k-fold needs k >= 2");
  std::vector<Eigen::Index> by_class[2];
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) throw ContractViolation("labels must be 0 or 1");
    by_class[y[i]].push_back(i);
  }
  for (const auto& members : by_class) {
    if (members.size() < static_cast<std::size_t>(k)) {
      throw ValidationError("a class has fewer than k=" + std::to_string(k) + " members");
    }
  }

  std::mt19937_64 rng(seed);
  std::vector<int> fold_of(static_cast<std::size_t>(y.size()));
  std::size_t offset = 0;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t j = 0; j < members.size(); ++j) {
      fold_of[static_cast<std::size_t>(members[j])] = static_cast<int>((j + offset) % static_cast<std::size_t>(k));
    }
    // The next class starts where this one stopped so fold sizes stay even.
    offset = (offset + members.size()) % static_cast<std::size_t>(k);
  }

  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    for (int f = 0; f < k; ++f) {
      auto& fold = folds[static_cast<std::size_t>(f)];
      (fold_of[static_cast<std::size_t>(i)] == f ? fold.test : fold.train).push_back(i);
    }
  }
  return folds;
}

double relative_std(const std::vector<double>& values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return std::sqrt(var) / mean;
}

CrossValidation cross_validate(const Eigen::MatrixXd& X, const Labels& y, const Trainer& trainer, int k,
                               std::uint64_t seed) {
  if (X.rows() != y.size()) throw ContractViolation("feature rows and labels differ in length");
  CrossValidation cv;
  cv.folds = stratified_kfold(y, k, seed);
  std::vector<double> thresholds;
  for (const auto& fold : cv.folds) {
    const Eigen::MatrixXd X_train = X(fold.train, Eigen::all);
    const Labels y_train = y(fold.train);
    TreeEnsembleModel model = trainer(X_train, y_train);

    std::vector<bool> predicted;
    for (Eigen::Index r : fold.test) predicted.push_back(predict_flaky(predict_proba(model, X.row(r))));
    FoldResult result;
    result.confusion = confusion(predicted, y(fold.test));
    result.metrics = Metrics::from(result.confusion);
    if (model.kind == ModelKind::Stump) {
      result.threshold = model.trees.front().nodes.front().threshold;
      thresholds.push_back(*result.threshold);
    }
    cv.report.per_fold.push_back(result);
    cv.models.push_back(std::move(model));
  }

  auto& rep = cv.report;
  for (const auto& f : rep.per_fold) {
    rep.mean_precision += f.metrics.precision;
    rep.mean_recall += f.metrics.recall;
    rep.mean_f1 += f.metrics.f1;
  }
  const double folds = static_cast<double>(rep.per_fold.size());
  rep.mean_precision /= folds;
  rep.mean_recall /= folds;
  rep.mean_f1 /= folds;
  if (thresholds.size() == rep.per_fold.size()) rep.cv_threshold = relative_std(thresholds);
  return cv;
}

EvaluationReport evaluate(const Eigen::MatrixXd& X, const Labels& y, const Trainer& trainer, int k,
                          std::uint64_t seed) {
  return cross_validate(X, y, trainer, k, seed).report;
}

std::string EvaluationReport::to_json() const {
  nlohmann::ordered_json doc;
  auto folds = nlohmann::ordered_json::array();
  for (const auto& f : per_fold) {
    nlohmann::ordered_json item;
    item["precision"] = f.metrics.precision;
    item["recall"] = f.metrics.recall;
    item["f1"] = f.metrics.f1;
    item["tp"] = f.confusion.tp;
    item["fp"] = f.confusion.fp;
    item["fn"] = f.confusion.fn;
    item["tn"] = f.confusion.tn;
    if (f.threshold) item["threshold"] = *f.threshold;
    folds.push_back(std::move(item));
  }
  doc["per_fold"] = std::move(folds);
  doc["mean_precision"] = mean_precision;
  doc["mean_recall"] = mean_recall;
  doc["mean_f1"] = mean_f1;
  doc["cv_threshold"] = cv_threshold ? nlohmann::ordered_json(*cv_threshold) : nlohmann::ordered_json(nullptr);
  return doc.dump(2) + "\n";
}

std::string EvaluationReport::to_table() const {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-6s %10s %10s %10s %12s\n", "fold", "precision", "recall", "f1", "threshold");
  out += line;
  for (std::size_t i = 0; i < per_fold.size(); ++i) {
    const auto& f = per_fold[i];
    std::snprintf(line, sizeof(line), "%-6zu %10.4f %10.4f %10.4f %12s\n", i + 1, f.metrics.precision,
                  f.metrics.recall, f.metrics.f1, f.threshold ? std::to_string(*f.threshold).c_str() : "-");
    out += line;
  }
  std::snprintf(line, sizeof(line), "%-6s %10.4f %10.4f %10.4f\n", "mean", mean_precision, mean_recall, mean_f1);
  out += line;
  if (cv_threshold) {
    std::snprintf(line, sizeof(line), "threshold c_v: %.4f\n", *cv_threshold);
    out += line;
  }
  return out;
}

}  // namespace flakelens
