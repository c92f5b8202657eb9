#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flakelens/churn.hpp"
#include "flakelens/history.hpp"

namespace flakelens {

enum class DecayFamily { Constant, Linear, Exponential, Reciprocal, ReciprocalSquared, Ewma };

/// Weighting applied to flip-rate transitions by age.
struct DecayKind {
  DecayFamily family = DecayFamily::Constant;
  double lambda = 0.1;  // Ewma only, in (0, 1)

  static DecayKind constant() { return {DecayFamily::Constant}; }
  static DecayKind linear() { return {DecayFamily::Linear}; }
  static DecayKind exponential() { return {DecayFamily::Exponential}; }
  static DecayKind reciprocal() { return {DecayFamily::Reciprocal}; }
  static DecayKind reciprocal_squared() { return {DecayFamily::ReciprocalSquared}; }
  static DecayKind ewma(double lambda = 0.1);

  /// "constant", "linear", ..., "ewma" (default lambda) or "ewma_<lambda>".
  std::string name() const;
  static DecayKind from_name(std::string_view name);

  friend bool operator==(const DecayKind& a, const DecayKind& b) {
    return a.family == b.family && (a.family != DecayFamily::Ewma || a.lambda == b.lambda);
  }
};

std::vector<DecayKind> all_decay_kinds();

/// Weight of transition `t` among `m`; t = 1 is the most recent transition.
double decay_weight(DecayKind kind, std::size_t t, std::size_t m);

/// The m weights of decay_weight scaled to sum to one, index 0 = t 1.
Eigen::VectorXd normalized_decay_weights(DecayKind kind, std::size_t m);

/// Decay-weighted share of adjacent runs with differing verdicts. Needs a
/// normalized history with at least two records.
double flip_rate(const TestHistory& history, DecayKind kind);

/// Base-2 Shannon entropy of the pass/fail frequencies.
double entropy(const TestHistory& history);

double mean_duration(const TestHistory& history);

/// Mean passing minus mean failing duration; nullopt unless both occur.
std::optional<double> mean_duration_diff(const TestHistory& history);

/// Per-extension change events (one per commit and path) with commit time in
/// [reference_time - window_days days, reference_time].
std::map<std::string, std::size_t> churn_window_counts(const ChurnLog& log, Timestamp reference_time,
                                                        int window_days,
                                                        const std::vector<std::string>& vocabulary);

enum class FeatureGroup {
  FlipRate,
  Entropy,
  MeanDuration,
  MeanDurationDiff,
  ChurnCount,
  Project,
  PrChangedFiles,
  PrContributors,
};

std::string_view group_name(FeatureGroup group);
FeatureGroup group_from_name(std::string_view name);

/// One column of a feature matrix.
struct FeatureSpec {
  FeatureGroup group = FeatureGroup::Entropy;
  DecayKind decay;        // FlipRate
  std::string extension;  // ChurnCount
  int window_days = 0;    // ChurnCount
  std::string repo_id;    // Project

  std::string name() const;
  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

/// Which feature groups to compute.
struct FeatureFlags {
  std::vector<DecayKind> decay_kinds{DecayKind::reciprocal_squared()};
  bool entropy = false;
  bool mean_duration = false;
  bool mean_duration_diff = false;
  bool churn_counts = false;
  bool project = false;
  bool pull_request = false;
  std::vector<int> windows_days{3, 14, 54};

  /// Every group with every decay kind.
  static FeatureFlags all();
  static FeatureFlags outcomes_only(DecayKind kind);
};

/// Ordered, uniquely named columns plus the vocabularies they were built from.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  FeatureSchema(std::vector<FeatureSpec> features, std::vector<std::string> extension_vocabulary,
                std::vector<std::string> project_vocabulary);

  const std::vector<FeatureSpec>& features() const { return features_; }
  const std::vector<std::string>& extension_vocabulary() const { return extension_vocabulary_; }
  const std::vector<std::string>& project_vocabulary() const { return project_vocabulary_; }
  std::size_t size() const { return features_.size(); }
  std::vector<std::string> names() const;
  std::optional<std::size_t> index_of(std::string_view name) const;

  /// Columns whose name is in `keep`, in this schema's order.
  FeatureSchema subset(const std::vector<std::string>& keep) const;
  /// Column indices of `other`'s features inside this schema.
  std::vector<Eigen::Index> columns_of(const FeatureSchema& other) const;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

 private:
  std::vector<FeatureSpec> features_;
  std::vector<std::string> extension_vocabulary_;
  std::vector<std::string> project_vocabulary_;
};

/// Freezes the extension/project vocabularies observed across `units` and
/// lays out columns: flip rates, entropy, durations, churn counts (window
/// major), project one-hot, PR counts.
FeatureSchema build_schema(const std::vector<Unit>& units, const std::map<std::string, ChurnLog>& logs,
                           const FeatureFlags& flags);

struct FeatureVector {
  Eigen::VectorXd values;
  Unit unit;
};

/// Computes the schema's columns for one unit. `history` must already be
/// normalized and windowed at unit.reference_time.
FeatureVector featurize(const Unit& unit, const TestHistory& history, const ChurnLog& log,
                        const PullRequestInfo& pr, const FeatureSchema& schema);

/// 0/1 class labels, 1 = flaky.
using Labels = Eigen::VectorXi;

/// Rows are units, columns follow `schema`.
struct FeatureMatrix {
  FeatureSchema schema;
  Eigen::MatrixXd values;
  std::vector<Unit> units;

  Labels labels() const;
  /// Same rows restricted to `sub`'s columns.
  FeatureMatrix select(const FeatureSchema& sub) const;
};

}  // namespace flakelens
