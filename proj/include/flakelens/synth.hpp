#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flakelens/dataset.hpp"

namespace flakelens {

/// How a synthetic unit's verdicts were generated.
enum class Mechanism {
  Flaky,         // i.i.d. failures throughout
  Regression,    // passes except inside consecutive-failure segments
  AlwaysPass,
  AlwaysFail,
  FixedFlaky,    // flaky early, stable late; labeled non-flaky
};

std::string_view mechanism_name(Mechanism m);

struct DurationModel {
  double pass_mean = 10.0;       // seconds, scaled per test
  double fail_mean = 9.0;        // regression failures, scaled per test
  double timeout_mean = 60.0;    // slow flaky failures
  double fast_fail_mean = 1.5;   // fast flaky failures, scaled per test
  double noise_sd = 0.25;
};

struct SynthConfig {
  int n_flaky = 100;
  int n_nonflaky = 100;
  int history_length = 400;
  double flaky_failure_prob = 0.15;
  /// Per-unit failure probability ~ U[p - spread, p + spread].
  double failure_prob_spread = 0.1;
  /// Shares of flaky units whose failures are timeouts (slow) or fast
  /// aborts; the rest fail like a regression would.
  double timeout_failure_share = 0.35;
  double fast_failure_share = 0.35;
  /// Share of flaky failures that a rerun caught (recorded as flaky verdicts).
  double rerun_detect_prob = 0.2;
  /// Share of runs replaced by cache hits.
  double cached_share = 0.1;

  int regression_segments = 4;  // max per regression unit
  double regression_mean_length = 8.0;
  /// Segment length ~ U[mean*(1-spread), mean*(1+spread)]; 0 gives exact lengths.
  double regression_length_spread = 0.75;
  /// Probability that a regression unit's last segment touches the latest runs.
  double recent_regression_prob = 0.5;

  /// Shares of the non-flaky units that always pass/fail or were fixed.
  double trivial_nonflaky_share = 0.15;
  double fixed_flaky_share = 0.2;
  /// Fraction of a fixed-flaky history that is stable at the end,
  /// ~ U[min, max] per unit.
  double fixed_stable_min = 0.05;
  double fixed_stable_max = 0.5;

  DurationModel durations;

  int n_repos = 9;
  int timeline_days = 730;
  double churn_intensity = 0.25;  // background commits per day and repo
  double regression_burst_mean = 60.0;  // C++ files touched by a regression-causing commit
  /// Mean changed files of the current pull request (geometric).
  double flaky_pr_mean = 2.0;
  double nonflaky_pr_mean = 30.0;

  std::uint64_t seed = 42;

  void validate() const;
  /// Non-flaky units are mostly recently fixed flaky tests.
  static SynthConfig recently_fixed();
};

struct SynthDataset {
  Dataset data;
  std::vector<Mechanism> mechanisms;  // aligned with data.units
};

/// Deterministic for a given config (including seed).
SynthDataset generate(const SynthConfig& config);

}  // namespace flakelens
