#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "flakelens/churn.hpp"
#include "flakelens/features.hpp"
#include "flakelens/history.hpp"

namespace flakelens {

/// Everything the feature pipeline consumes, keyed for lookup.
struct Dataset {
  std::vector<Unit> units;
  std::map<std::string, TestHistory> histories;        // raw, by test id
  std::map<std::string, ChurnLog> logs;                // by repo id
  std::map<std::string, PullRequestInfo> pull_requests;  // by unit id
};

/// unit_id,test_id,reference_time,label,repo_id (label 1/0/empty; repo_id
/// column optional).
std::vector<Unit> parse_units_csv(std::string_view text);
std::string units_to_csv(const std::vector<Unit>& units);

/// {"<unit_id>": {"changed_file_count": n, "contributor_count": m}} or
/// {"<unit_id>": {"commit_ids": [...]}} resolved against the unit's repo.
std::map<std::string, PullRequestInfo> parse_pull_requests_json(std::string_view text,
                                                                const std::vector<Unit>& units,
                                                                const std::map<std::string, ChurnLog>& logs);
std::string pull_requests_to_json(const std::map<std::string, PullRequestInfo>& prs);

/// Directory layout: histories.jsonl, labels.csv, pull_requests.json and
/// churn/<repo_id>.tsv.
void write_dataset(const Dataset& dataset, const std::string& directory);
Dataset read_dataset(const std::string& directory);

struct ExtractResult {
  FeatureMatrix matrix;
  /// (unit_id, reason) for units that could not be featurized.
  std::vector<std::pair<std::string, std::string>> diagnostics;
};

/// Normalizes and windows each unit's history, then featurizes it. Units that
/// fail (e.g. too short a history) are reported instead of aborting.
ExtractResult extract_features(const Dataset& dataset, const FeatureFlags& flags, WindowLimits limits = {});

/// Same, against a frozen schema (e.g. the one a model was trained with).
ExtractResult extract_features(const Dataset& dataset, const FeatureSchema& schema, WindowLimits limits = {});

}  // namespace flakelens
