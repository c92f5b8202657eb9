#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "flakelens/history.hpp"

namespace flakelens {

struct CommitRecord {
  std::string commit_id;
  Timestamp timestamp = 0;
  std::string author_id;                    // lowercased email
  std::vector<std::string> changed_paths;  // repository-relative, '/'-separated

  friend bool operator==(const CommitRecord&, const CommitRecord&) = default;
};

struct PullRequestInfo {
  std::size_t changed_file_count = 0;
  std::size_t contributor_count = 0;

  friend bool operator==(const PullRequestInfo&, const PullRequestInfo&) = default;
};

/// Commits of one repository, ascending by timestamp.
struct ChurnLog {
  std::string repo_id;
  std::vector<CommitRecord> commits;
};

/// Reads the portable C/F tab-separated commit log.
ChurnLog parse_churn_tsv(std::string_view lines, std::string repo_id = {});

std::string serialize_churn_tsv(const ChurnLog& log);

/// Runs `git log` on the first-parent chain of the checked-out branch and
/// keeps commits with commit time >= `since`.
ChurnLog export_churn_from_vcs(const std::string& repo_path, Timestamp since, std::string repo_id = {});

/// Changed-file union and distinct authors over the given commits.
PullRequestInfo pull_request_info(const ChurnLog& log, const std::set<std::string>& pr_commit_ids);

/// Lowercased text after the final '.' of the basename; "" when there is none.
std::string file_extension(std::string_view path);

}  // namespace flakelens
