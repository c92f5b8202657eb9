#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flakelens {

/// UTC seconds since the Unix epoch.
using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerDay = 86400;

enum class TestOutcome { Passed, Failed, FlakyVerdict, CachedPassed, Skipped };

/// Canonical lowercase name: passed, failed, flaky, cached_passed, skipped.
std::string_view outcome_name(TestOutcome outcome);

/// Case-insensitive inverse of outcome_name.
std::optional<TestOutcome> outcome_from_name(std::string_view name);

struct ExecutionRecord {
  std::string test_id;
  Timestamp timestamp = 0;
  TestOutcome outcome = TestOutcome::Passed;
  double duration = 0.0;  // seconds
  std::optional<std::string> build_id;
  std::optional<std::string> pipeline;

  friend bool operator==(const ExecutionRecord&, const ExecutionRecord&) = default;
};

/// Chronologically ascending runs of one test.
struct TestHistory {
  std::string test_id;
  std::vector<ExecutionRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

/// One test case observed at one instant; the thing that gets a label.
struct Unit {
  std::string unit_id;
  std::string test_id;
  Timestamp reference_time = 0;
  std::string repo_id;
  std::optional<bool> label;  // true = flaky
};

/// Parses a JUnit XML report. `default_timestamp` applies to suites without
/// a `timestamp` attribute.
std::vector<ExecutionRecord> parse_junit_report(std::string_view bytes, Timestamp default_timestamp);

/// Parses the canonical one-object-per-line history format.
std::vector<ExecutionRecord> parse_history_jsonl(std::string_view lines);

/// Inverse of parse_history_jsonl, one record per line with fixed key order.
std::string serialize_history_jsonl(const std::vector<ExecutionRecord>& records);

/// ISO-8601 date-time ("2023-04-01T12:00:00", optional fraction, "Z" or
/// "+hh:mm"); a missing zone means UTC.
Timestamp parse_iso8601(std::string_view text);

/// Groups records by test id into sorted histories (ordered by test id).
/// Ties on timestamp are ordered by build id, then input order.
std::vector<TestHistory> group_histories(const std::vector<ExecutionRecord>& records);

/// Sorts in place by (timestamp, build_id), stable.
void sort_history(TestHistory& history);

/// Rewrites flaky verdicts as failures and drops cached/skipped runs.
TestHistory normalize_history(const TestHistory& history);

struct WindowLimits {
  Timestamp max_age = 90 * kSecondsPerDay;
  std::size_t max_count = 10000;
};

/// Records visible at `reference_time`: no older than `max_age`, never in the
/// future, and at most the `max_count` most recent.
TestHistory window_history(const TestHistory& history, Timestamp reference_time, WindowLimits limits = {});

}  // namespace flakelens
