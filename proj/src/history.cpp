#include "flakelens/history.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include <json.hpp>

#include "flakelens/errors.hpp"
#include "flakelens/format.hpp"
#include "xml.hpp"

namespace flakelens {

std::string_view outcome_name(TestOutcome outcome) {
  switch (outcome) {
    case TestOutcome::Passed: return "passed";
    case TestOutcome::Failed: return "failed";
    case TestOutcome::FlakyVerdict: return "flaky";
    case TestOutcome::CachedPassed: return "cached_passed";
    case TestOutcome::Skipped: return "skipped";
  }
  return "passed";
}

std::optional<TestOutcome> outcome_from_name(std::string_view name) {
  const std::string lower = to_lower(name);
  for (auto o : {TestOutcome::Passed, TestOutcome::Failed, TestOutcome::FlakyVerdict, TestOutcome::CachedPassed,
                 TestOutcome::Skipped}) {
    if (outcome_name(o) == lower) return o;
  }
  return std::nullopt;
}

namespace {

int parse_fixed_digits(std::string_view text, std::size_t pos, std::size_t count) {
  if (pos + count > text.size()) throw ValidationError("truncated timestamp '" + std::string(text) + "'");
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    char c = text[i];
    if (c < '0' || c > '9') throw ValidationError("invalid timestamp '" + std::string(text) + "'");
    value = value * 10 + (c - '0');
  }
  return value;
}

}  // namespace

Timestamp parse_iso8601(std::string_view text) {
  using namespace std::chrono;
  // YYYY-MM-DDThh:mm:ss
  if (text.size() < 19 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':' || text[16] != ':') {
    throw ValidationError("invalid timestamp '" + std::string(text) + "'");
  }
  const int y = parse_fixed_digits(text, 0, 4);
  const int mo = parse_fixed_digits(text, 5, 2);
  const int d = parse_fixed_digits(text, 8, 2);
  const int h = parse_fixed_digits(text, 11, 2);
  const int mi = parse_fixed_digits(text, 14, 2);
  const int s = parse_fixed_digits(text, 17, 2);
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) throw ValidationError("invalid timestamp '" + std::string(text) + "'");

  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
  }
  std::int64_t offset = 0;
  if (pos < text.size()) {
    if (text[pos] == 'Z' && pos + 1 == text.size()) {
      pos = text.size();
    } else if ((text[pos] == '+' || text[pos] == '-') && pos + 6 == text.size() && text[pos + 3] == ':') {
      const int sign = text[pos] == '+' ? 1 : -1;
      offset = sign * (parse_fixed_digits(text, pos + 1, 2) * 3600 + parse_fixed_digits(text, pos + 4, 2) * 60);
      pos = text.size();
    } else {
      throw ValidationError("invalid timestamp '" + std::string(text) + "'");
    }
  }
  const auto days_since_epoch = sys_days(ymd).time_since_epoch().count();
  return static_cast<Timestamp>(days_since_epoch) * kSecondsPerDay + h * 3600 + mi * 60 + s - offset;
}

namespace {

void collect_suite(const xml::Element& suite, Timestamp inherited, std::vector<ExecutionRecord>& out) {
  Timestamp ts = inherited;
  if (auto attr = suite.attribute("timestamp"); attr && !attr->empty()) ts = parse_iso8601(*attr);

  for (const auto& child : suite.children) {
    if (child.name == "testsuite") {
      collect_suite(child, ts, out);
      continue;
    }
    if (child.name != "testcase") continue;

    ExecutionRecord rec;
    const std::string name(child.attribute("name").value_or(""));
    const std::string classname(child.attribute("classname").value_or(""));
    rec.test_id = classname.empty() ? name : classname + "." + name;
    rec.timestamp = ts;
    if (auto time = child.attribute("time"); time && !time->empty()) {
      double seconds;
      try {
        seconds = parse_double(*time);
      } catch (const ValidationError&) {
        throw ValidationError("testcase '" + rec.test_id + "': invalid time '" + std::string(*time) + "'");
      }
      if (!(seconds >= 0.0) || !std::isfinite(seconds)) {
        throw ValidationError("testcase '" + rec.test_id + "': negative or non-finite time '" + std::string(*time) +
                              "'");
      }
      rec.duration = seconds;
    }
    rec.outcome = TestOutcome::Passed;
    for (const auto& verdict : child.children) {
      if (verdict.name == "failure" || verdict.name == "error") {
        rec.outcome = TestOutcome::Failed;
        break;
      }
      if (verdict.name == "skipped") rec.outcome = TestOutcome::Skipped;
    }
    out.push_back(std::move(rec));
  }
}

}  // namespace

std::vector<ExecutionRecord> parse_junit_report(std::string_view bytes, Timestamp default_timestamp) {
  const xml::Element root = xml::parse(bytes);
  std::vector<ExecutionRecord> out;
  if (root.name == "testsuites" || root.name == "testsuite") {
    collect_suite(root, default_timestamp, out);
  } else {
    throw ParseError("XML parse error at byte " + std::to_string(root.offset) + ": root element <" + root.name +
                         "> is not testsuite(s)",
                     root.offset, ParseError::Location::ByteOffset);
  }
  return out;
}

namespace {

[[noreturn]] void jsonl_fail(const std::string& msg, std::size_t line) {
  throw ParseError(msg + " at line " + std::to_string(line), line, ParseError::Location::Line);
}

const nlohmann::json& require(const nlohmann::json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) jsonl_fail(std::string("missing key ") + key, line);
  return *it;
}

}  // namespace

std::vector<ExecutionRecord> parse_history_jsonl(std::string_view lines) {
  std::vector<ExecutionRecord> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= lines.size()) {
    auto end = lines.find('\n', start);
    if (end == std::string_view::npos) end = lines.size();
    ++line_no;
    std::string_view line = lines.substr(start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == lines.size()) break;
      continue;
    }

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      jsonl_fail(std::string("invalid JSON (") + e.what() + ")", line_no);
    }
    if (!obj.is_object()) jsonl_fail("expected JSON object", line_no);

    ExecutionRecord rec;
    const auto& id = require(obj, "test_id", line_no);
    const auto& ts = require(obj, "timestamp", line_no);
    const auto& outcome = require(obj, "outcome", line_no);
    const auto& duration = require(obj, "duration", line_no);
    if (!id.is_string()) jsonl_fail("test_id must be a string", line_no);
    rec.test_id = id.get<std::string>();
    if (ts.is_number_integer()) {
      rec.timestamp = ts.get<std::int64_t>();
    } else if (ts.is_number_float() && std::floor(ts.get<double>()) == ts.get<double>()) {
      rec.timestamp = static_cast<Timestamp>(ts.get<double>());
    } else {
      jsonl_fail("timestamp must be integral seconds", line_no);
    }
    if (rec.timestamp <= 0) jsonl_fail("timestamp must be positive", line_no);
    if (!outcome.is_string()) jsonl_fail("outcome must be a string", line_no);
    auto parsed = outcome_from_name(outcome.get<std::string>());
    if (!parsed) jsonl_fail("unknown outcome '" + outcome.get<std::string>() + "'", line_no);
    rec.outcome = *parsed;
    if (!duration.is_number()) jsonl_fail("duration must be a number", line_no);
    rec.duration = duration.get<double>();
    if (!(rec.duration >= 0.0) || !std::isfinite(rec.duration)) jsonl_fail("duration must be non-negative", line_no);
    if (auto it = obj.find("build_id"); it != obj.end() && !it->is_null()) {
      rec.build_id = it->is_string() ? it->get<std::string>() : it->dump();
    }
    if (auto it = obj.find("pipeline"); it != obj.end() && !it->is_null()) {
      rec.pipeline = it->is_string() ? it->get<std::string>() : it->dump();
    }
    out.push_back(std::move(rec));
    if (end == lines.size()) break;
  }
  return out;
}

std::string serialize_history_jsonl(const std::vector<ExecutionRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json obj;
    obj["test_id"] = r.test_id;
    obj["timestamp"] = r.timestamp;
    obj["outcome"] = std::string(outcome_name(r.outcome));
    obj["duration"] = r.duration;
    if (r.build_id) obj["build_id"] = *r.build_id;
    if (r.pipeline) obj["pipeline"] = *r.pipeline;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void sort_history(TestHistory& history) {
  std::stable_sort(history.records.begin(), history.records.end(),
                   [](const ExecutionRecord& a, const ExecutionRecord& b) {
                     if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                     return a.build_id.value_or("") < b.build_id.value_or("");
                   });
}

std::vector<TestHistory> group_histories(const std::vector<ExecutionRecord>& records) {
  std::map<std::string, TestHistory> by_id;
  for (const auto& r : records) {
    auto& h = by_id[r.test_id];
    h.test_id = r.test_id;
    h.records.push_back(r);
  }
  std::vector<TestHistory> out;
  out.reserve(by_id.size());
  for (auto& [id, h] : by_id) {
    sort_history(h);
    out.push_back(std::move(h));
  }
  return out;
}

TestHistory normalize_history(const TestHistory& history) {
  TestHistory out{history.test_id, {}};
  out.records.reserve(history.records.size());
  for (const auto& r : history.records) {
    if (r.outcome == TestOutcome::CachedPassed || r.outcome == TestOutcome::Skipped) continue;
    auto copy = r;
    if (copy.outcome == TestOutcome::FlakyVerdict) copy.outcome = TestOutcome::Failed;
    out.records.push_back(std::move(copy));
  }
  return out;
}

TestHistory window_history(const TestHistory& history, Timestamp reference_time, WindowLimits limits) {
  if (limits.max_age <= 0 || limits.max_count == 0) throw ContractViolation("window limits must be positive");
  TestHistory out{history.test_id, {}};
  const Timestamp oldest = reference_time - limits.max_age;
  for (const auto& r : history.records) {
    if (r.timestamp >= oldest && r.timestamp <= reference_time) out.records.push_back(r);
  }
  if (out.records.size() > limits.max_count) {
    out.records.erase(out.records.begin(),
                      out.records.end() - static_cast<std::ptrdiff_t>(limits.max_count));
  }
  return out;
}

}  // namespace flakelens
