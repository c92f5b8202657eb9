#include "flakelens/churn.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <memory>
#include <unordered_set>

#include <sys/wait.h>

#include "flakelens/errors.hpp"
#include "flakelens/format.hpp"

namespace flakelens {

namespace {

[[noreturn]] void tsv_fail(const std::string& msg, std::size_t line) {
  throw ParseError(msg + " at line " + std::to_string(line), line, ParseError::Location::Line);
}

std::string normalize_path(std::string_view path) {
  std::string out(path);
  std::replace(out.begin(), out.end(), '\\', '/');
  return out;
}

void finalize(ChurnLog& log) {
  std::erase_if(log.commits, [](const CommitRecord& c) { return c.changed_paths.empty(); });
  std::stable_sort(log.commits.begin(), log.commits.end(),
                   [](const CommitRecord& a, const CommitRecord& b) { return a.timestamp < b.timestamp; });
}

}  // namespace

ChurnLog parse_churn_tsv(std::string_view lines, std::string repo_id) {
  ChurnLog log{std::move(repo_id), {}};
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < lines.size()) {
    auto end = lines.find('\n', start);
    if (end == std::string_view::npos) end = lines.size();
    std::string_view line = lines.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    auto fields = split(line, '\t');
    if (fields[0] == "C") {
      if (fields.size() != 4) tsv_fail("commit line needs 4 fields", line_no);
      CommitRecord c;
      c.commit_id = fields[1];
      if (c.commit_id.empty()) tsv_fail("empty commit id", line_no);
      const auto& ts = fields[2];
      auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), c.timestamp);
      if (ts.empty() || ec != std::errc() || ptr != ts.data() + ts.size()) tsv_fail("invalid timestamp", line_no);
      c.author_id = to_lower(fields[3]);
      if (!seen.insert(c.commit_id).second) tsv_fail("duplicate commit id " + c.commit_id, line_no);
      log.commits.push_back(std::move(c));
    } else if (fields[0] == "F") {
      if (log.commits.empty()) tsv_fail("file line before any commit line", line_no);
      if (fields.size() != 2 || fields[1].empty()) tsv_fail("file line needs exactly one path", line_no);
      log.commits.back().changed_paths.push_back(normalize_path(fields[1]));
    } else {
      tsv_fail("unknown record tag '" + fields[0] + "'", line_no);
    }
  }
  finalize(log);
  return log;
}

std::string serialize_churn_tsv(const ChurnLog& log) {
  std::string out;
  for (const auto& c : log.commits) {
    out += "C\t" + c.commit_id + "\t" + std::to_string(c.timestamp) + "\t" + c.author_id + "\n";
    for (const auto& p : c.changed_paths) out += "F\t" + p + "\n";
  }
  return out;
}

namespace {

std::string shell_quote(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

struct CommandResult {
  int exit_code;
  std::string output;
};

CommandResult run_command(const std::string& command) {
  struct Closer {
    void operator()(FILE* f) const {
      if (f) pclose(f);
    }
  };
  FILE* raw = popen(command.c_str(), "r");
  if (!raw) throw EnvironmentError("cannot spawn: " + command);
  std::string output;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), raw)) > 0) output.append(buf.data(), n);
  int status = pclose(raw);
  int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code, std::move(output)};
}

}  // namespace

ChurnLog export_churn_from_vcs(const std::string& repo_path, Timestamp since, std::string repo_id) {
  const std::string git = "git -C " + shell_quote(repo_path) + " -c core.quotepath=off ";

  auto probe = run_command(git + "rev-parse --git-dir 2>&1");
  if (probe.exit_code == 127) throw EnvironmentError("git executable not found");
  if (probe.exit_code != 0) throw EnvironmentError("not a readable repository: " + repo_path);

  ChurnLog log{std::move(repo_id), {}};
  auto head = run_command(git + "rev-parse --verify --quiet HEAD 2>/dev/null");
  if (head.exit_code != 0) return log;  // no commits yet

  auto result = run_command(git +
                            "log --first-parent --diff-merges=first-parent --no-renames --name-only "
                            "--format='C%x09%H%x09%ct%x09%ae' HEAD 2>&1");
  if (result.exit_code != 0) throw EnvironmentError("git log failed: " + result.output);

  auto parsed = parse_churn_tsv([&] {
    // Turn bare path lines into F records.
    std::string tsv;
    for (const auto& line : split(result.output, '\n')) {
      if (line.empty()) continue;
      if (line.rfind("C\t", 0) == 0) tsv += line + "\n";
      else tsv += "F\t" + line + "\n";
    }
    return tsv;
  }(), log.repo_id);
  std::erase_if(parsed.commits, [since](const CommitRecord& c) { return c.timestamp < since; });
  return parsed;
}

PullRequestInfo pull_request_info(const ChurnLog& log, const std::set<std::string>& pr_commit_ids) {
  std::set<std::string> paths;
  std::set<std::string> authors;
  for (const auto& id : pr_commit_ids) {
    auto it = std::find_if(log.commits.begin(), log.commits.end(),
                           [&](const CommitRecord& c) { return c.commit_id == id; });
    if (it == log.commits.end()) throw LookupError("unknown commit id " + id);
    paths.insert(it->changed_paths.begin(), it->changed_paths.end());
    authors.insert(it->author_id);
  }
  return {paths.size(), authors.size()};
}

std::string file_extension(std::string_view path) {
  auto slash = path.find_last_of('/');
  auto base = slash == std::string_view::npos ? path : path.substr(slash + 1);
  auto dot = base.find_last_of('.');
  if (dot == std::string_view::npos) return "";
  return to_lower(base.substr(dot + 1));
}

}  // namespace flakelens
