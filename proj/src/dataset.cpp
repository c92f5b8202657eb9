#include "flakelens/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>

#include <json.hpp>

#include "flakelens/errors.hpp"
#include "flakelens/format.hpp"

namespace fs = std::filesystem;

namespace flakelens {

std::vector<Unit> parse_units_csv(std::string_view text) {
  auto lines = split(text, '\n');
  while (!lines.empty() && (lines.back().empty() || lines.back() == "\r")) lines.pop_back();
  if (lines.empty()) throw ParseError("missing header at line 1", 1, ParseError::Location::Line);
  const auto header = csv_split(lines[0]);
  auto col = [&](std::string_view name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  };
  const int c_unit = col("unit_id"), c_test = col("test_id"), c_ref = col("reference_time"), c_label = col("label"),
            c_repo = col("repo_id");
  if (c_unit < 0 || c_test < 0 || c_ref < 0 || c_label < 0) {
    throw ParseError("labels header needs unit_id,test_id,reference_time,label at line 1", 1,
                     ParseError::Location::Line);
  }
  std::vector<Unit> units;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = csv_split(lines[i]);
    auto fail = [&](const std::string& msg) -> void {
      throw ParseError(msg + " at line " + std::to_string(i + 1), i + 1, ParseError::Location::Line);
    };
    if (cells.size() != header.size()) fail("wrong cell count");
    Unit u;
    u.unit_id = cells[static_cast<std::size_t>(c_unit)];
    u.test_id = cells[static_cast<std::size_t>(c_test)];
    const auto& ref = cells[static_cast<std::size_t>(c_ref)];
    auto [ptr, ec] = std::from_chars(ref.data(), ref.data() + ref.size(), u.reference_time);
    if (ref.empty() || ec != std::errc() || ptr != ref.data() + ref.size()) fail("invalid reference_time");
    const auto& label = cells[static_cast<std::size_t>(c_label)];
    if (label == "1" || label == "true") u.label = true;
    else if (label == "0" || label == "false") u.label = false;
    else if (!label.empty()) fail("invalid label '" + label + "'");
    if (c_repo >= 0) u.repo_id = cells[static_cast<std::size_t>(c_repo)];
    units.push_back(std::move(u));
  }
  return units;
}

std::string units_to_csv(const std::vector<Unit>& units) {
  std::string out = "unit_id,test_id,reference_time,label,repo_id\n";
  for (const auto& u : units) {
    out += csv_escape(u.unit_id) + "," + csv_escape(u.test_id) + "," + std::to_string(u.reference_time) + "," +
           (u.label ? (*u.label ? "1" : "0") : "") + "," + csv_escape(u.repo_id) + "\n";
  }
  return out;
}

std::map<std::string, PullRequestInfo> parse_pull_requests_json(std::string_view text,
                                                                const std::vector<Unit>& units,
                                                                const std::map<std::string, ChurnLog>& logs) {
  std::map<std::string, PullRequestInfo> out;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid pull request JSON: ") + e.what(), e.byte, ParseError::Location::ByteOffset);
  }
  if (!doc.is_object()) throw ValidationError("pull request document must be an object keyed by unit id");
  for (const auto& [unit_id, item] : doc.items()) {
    try {
      if (item.contains("commit_ids")) {
        auto unit = std::find_if(units.begin(), units.end(), [&](const Unit& u) { return u.unit_id == unit_id; });
        if (unit == units.end()) throw LookupError("pull request for unknown unit " + unit_id);
        auto log = logs.find(unit->repo_id);
        if (log == logs.end()) throw LookupError("no churn log for repo " + unit->repo_id);
        const auto ids = item.at("commit_ids").get<std::vector<std::string>>();
        out[unit_id] = pull_request_info(log->second, {ids.begin(), ids.end()});
      } else {
        out[unit_id] = {item.at("changed_file_count").get<std::size_t>(),
                        item.at("contributor_count").get<std::size_t>()};
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("pull request entry " + unit_id + ": " + e.what());
    }
  }
  return out;
}

std::string pull_requests_to_json(const std::map<std::string, PullRequestInfo>& prs) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& [id, pr] : prs) {
    doc[id] = {{"changed_file_count", pr.changed_file_count}, {"contributor_count", pr.contributor_count}};
  }
  return doc.dump(1) + "\n";
}

void write_dataset(const Dataset& dataset, const std::string& directory) {
  fs::create_directories(fs::path(directory) / "churn");
  std::vector<ExecutionRecord> records;
  for (const auto& [id, h] : dataset.histories) records.insert(records.end(), h.records.begin(), h.records.end());
  write_file((fs::path(directory) / "histories.jsonl").string(), serialize_history_jsonl(records));
  write_file((fs::path(directory) / "labels.csv").string(), units_to_csv(dataset.units));
  write_file((fs::path(directory) / "pull_requests.json").string(), pull_requests_to_json(dataset.pull_requests));
  for (const auto& [repo, log] : dataset.logs) {
    write_file((fs::path(directory) / "churn" / (repo + ".tsv")).string(), serialize_churn_tsv(log));
  }
}

Dataset read_dataset(const std::string& directory) {
  const fs::path root(directory);
  Dataset d;
  for (auto& h : group_histories(parse_history_jsonl(read_file((root / "histories.jsonl").string())))) {
    auto id = h.test_id;
    d.histories.emplace(std::move(id), std::move(h));
  }
  d.units = parse_units_csv(read_file((root / "labels.csv").string()));
  if (fs::is_directory(root / "churn")) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(root / "churn")) {
      if (entry.path().extension() == ".tsv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const auto repo = f.stem().string();
      d.logs.emplace(repo, parse_churn_tsv(read_file(f.string()), repo));
    }
  }
  if (fs::exists(root / "pull_requests.json")) {
    d.pull_requests = parse_pull_requests_json(read_file((root / "pull_requests.json").string()), d.units, d.logs);
  }
  return d;
}

ExtractResult extract_features(const Dataset& dataset, const FeatureFlags& flags, WindowLimits limits) {
  return extract_features(dataset, build_schema(dataset.units, dataset.logs, flags), limits);
}

ExtractResult extract_features(const Dataset& dataset, const FeatureSchema& schema, WindowLimits limits) {
  ExtractResult result;
  std::vector<Eigen::VectorXd> rows;
  const ChurnLog empty_log;
  for (const auto& unit : dataset.units) {
    auto h = dataset.histories.find(unit.test_id);
    if (h == dataset.histories.end()) {
      result.diagnostics.emplace_back(unit.unit_id, "no history");
      continue;
    }
    const TestHistory windowed = window_history(normalize_history(h->second), unit.reference_time, limits);
    auto log = dataset.logs.find(unit.repo_id);
    auto pr = dataset.pull_requests.find(unit.unit_id);
    try {
      auto fv = featurize(unit, windowed, log == dataset.logs.end() ? empty_log : log->second,
                          pr == dataset.pull_requests.end() ? PullRequestInfo{} : pr->second, schema);
      rows.push_back(std::move(fv.values));
      result.matrix.units.push_back(unit);
    } catch (const InsufficientHistoryError&) {
      result.diagnostics.emplace_back(unit.unit_id, "insufficient history");
    }
  }
  result.matrix.schema = schema;
  result.matrix.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(schema.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) result.matrix.values.row(static_cast<Eigen::Index>(r)) = rows[r];
  return result;
}

}  // namespace flakelens
