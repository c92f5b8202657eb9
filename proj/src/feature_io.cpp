#include "flakelens/feature_io.hpp"

#include "flakelens/errors.hpp"
#include "flakelens/format.hpp"

namespace flakelens {

nlohmann::ordered_json schema_to_json(const FeatureSchema& schema) {
  nlohmann::ordered_json doc;
  doc["names"] = schema.names();
  auto features = nlohmann::ordered_json::array();
  for (const auto& f : schema.features()) {
    nlohmann::ordered_json item;
    item["group"] = std::string(group_name(f.group));
    switch (f.group) {
      case FeatureGroup::FlipRate: item["decay"] = f.decay.name(); break;
      case FeatureGroup::ChurnCount:
        item["extension"] = f.extension;
        item["window_days"] = f.window_days;
        break;
      case FeatureGroup::Project: item["repo_id"] = f.repo_id; break;
      default: break;
    }
    features.push_back(std::move(item));
  }
  doc["features"] = std::move(features);
  doc["extension_vocabulary"] = schema.extension_vocabulary();
  doc["project_vocabulary"] = schema.project_vocabulary();
  return doc;
}

FeatureSchema schema_from_json(const nlohmann::json& doc) {
  try {
    std::vector<FeatureSpec> specs;
    for (const auto& item : doc.at("features")) {
      FeatureSpec f;
      f.group = group_from_name(item.at("group").get<std::string>());
      if (f.group == FeatureGroup::FlipRate) f.decay = DecayKind::from_name(item.at("decay").get<std::string>());
      if (f.group == FeatureGroup::ChurnCount) {
        f.extension = item.at("extension").get<std::string>();
        f.window_days = item.at("window_days").get<int>();
      }
      if (f.group == FeatureGroup::Project) f.repo_id = item.at("repo_id").get<std::string>();
      specs.push_back(std::move(f));
    }
    FeatureSchema schema(std::move(specs), doc.at("extension_vocabulary").get<std::vector<std::string>>(),
                         doc.at("project_vocabulary").get<std::vector<std::string>>());
    if (auto names = doc.find("names"); names != doc.end() && names->get<std::vector<std::string>>() != schema.names()) {
      throw ValidationError("schema names disagree with feature specs");
    }
    return schema;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed schema document: ") + e.what());
  }
}

std::string features_to_csv(const FeatureMatrix& matrix) {
  std::string out;
  for (const auto& name : matrix.schema.names()) out += csv_escape(name) + ",";
  out += "unit_id,label\n";
  for (Eigen::Index r = 0; r < matrix.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.values.cols(); ++c) out += format_double(matrix.values(r, c)) + ",";
    const auto& u = matrix.units[static_cast<std::size_t>(r)];
    out += csv_escape(u.unit_id) + "," + (u.label ? (*u.label ? "1" : "0") : "") + "\n";
  }
  return out;
}

FeatureMatrix features_from_csv(std::string_view text, const FeatureSchema& schema) {
  auto lines = split(text, '\n');
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw ParseError("empty feature CSV at line 1", 1, ParseError::Location::Line);

  auto expected = schema.names();
  expected.push_back("unit_id");
  expected.push_back("label");
  if (csv_split(lines[0]) != expected) throw SchemaMismatchError("feature CSV header does not match the schema");

  const auto cols = static_cast<Eigen::Index>(schema.size());
  FeatureMatrix m{schema, Eigen::MatrixXd(static_cast<Eigen::Index>(lines.size() - 1), cols), {}};
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto cells = csv_split(lines[i]);
    if (cells.size() != expected.size()) {
      throw ParseError("wrong cell count at line " + std::to_string(i + 1), i + 1, ParseError::Location::Line);
    }
    const auto row = static_cast<Eigen::Index>(i - 1);
    for (Eigen::Index c = 0; c < cols; ++c) {
      try {
        m.values(row, c) = parse_double(cells[static_cast<std::size_t>(c)]);
      } catch (const ValidationError& e) {
        throw ParseError(std::string(e.what()) + " at line " + std::to_string(i + 1), i + 1,
                         ParseError::Location::Line);
      }
    }
    Unit u;
    u.unit_id = cells[cells.size() - 2];
    const auto& label = cells.back();
    if (label == "1") u.label = true;
    else if (label == "0") u.label = false;
    else if (!label.empty()) {
      throw ParseError("invalid label at line " + std::to_string(i + 1), i + 1, ParseError::Location::Line);
    }
    m.units.push_back(std::move(u));
  }
  return m;
}

std::string features_to_jsonl(const FeatureMatrix& matrix) {
  const auto names = matrix.schema.names();
  std::string out;
  for (Eigen::Index r = 0; r < matrix.values.rows(); ++r) {
    const auto& u = matrix.units[static_cast<std::size_t>(r)];
    nlohmann::ordered_json obj;
    obj["unit_id"] = u.unit_id;
    obj["label"] = u.label ? nlohmann::ordered_json(*u.label) : nlohmann::ordered_json(nullptr);
    nlohmann::ordered_json feats;
    for (std::size_t c = 0; c < names.size(); ++c) feats[names[c]] = matrix.values(r, static_cast<Eigen::Index>(c));
    obj["features"] = std::move(feats);
    out += obj.dump() + "\n";
  }
  return out;
}

}  // namespace flakelens
