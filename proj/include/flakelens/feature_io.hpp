#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "flakelens/features.hpp"

namespace flakelens {

nlohmann::ordered_json schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const nlohmann::json& doc);

/// Header: schema names, then unit_id,label. Label cells are 1, 0 or empty.
std::string features_to_csv(const FeatureMatrix& matrix);

/// Reads a CSV written by features_to_csv; the header must match `schema`.
FeatureMatrix features_from_csv(std::string_view text, const FeatureSchema& schema);

/// One object per unit: {"unit_id", "label", "features": {name: value}}.
std::string features_to_jsonl(const FeatureMatrix& matrix);

}  // namespace flakelens
