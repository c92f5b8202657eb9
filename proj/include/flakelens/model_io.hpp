#pragma once

#include <string>
#include <string_view>

#include "flakelens/tree.hpp"

namespace flakelens {

inline constexpr int kModelFormatVersion = 1;

/// Versioned JSON document with a flattened node array per tree.
std::string model_to_json(const TreeEnsembleModel& model);
TreeEnsembleModel model_from_json(std::string_view text);

}  // namespace flakelens
