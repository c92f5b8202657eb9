#pragma once

#include <string_view>

#include "flakelens/history.hpp"

namespace flakelens {

/// Verdicts of the rule-based dashboard heuristic.
enum class BaselineVerdict { FlakyB, MostlyBroken, FullyBroken, Healthy };

std::string_view verdict_name(BaselineVerdict verdict);

inline constexpr std::size_t kBaselineWindow = 400;
inline constexpr std::size_t kBrokenRunLength = 5;

/// Classifies the last `window` executions of a raw (un-normalized) history.
/// Cached and skipped entries are not executions and are ignored.
BaselineVerdict baseline_classify(const TestHistory& history, std::size_t window = kBaselineWindow);

bool baseline_predict_flaky(const TestHistory& history, std::size_t window = kBaselineWindow);

}  // namespace flakelens
