#include "flakelens/baseline.hpp"

#include <algorithm>
#include <vector>

#include "flakelens/errors.hpp"

namespace flakelens {

std::string_view verdict_name(BaselineVerdict verdict) {
  switch (verdict) {
    case BaselineVerdict::FlakyB: return "flaky";
    case BaselineVerdict::MostlyBroken: return "mostly_broken";
    case BaselineVerdict::FullyBroken: return "fully_broken";
    case BaselineVerdict::Healthy: return "healthy";
  }
  return "healthy";
}

BaselineVerdict baseline_classify(const TestHistory& history, std::size_t window) {
  if (window == 0) throw ContractViolation("baseline window must be positive");
  std::vector<TestOutcome> executed;
  executed.reserve(history.size());
  for (const auto& r : history.records) {
    if (r.outcome != TestOutcome::CachedPassed && r.outcome != TestOutcome::Skipped) executed.push_back(r.outcome);
  }
  if (executed.empty()) throw InsufficientHistoryError("baseline needs at least one execution of " + history.test_id);

  const auto first = executed.size() > window ? executed.end() - static_cast<std::ptrdiff_t>(window)
                                              : executed.begin();
  std::size_t failed = 0, passed = 0, run = 0, longest = 0;
  for (auto it = first; it != executed.end(); ++it) {
    switch (*it) {
      case TestOutcome::FlakyVerdict: return BaselineVerdict::FlakyB;
      case TestOutcome::Failed:
        ++failed;
        longest = std::max(longest, ++run);
        break;
      default:
        ++passed;
        run = 0;
        break;
    }
  }
  if (failed == 0) return BaselineVerdict::Healthy;
  if (longest < kBrokenRunLength) return BaselineVerdict::FlakyB;
  if (passed == 0) return BaselineVerdict::FullyBroken;
  return BaselineVerdict::MostlyBroken;
}

bool baseline_predict_flaky(const TestHistory& history, std::size_t window) {
  return baseline_classify(history, window) == BaselineVerdict::FlakyB;
}

}  // namespace flakelens
