#include "flakelens/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "flakelens/errors.hpp"
#include "flakelens/format.hpp"

namespace flakelens {

DecayKind DecayKind::ewma(double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw ContractViolation("EWMA lambda must lie in (0, 1)");
  return {DecayFamily::Ewma, lambda};
}

std::string DecayKind::name() const {
  switch (family) {
    case DecayFamily::Constant: return "constant";
    case DecayFamily::Linear: return "linear";
    case DecayFamily::Exponential: return "exponential";
    case DecayFamily::Reciprocal: return "reciprocal";
    case DecayFamily::ReciprocalSquared: return "reciprocal_squared";
    case DecayFamily::Ewma: return lambda == 0.1 ? "ewma" : "ewma_" + format_double(lambda);
  }
  return "constant";
}

DecayKind DecayKind::from_name(std::string_view name) {
  const std::string n = to_lower(name);
  if (n == "constant") return constant();
  if (n == "linear") return linear();
  if (n == "exponential") return exponential();
  if (n == "reciprocal") return reciprocal();
  if (n == "reciprocal_squared") return reciprocal_squared();
  if (n == "ewma") return ewma();
  if (n.rfind("ewma_", 0) == 0) return ewma(parse_double(std::string_view(n).substr(5)));
  throw ValidationError("unknown decay kind '" + std::string(name) + "'");
}

std::vector<DecayKind> all_decay_kinds() {
  return {DecayKind::constant(),   DecayKind::linear(),     DecayKind::exponential(),
          DecayKind::reciprocal(), DecayKind::reciprocal_squared(), DecayKind::ewma()};
}

double decay_weight(DecayKind kind, std::size_t t, std::size_t m) {
  if (m < 1 || t < 1 || t > m) {
    throw ContractViolation("transition index " + std::to_string(t) + " outside [1, " + std::to_string(m) + "]");
  }
  const double td = static_cast<double>(t);
  const double md = static_cast<double>(m);
  switch (kind.family) {
    case DecayFamily::Constant: return 1.0;
    case DecayFamily::Linear: return (md - td + 1.0) / md;
    case DecayFamily::Exponential: return std::exp(-(td - 1.0) / md);
    case DecayFamily::Reciprocal: return 1.0 / td;
    case DecayFamily::ReciprocalSquared: return 1.0 / (td * td);
    case DecayFamily::Ewma: return std::pow(1.0 - kind.lambda, td - 1.0);
  }
  return 1.0;
}

Eigen::VectorXd normalized_decay_weights(DecayKind kind, std::size_t m) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(m));
  for (std::size_t t = 1; t <= m; ++t) w[static_cast<Eigen::Index>(t - 1)] = decay_weight(kind, t, m);
  return w / w.sum();
}

namespace {

void require_normalized(const TestHistory& h) {
  for (const auto& r : h.records) {
    if (r.outcome != TestOutcome::Passed && r.outcome != TestOutcome::Failed) {
      throw ContractViolation("history of " + h.test_id + " is not normalized");
    }
  }
}

}  // namespace

double flip_rate(const TestHistory& history, DecayKind kind) {
  require_normalized(history);
  const std::size_t n = history.size();
  if (n < 2) throw InsufficientHistoryError("flip rate of " + history.test_id + " needs at least 2 runs");
  const std::size_t m = n - 1;
  // Divide once at the end so integer-valued weights give exact ratios.
  double flipped = 0.0;
  double total = 0.0;
  // Transition t pairs records (n-1-t, n-t); t = 1 is the newest pair.
  for (std::size_t t = 1; t <= m; ++t) {
    const double w = decay_weight(kind, t, m);
    total += w;
    if (history.records[n - 1 - t].outcome != history.records[n - t].outcome) flipped += w;
  }
  const double rate = flipped / total;
  return std::clamp(rate, 0.0, 1.0);
}

double entropy(const TestHistory& history) {
  require_normalized(history);
  if (history.empty()) throw InsufficientHistoryError("entropy of " + history.test_id + " needs at least 1 run");
  const auto fails = std::count_if(history.records.begin(), history.records.end(),
                                   [](const ExecutionRecord& r) { return r.outcome == TestOutcome::Failed; });
  const double pf = static_cast<double>(fails) / static_cast<double>(history.size());
  double h = 0.0;
  for (double p : {pf, 1.0 - pf}) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

double mean_duration(const TestHistory& history) {
  if (history.empty()) throw InsufficientHistoryError("mean duration of " + history.test_id + " needs at least 1 run");
  double sum = 0.0;
  for (const auto& r : history.records) sum += r.duration;
  return sum / static_cast<double>(history.size());
}

std::optional<double> mean_duration_diff(const TestHistory& history) {
  double pass_sum = 0.0, fail_sum = 0.0;
  std::size_t passes = 0, fails = 0;
  for (const auto& r : history.records) {
    if (r.outcome == TestOutcome::Passed) {
      pass_sum += r.duration;
      ++passes;
    } else if (r.outcome == TestOutcome::Failed) {
      fail_sum += r.duration;
      ++fails;
    }
  }
  if (passes == 0 || fails == 0) return std::nullopt;
  return pass_sum / static_cast<double>(passes) - fail_sum / static_cast<double>(fails);
}

std::map<std::string, std::size_t> churn_window_counts(const ChurnLog& log, Timestamp reference_time,
                                                        int window_days,
                                                        const std::vector<std::string>& vocabulary) {
  if (window_days <= 0) throw ContractViolation("window must be a positive number of days");
  std::map<std::string, std::size_t> counts;
  for (const auto& ext : vocabulary) counts[ext] = 0;
  const Timestamp oldest = reference_time - static_cast<Timestamp>(window_days) * kSecondsPerDay;
  // commits are ascending; start at the first one inside the window
  auto it = std::lower_bound(log.commits.begin(), log.commits.end(), oldest,
                             [](const CommitRecord& c, Timestamp t) { return c.timestamp < t; });
  for (; it != log.commits.end() && it->timestamp <= reference_time; ++it) {
    for (const auto& path : it->changed_paths) {
      auto found = counts.find(file_extension(path));
      if (found != counts.end()) ++found->second;
    }
  }
  return counts;
}

std::string_view group_name(FeatureGroup group) {
  switch (group) {
    case FeatureGroup::FlipRate: return "flip_rate";
    case FeatureGroup::Entropy: return "entropy";
    case FeatureGroup::MeanDuration: return "mean_duration";
    case FeatureGroup::MeanDurationDiff: return "mean_duration_diff";
    case FeatureGroup::ChurnCount: return "churn_count";
    case FeatureGroup::Project: return "project";
    case FeatureGroup::PrChangedFiles: return "pr_changed_files";
    case FeatureGroup::PrContributors: return "pr_contributors";
  }
  return "entropy";
}

FeatureGroup group_from_name(std::string_view name) {
  for (auto g : {FeatureGroup::FlipRate, FeatureGroup::Entropy, FeatureGroup::MeanDuration,
                 FeatureGroup::MeanDurationDiff, FeatureGroup::ChurnCount, FeatureGroup::Project,
                 FeatureGroup::PrChangedFiles, FeatureGroup::PrContributors}) {
    if (group_name(g) == name) return g;
  }
  throw ValidationError("unknown feature group '" + std::string(name) + "'");
}

std::string FeatureSpec::name() const {
  switch (group) {
    case FeatureGroup::FlipRate: return "flip_rate_" + decay.name();
    case FeatureGroup::ChurnCount:
      return (extension.empty() ? std::string("[none]") : extension) + "_changes_" + std::to_string(window_days);
    case FeatureGroup::Project: return "project_" + repo_id;
    default: return std::string(group_name(group));
  }
}

FeatureFlags FeatureFlags::all() {
  FeatureFlags f;
  f.decay_kinds = all_decay_kinds();
  f.entropy = f.mean_duration = f.mean_duration_diff = true;
  f.churn_counts = f.project = f.pull_request = true;
  return f;
}

FeatureFlags FeatureFlags::outcomes_only(DecayKind kind) {
  FeatureFlags f;
  f.decay_kinds = {kind};
  return f;
}

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features, std::vector<std::string> extension_vocabulary,
                             std::vector<std::string> project_vocabulary)
    : features_(std::move(features)),
      extension_vocabulary_(std::move(extension_vocabulary)),
      project_vocabulary_(std::move(project_vocabulary)) {
  std::set<std::string> seen;
  for (const auto& f : features_) {
    if (!seen.insert(f.name()).second) throw ValidationError("duplicate feature name " + f.name());
  }
}

std::vector<std::string> FeatureSchema::names() const {
  std::vector<std::string> out;
  out.reserve(features_.size());
  for (const auto& f : features_) out.push_back(f.name());
  return out;
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name() == name) return i;
  }
  return std::nullopt;
}

FeatureSchema FeatureSchema::subset(const std::vector<std::string>& keep) const {
  for (const auto& k : keep) {
    if (!index_of(k)) throw LookupError("feature " + k + " not in schema");
  }
  std::vector<FeatureSpec> kept;
  for (const auto& f : features_) {
    if (std::find(keep.begin(), keep.end(), f.name()) != keep.end()) kept.push_back(f);
  }
  return FeatureSchema(std::move(kept), extension_vocabulary_, project_vocabulary_);
}

std::vector<Eigen::Index> FeatureSchema::columns_of(const FeatureSchema& other) const {
  std::vector<Eigen::Index> cols;
  for (const auto& f : other.features()) {
    auto idx = index_of(f.name());
    if (!idx) throw SchemaMismatchError("feature " + f.name() + " not in schema");
    cols.push_back(static_cast<Eigen::Index>(*idx));
  }
  return cols;
}

FeatureSchema build_schema(const std::vector<Unit>& units, const std::map<std::string, ChurnLog>& logs,
                           const FeatureFlags& flags) {
  if (units.empty()) throw ValidationError("cannot build a schema from zero units");

  std::set<std::string> extensions;
  std::set<std::string> repos;
  const int widest = flags.windows_days.empty()
                         ? 0
                         : *std::max_element(flags.windows_days.begin(), flags.windows_days.end());
  for (const auto& u : units) {
    repos.insert(u.repo_id);
    if (!flags.churn_counts || widest <= 0) continue;
    auto log = logs.find(u.repo_id);
    if (log == logs.end()) continue;
    const Timestamp oldest = u.reference_time - static_cast<Timestamp>(widest) * kSecondsPerDay;
    for (const auto& c : log->second.commits) {
      if (c.timestamp < oldest || c.timestamp > u.reference_time) continue;
      for (const auto& p : c.changed_paths) extensions.insert(file_extension(p));
    }
  }

  std::vector<FeatureSpec> specs;
  for (const auto& k : flags.decay_kinds) specs.push_back({.group = FeatureGroup::FlipRate, .decay = k});
  if (flags.entropy) specs.push_back({.group = FeatureGroup::Entropy});
  if (flags.mean_duration) specs.push_back({.group = FeatureGroup::MeanDuration});
  if (flags.mean_duration_diff) specs.push_back({.group = FeatureGroup::MeanDurationDiff});
  if (flags.churn_counts) {
    for (int days : flags.windows_days) {
      for (const auto& ext : extensions) {
        specs.push_back({.group = FeatureGroup::ChurnCount, .extension = ext, .window_days = days});
      }
    }
  }
  if (flags.project) {
    for (const auto& r : repos) specs.push_back({.group = FeatureGroup::Project, .repo_id = r});
  }
  if (flags.pull_request) {
    specs.push_back({.group = FeatureGroup::PrChangedFiles});
    specs.push_back({.group = FeatureGroup::PrContributors});
  }
  return FeatureSchema(std::move(specs), {extensions.begin(), extensions.end()}, {repos.begin(), repos.end()});
}

FeatureVector featurize(const Unit& unit, const TestHistory& history, const ChurnLog& log,
                        const PullRequestInfo& pr, const FeatureSchema& schema) {
  for (const auto& r : history.records) {
    if (r.timestamp > unit.reference_time) {
      throw ContractViolation("history of " + unit.test_id + " contains runs after the reference time");
    }
  }
  FeatureVector out{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(schema.size())), unit};
  std::map<int, std::map<std::string, std::size_t>> churn_cache;
  Eigen::Index col = 0;
  for (const auto& spec : schema.features()) {
    double v = 0.0;
    switch (spec.group) {
      case FeatureGroup::FlipRate: v = flip_rate(history, spec.decay); break;
      case FeatureGroup::Entropy: v = entropy(history); break;
      case FeatureGroup::MeanDuration: v = mean_duration(history); break;
      case FeatureGroup::MeanDurationDiff: v = mean_duration_diff(history).value_or(0.0); break;
      case FeatureGroup::ChurnCount: {
        auto it = churn_cache.find(spec.window_days);
        if (it == churn_cache.end()) {
          it = churn_cache
                   .emplace(spec.window_days, churn_window_counts(log, unit.reference_time, spec.window_days,
                                                                  schema.extension_vocabulary()))
                   .first;
        }
        auto c = it->second.find(spec.extension);
        v = c == it->second.end() ? 0.0 : static_cast<double>(c->second);
        break;
      }
      case FeatureGroup::Project: v = spec.repo_id == unit.repo_id ? 1.0 : 0.0; break;
      case FeatureGroup::PrChangedFiles: v = static_cast<double>(pr.changed_file_count); break;
      case FeatureGroup::PrContributors: v = static_cast<double>(pr.contributor_count); break;
    }
    if (!std::isfinite(v)) throw ValidationError("non-finite value for feature " + spec.name());
    out.values[col++] = v;
  }
  return out;
}

Labels FeatureMatrix::labels() const {
  Labels y(static_cast<Eigen::Index>(units.size()));
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (!units[i].label) throw ValidationError("unit " + units[i].unit_id + " has no label");
    y[static_cast<Eigen::Index>(i)] = *units[i].label ? 1 : 0;
  }
  return y;
}

FeatureMatrix FeatureMatrix::select(const FeatureSchema& sub) const {
  const auto cols = schema.columns_of(sub);
  return {sub, values(Eigen::all, cols), units};
}

}  // namespace flakelens
