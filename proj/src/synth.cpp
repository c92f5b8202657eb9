#include "flakelens/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "flakelens/errors.hpp"

namespace flakelens {

std::string_view mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::Flaky: return "flaky";
    case Mechanism::Regression: return "regression";
    case Mechanism::AlwaysPass: return "always_pass";
    case Mechanism::AlwaysFail: return "always_fail";
    case Mechanism::FixedFlaky: return "fixed_flaky";
  }
  return "flaky";
}

void SynthConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(std::string(name) + " must lie in [0, 1]");
  };
  if (n_flaky < 0 || n_nonflaky < 0) throw ValidationError("unit counts must be non-negative");
  if (history_length < 2) throw ValidationError("history_length must be at least 2");
  if (!(flaky_failure_prob > 0.0 && flaky_failure_prob < 1.0)) {
    throw ValidationError("flaky_failure_prob must lie in (0, 1)");
  }
  if (failure_prob_spread < 0.0) throw ValidationError("failure_prob_spread must be non-negative");
  prob(timeout_failure_share, "timeout_failure_share");
  prob(fast_failure_share, "fast_failure_share");
  if (timeout_failure_share + fast_failure_share > 1.0) throw ValidationError("failure style shares exceed 1");
  prob(rerun_detect_prob, "rerun_detect_prob");
  if (!(cached_share >= 0.0 && cached_share < 1.0)) throw ValidationError("cached_share must lie in [0, 1)");
  if (regression_segments < 1 || !(regression_mean_length >= 1.0)) {
    throw ValidationError("regressions need at least one segment of positive length");
  }
  if (!(regression_length_spread >= 0.0 && regression_length_spread < 1.0)) {
    throw ValidationError("regression_length_spread must lie in [0, 1)");
  }
  prob(recent_regression_prob, "recent_regression_prob");
  prob(trivial_nonflaky_share, "trivial_nonflaky_share");
  prob(fixed_flaky_share, "fixed_flaky_share");
  if (trivial_nonflaky_share + fixed_flaky_share > 1.0) throw ValidationError("non-flaky shares exceed 1");
  if (!(fixed_stable_min > 0.0 && fixed_stable_min <= fixed_stable_max && fixed_stable_max < 1.0)) {
    throw ValidationError("fixed stable fractions must satisfy 0 < min <= max < 1");
  }
  if (n_repos < 1 || timeline_days < 120) throw ValidationError("need at least one repo and a 120-day timeline");
  if (churn_intensity < 0.0 || regression_burst_mean < 0.0 || flaky_pr_mean < 0.0 || nonflaky_pr_mean < 0.0) {
    throw ValidationError("rates must be non-negative");
  }
  if (durations.pass_mean <= 0.0 || durations.fail_mean <= 0.0 || durations.timeout_mean <= 0.0 ||
      durations.fast_fail_mean <= 0.0 || durations.noise_sd < 0.0) {
    throw ValidationError("duration model needs positive means");
  }
}

SynthConfig SynthConfig::recently_fixed() {
  SynthConfig c;
  c.flaky_failure_prob = 0.05;
  c.failure_prob_spread = 0.04;
  c.trivial_nonflaky_share = 0.0;
  c.fixed_flaky_share = 0.7;
  return c;
}

namespace {

constexpr Timestamp kEpochStart = 1'600'000'000;

struct Extension {
  const char* name;
  double weight;
};

constexpr Extension kExtensions[] = {{"cpp", 0.30}, {"h", 0.20}, {"py", 0.10}, {"md", 0.10},
                                     {"txt", 0.05}, {"json", 0.10}, {"yaml", 0.05}, {"cmake", 0.10}};

class Generator {
 public:
  explicit Generator(const SynthConfig& c) : c_(c), rng_(c.seed) {}

  SynthDataset run() {
    SynthDataset out;
    const Timestamp end = kEpochStart + static_cast<Timestamp>(c_.timeline_days) * kSecondsPerDay;
    for (int r = 0; r < c_.n_repos; ++r) {
      const std::string repo = "repo" + std::to_string(r);
      out.data.logs[repo] = background_churn(repo, end);
    }

    const int trivial = static_cast<int>(std::lround(c_.n_nonflaky * c_.trivial_nonflaky_share));
    const int fixed = static_cast<int>(std::lround(c_.n_nonflaky * c_.fixed_flaky_share));
    std::vector<Mechanism> plan(static_cast<std::size_t>(c_.n_flaky), Mechanism::Flaky);
    for (int i = 0; i < c_.n_nonflaky; ++i) {
      if (i < trivial) plan.push_back(i % 3 == 2 ? Mechanism::AlwaysFail : Mechanism::AlwaysPass);
      else if (i < trivial + fixed) plan.push_back(Mechanism::FixedFlaky);
      else plan.push_back(Mechanism::Regression);
    }

    for (std::size_t i = 0; i < plan.size(); ++i) {
      Unit u;
      u.unit_id = "u" + std::to_string(i);
      u.test_id = "test_" + std::to_string(i);
      u.repo_id = "repo" + std::to_string(uniform_int(0, c_.n_repos - 1));
      u.label = plan[i] == Mechanism::Flaky;
      u.reference_time = kEpochStart + 100 * kSecondsPerDay +
                         uniform_int<Timestamp>(0, static_cast<Timestamp>(c_.timeline_days - 100) * kSecondsPerDay);
      out.data.histories[u.test_id] = history(u, plan[i], out.data.logs[u.repo_id]);
      const double pr_mean = plan[i] == Mechanism::Flaky ? c_.flaky_pr_mean : c_.nonflaky_pr_mean;
      out.data.pull_requests[u.unit_id] = {1 + static_cast<std::size_t>(geometric(pr_mean)),
                                           1 + static_cast<std::size_t>(poisson(0.5))};
      out.data.units.push_back(std::move(u));
      out.mechanisms.push_back(plan[i]);
    }
    for (auto& [repo, log] : out.data.logs) {
      std::stable_sort(log.commits.begin(), log.commits.end(),
                       [](const CommitRecord& a, const CommitRecord& b) { return a.timestamp < b.timestamp; });
    }
    return out;
  }

 private:
  template <typename T>
  T uniform_int(T lo, T hi) {
    return std::uniform_int_distribution<T>(lo, hi)(rng_);
  }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool bernoulli(double p) { return uniform(0.0, 1.0) < p; }
  int poisson(double mean) { return mean <= 0.0 ? 0 : std::poisson_distribution<int>(mean)(rng_); }
  int geometric(double mean) {
    return mean <= 0.0 ? 0 : std::geometric_distribution<int>(1.0 / (1.0 + mean))(rng_);
  }
  double normal(double mean, double sd) { return sd <= 0.0 ? mean : std::normal_distribution<double>(mean, sd)(rng_); }

  std::string random_extension() {
    double u = uniform(0.0, 1.0);
    for (const auto& e : kExtensions) {
      if (u < e.weight) return e.name;
      u -= e.weight;
    }
    return kExtensions[0].name;
  }

  std::string author() { return "dev" + std::to_string(uniform_int(0, 19)) + "@example.com"; }

  CommitRecord commit(Timestamp ts) {
    CommitRecord c;
    c.commit_id = "c" + std::to_string(next_commit_++);
    c.timestamp = ts;
    c.author_id = author();
    return c;
  }

  ChurnLog background_churn(const std::string& repo, Timestamp end) {
    ChurnLog log{repo, {}};
    if (c_.churn_intensity <= 0.0) return log;
    std::exponential_distribution<double> gap(c_.churn_intensity / static_cast<double>(kSecondsPerDay));
    double t = static_cast<double>(kEpochStart);
    for (;;) {
      t += gap(rng_);
      if (t >= static_cast<double>(end)) break;
      auto c = commit(static_cast<Timestamp>(t));
      const int files = 1 + poisson(1.5);
      for (int f = 0; f < files; ++f) {
        c.changed_paths.push_back("src/m" + std::to_string(uniform_int(0, 99)) + "/file" + std::to_string(f) + "." +
                                  random_extension());
      }
      log.commits.push_back(std::move(c));
    }
    return log;
  }

  // Consecutive-failure segments as [start, end) run indices, ascending.
  std::vector<std::pair<int, int>> regression_segments(int n) {
    const int count = uniform_int(1, c_.regression_segments);
    std::vector<std::pair<int, int>> segs;
    auto length = [&] {
      const double lo = c_.regression_mean_length * (1.0 - c_.regression_length_spread);
      const double hi = c_.regression_mean_length * (1.0 + c_.regression_length_spread);
      return std::max(1, static_cast<int>(std::lround(lo == hi ? lo : uniform(lo, hi))));
    };
    // Partition the history into `count` slots, one segment per slot.
    const int slot = n / count;
    for (int s = 0; s < count; ++s) {
      const int len = std::min(length(), slot - 2);
      if (len < 1) continue;
      const bool last = s == count - 1;
      int start;
      if (last && bernoulli(c_.recent_regression_prob)) {
        start = n - len - uniform_int(0, std::min(12, slot - len - 1));  // may still be failing at the end
      } else {
        start = s * slot + 1 + uniform_int(0, slot - len - 2);
      }
      segs.emplace_back(start, start + len);
    }
    return segs;
  }

  TestHistory history(const Unit& unit, Mechanism mech, ChurnLog& log) {
    const int n = c_.history_length;
    std::vector<bool> fails(static_cast<std::size_t>(n), false);
    double p = c_.flaky_failure_prob;
    if (c_.failure_prob_spread > 0.0) {
      p = std::clamp(uniform(p - c_.failure_prob_spread, p + c_.failure_prob_spread), 0.02, 0.95);
    }
    std::vector<std::pair<int, int>> segments;
    switch (mech) {
      case Mechanism::Flaky:
        for (auto&& f : fails) f = bernoulli(p);
        break;
      case Mechanism::FixedFlaky: {
        const double stable = c_.fixed_stable_min == c_.fixed_stable_max
                                  ? c_.fixed_stable_min
                                  : uniform(c_.fixed_stable_min, c_.fixed_stable_max);
        const int stable_from = n - std::max(1, static_cast<int>(std::lround(n * stable)));
        for (int i = 0; i < stable_from; ++i) fails[static_cast<std::size_t>(i)] = bernoulli(p);
        break;
      }
      case Mechanism::Regression:
        segments = regression_segments(n);
        for (auto [a, b] : segments) {
          for (int i = a; i < b; ++i) fails[static_cast<std::size_t>(i)] = true;
        }
        break;
      case Mechanism::AlwaysPass: break;
      case Mechanism::AlwaysFail: std::fill(fails.begin(), fails.end(), true); break;
    }

    // Runs spread over the 80 days before the reference time.
    const Timestamp span = 80 * kSecondsPerDay;
    const Timestamp step = span / n;
    const bool flaky_like = mech == Mechanism::Flaky || mech == Mechanism::FixedFlaky;
    enum class FailStyle { Regular, Timeout, Fast } style = FailStyle::Regular;
    if (flaky_like) {
      const double u = uniform(0.0, 1.0);
      if (u < c_.timeout_failure_share) style = FailStyle::Timeout;
      else if (u < c_.timeout_failure_share + c_.fast_failure_share) style = FailStyle::Fast;
    }
    const double scale = std::exp(normal(flaky_like ? std::log(1.5) : 0.0, 0.5));
    const auto& d = c_.durations;

    TestHistory h{unit.test_id, {}};
    for (int i = 0; i < n; ++i) {
      ExecutionRecord r;
      r.test_id = unit.test_id;
      r.timestamp = unit.reference_time - span + step * i + uniform_int<Timestamp>(0, step - 1);
      r.build_id = "b" + std::to_string(r.timestamp);
      const bool failed = fails[static_cast<std::size_t>(i)];
      if (!failed) {
        r.outcome = bernoulli(c_.cached_share) ? TestOutcome::CachedPassed : TestOutcome::Passed;
        r.duration = r.outcome == TestOutcome::CachedPassed ? 0.0 : d.pass_mean * scale + normal(0.0, d.noise_sd);
      } else if (flaky_like) {
        r.outcome = bernoulli(c_.rerun_detect_prob) ? TestOutcome::FlakyVerdict : TestOutcome::Failed;
        switch (style) {
          case FailStyle::Timeout: r.duration = d.timeout_mean + normal(0.0, d.noise_sd); break;
          case FailStyle::Fast: r.duration = d.fast_fail_mean * scale + normal(0.0, d.noise_sd * 0.2); break;
          case FailStyle::Regular: r.duration = d.fail_mean * scale + normal(0.0, d.noise_sd); break;
        }
      } else {
        r.outcome = TestOutcome::Failed;
        r.duration = d.fail_mean * scale + normal(0.0, d.noise_sd);
      }
      r.duration = std::max(0.0, r.duration);
      h.records.push_back(std::move(r));
    }

    // Each regression is introduced by a large C++ change shortly before it.
    for (auto [a, b] : segments) {
      const Timestamp first_fail = h.records[static_cast<std::size_t>(a)].timestamp;
      auto c = commit(first_fail - uniform_int<Timestamp>(600, 6 * 3600));
      const int files = 1 + poisson(c_.regression_burst_mean);
      for (int f = 0; f < files; ++f) {
        c.changed_paths.push_back("src/" + unit.test_id + "/impl" + std::to_string(f) + (f % 4 == 3 ? ".h" : ".cpp"));
      }
      log.commits.push_back(std::move(c));
    }
    return h;
  }

  const SynthConfig& c_;
  std::mt19937_64 rng_;
  std::size_t next_commit_ = 0;
};

}  // namespace

SynthDataset generate(const SynthConfig& config) {
  config.validate();
  return Generator(config).run();
}

}  // namespace flakelens
