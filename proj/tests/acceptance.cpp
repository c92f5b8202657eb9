// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff all
// pass. Usage: flakelens_acceptance <path to flakelens CLI>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "flakelens/baseline.hpp"
#include "flakelens/churn.hpp"
#include "flakelens/dataset.hpp"
#include "flakelens/errors.hpp"
#include "flakelens/evaluation.hpp"
#include "flakelens/experiment.hpp"
#include "flakelens/explainer.hpp"
#include "flakelens/features.hpp"
#include "flakelens/format.hpp"
#include "flakelens/history.hpp"
#include "flakelens/learner.hpp"
#include "flakelens/synth.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace flakelens;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

char buf[512];

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

// 1. Flip-rate, decay and entropy formulas. Limit: 1 s.
Outcome formulas() {
  Outcome o;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const std::string v = testing::random_verdicts(rng, 2 + rng() % 300, 0.05 + 0.9 * (rng() % 100) / 100.0);
    std::size_t flips = 0;
    for (std::size_t j = 1; j < v.size(); ++j) flips += v[j] != v[j - 1];
    const double expected = static_cast<double>(flips) / static_cast<double>(v.size() - 1);
    o.check(flip_rate(testing::make_history(v), DecayKind::constant()) == expected,
            "constant-decay flip rate differs from the unweighted rate on " + v);
  }
  for (const auto& kind : all_decay_kinds()) {
    for (std::size_t m = 1; m <= 1000; ++m) {
      o.check(std::abs(normalized_decay_weights(kind, m).sum() - 1.0) <= 1e-12,
              "weights of " + kind.name() + " do not sum to 1 for m=" + std::to_string(m));
    }
  }
  o.check(entropy(testing::make_history("PFPF")) == 1.0, "entropy(p=0.5) != 1");
  o.check(entropy(testing::make_history("PPPP")) == 0.0, "entropy(all pass) != 0");
  o.check(entropy(testing::make_history("FFFF")) == 0.0, "entropy(all fail) != 0");
  const auto ppf = testing::make_history("PPF");
  o.check(std::abs(flip_rate(ppf, DecayKind::reciprocal_squared()) - 0.8) <= 1e-9, "(P,P,F) reciprocal_squared != 0.8");
  o.check(std::abs(flip_rate(ppf, DecayKind::ewma(0.1)) - 1.0 / 1.9) <= 1e-9, "(P,P,F) ewma(0.1) != 0.5263");
  if (o.pass) o.detail = "1000 exact constant-decay histories, weights, entropy, hand cases";
  return o;
}

// 2. Baseline against a brute-force maximal-run scanner. Limit: 5 s.
Outcome baseline_oracle() {
  Outcome o;
  std::mt19937_64 rng(2);
  const char* alphabets[] = {"PF", "PFCS", "PFKCS"};
  const char* boundaries[] = {"FFFFF", "FFFF", "PFFFFFP", "PFFFFP"};
  std::size_t exact_five = 0, empty = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = rng() % 501;
    const double fail = 0.01 + 0.98 * static_cast<double>(rng() % 1000) / 1000.0;
    std::string v = testing::random_verdicts(rng, n, fail, alphabets[i % 3]);
    if (i % 5 == 0) {
      // Splice a run at the length boundary somewhere in the window.
      const std::string run = boundaries[(i / 5) % 4];
      v = v.substr(0, v.size() / 2) + run + v.substr(v.size() / 2);
      if (v.size() > 500) v = v.substr(v.size() - 500);
    }
    const auto runs = oracle::maximal_fail_runs(v);
    if (std::find(runs.begin(), runs.end(), 5) != runs.end()) ++exact_five;
    if (v.find_first_of("PFK") == std::string::npos) {
      // No executions at all: the classifier must refuse.
      bool refused = false;
      try {
        baseline_classify(testing::make_history(v));
      } catch (const Error&) {
        refused = true;
      }
      o.check(refused, "history without executions was classified: " + v);
      ++empty;
      continue;
    }
    const auto got = baseline_classify(testing::make_history(v));
    o.check(got == oracle::baseline(v), "disagreement on history " + v);
  }
  o.check(exact_five > 0, "no history contained an exact run of 5");
  if (o.pass) o.detail = fmt("10000 histories agree, %zu with an exact 5-run, %zu without executions rejected", exact_five, empty);
  return o;
}

// 3. TreeSHAP against exhaustive Shapley values. Limit: 30 s.
Outcome shap_correctness() {
  Outcome o;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0.0, worst_local = 0.0;
  std::size_t predictions = 0;
  for (int pair = 0; pair < 200; ++pair) {
    const int features = 1 + static_cast<int>(rng() % 10);
    TreeEnsembleModel m;
    m.kind = ModelKind::Gbm;
    m.n_features = features;
    m.initial_score = u(rng);
    m.learning_rate = 0.05 + 0.5 * (u(rng) + 1.0);
    const int trees = 1 + static_cast<int>(rng() % 4);
    for (int t = 0; t < trees; ++t) m.trees.push_back(testing::random_tree(rng, features, 1 + rng() % 4));

    Eigen::VectorXd x(features);
    for (int j = 0; j < features; ++j) x[j] = u(rng);
    worst = std::max(worst, (tree_shap_row(m, x) - brute_force_shapley(m, x)).cwiseAbs().maxCoeff());

    // Local accuracy on a batch of predictions of the same model.
    Eigen::MatrixXd X(20, features);
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      for (int j = 0; j < features; ++j) X(r, j) = u(rng);
    }
    X.row(0) = x.transpose();
    const ShapExplanation e = tree_shap(m, X);
    const Eigen::VectorXd raw = predict_raw(m, X);
    for (Eigen::Index r = 0; r < X.rows(); ++r, ++predictions) {
      worst_local = std::max(worst_local, std::abs(e.base_value + e.values.row(r).sum() - raw[r]));
    }
  }
  o.check(worst <= 1e-6, fmt("max |tree_shap - brute force| = %.3g", worst));
  o.check(worst_local <= 1e-9, fmt("local accuracy violated by %.3g", worst_local));
  if (o.pass) {
    o.detail = fmt("200 pairs, max error %.2g; local accuracy on %zu predictions, max %.2g", worst, predictions,
                   worst_local);
  }
  return o;
}

// 4. Boosting loss, fold stratification, metrics.
Outcome learner_sanity() {
  Outcome o;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0, 1);
  int fixtures = 0;
  for (int f = 0; f < 12; ++f, ++fixtures) {
    const int n = 40 + 15 * f;
    const int cols = 1 + f % 5;
    Eigen::MatrixXd X(n, cols);
    Labels y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < cols; ++j) X(i, j) = noise(rng);
      const double signal = f % 3 == 0 ? X(i, 0) : f % 3 == 1 ? X(i, 0) * X(i, cols - 1) : std::sin(3 * X(i, 0));
      y[i] = signal + (f % 2 ? 0.5 : 0.0) * noise(rng) > 0 ? 1 : 0;
    }
    if (y.sum() == 0 || y.sum() == n) y[0] = 1 - y[0];
    const auto m = fit_gbm(X, y, {.n_trees = 60, .learning_rate = 0.05 + 0.05 * (f % 4)});
    double prev = log_loss(truncated(m, 0), X, y);
    for (std::size_t t = 1; t <= m.trees.size(); ++t) {
      const double cur = log_loss(truncated(m, t), X, y);
      o.check(cur <= prev + 1e-12, fmt("fixture %d: loss rose at iteration %zu", f, t));
      prev = cur;
    }
  }

  for (int trial = 0; trial < 300; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 9);
    const int pos = k + static_cast<int>(rng() % 80), neg = k + static_cast<int>(rng() % 80);
    Labels y(pos + neg);
    y.head(pos).setOnes();
    y.tail(neg).setZero();
    std::shuffle(y.data(), y.data() + y.size(), rng);
    const auto folds = stratified_kfold(y, k, rng());
    std::vector<int> seen(static_cast<std::size_t>(y.size()), 0);
    int min_pos = pos, max_pos = 0, min_neg = neg, max_neg = 0;
    for (const auto& fold : folds) {
      int p = 0;
      for (auto r : fold.test) {
        ++seen[static_cast<std::size_t>(r)];
        p += y[r];
      }
      const int q = static_cast<int>(fold.test.size()) - p;
      min_pos = std::min(min_pos, p), max_pos = std::max(max_pos, p);
      min_neg = std::min(min_neg, q), max_neg = std::max(max_neg, q);
    }
    o.check(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }), "folds do not partition the rows");
    o.check(max_pos - min_pos <= 1 && max_neg - min_neg <= 1, fmt("fold class counts differ by more than 1 (k=%d)", k));
  }

  struct Case {
    std::size_t tp, fp, fn, tn;
    double precision, recall, f1;
  };
  const Case cases[] = {
      {6, 4, 2, 8, 0.6, 0.75, 2.0 / 3.0},
      {10, 0, 0, 10, 1.0, 1.0, 1.0},
      {0, 0, 0, 5, 0.0, 0.0, 0.0},
      {3, 1, 0, 0, 0.75, 1.0, 6.0 / 7.0},
      {1, 1, 1, 1, 0.5, 0.5, 0.5},
  };
  for (const auto& c : cases) {
    std::vector<bool> predicted;
    std::vector<int> truth;
    auto add = [&](std::size_t n, bool p, int t) {
      for (std::size_t i = 0; i < n; ++i) predicted.push_back(p), truth.push_back(t);
    };
    add(c.tp, true, 1), add(c.fp, true, 0), add(c.fn, false, 1), add(c.tn, false, 0);
    const Confusion got = confusion(predicted, Eigen::Map<const Labels>(truth.data(), static_cast<Eigen::Index>(truth.size())));
    const Metrics m = Metrics::from(got);
    o.check(got.tp == c.tp && got.fp == c.fp && got.fn == c.fn && got.tn == c.tn, "confusion counts differ");
    o.check(m.precision == c.precision && m.recall == c.recall, fmt("precision/recall differ for TP=%zu", c.tp));
    o.check(std::abs(m.f1 - c.f1) <= 1e-15, fmt("F1 differs for TP=%zu", c.tp));
  }
  if (o.pass) o.detail = fmt("%d boosting fixtures, 300 fold splits, 5 metric fixtures", fixtures);
  return o;
}

// 5. Feature-group ablation on the default generator. Limit: 2 min.
Outcome synthetic_end_to_end() {
  Outcome o;
  SynthConfig config;  // 100 flaky + 100 non-flaky, seed 42
  const SynthDataset data = generate(config);
  const FeatureMatrix all = extract_features(data.data, FeatureFlags::all()).matrix;
  auto f1 = [&](const char* preset) { return run_experiment(all, preset_by_name(preset), 5, 42).report.mean_f1; };
  const double rq1 = f1("rq1-reciprocal_squared"), rq2 = f1("rq2"), full = f1("full"), top3 = f1("top3");
  o.detail = fmt("F1 rq1 %.4f < rq2 %.4f < full %.4f >= 0.90, top3 %.4f within 0.05", rq1, rq2, full, top3);
  o.check(rq1 < rq2 && rq2 < full, "ordering rq1 < rq2 < full violated: " + o.detail);
  o.check(full >= 0.90, "full model below 0.90: " + o.detail);
  o.check(std::abs(top3 - full) <= 0.05, "top-3 model too far from full: " + o.detail);
  if (!o.pass) o.detail = "; " + o.detail;
  return o;
}

// 6. Stronger decay on recently fixed tests.
Outcome decay_ordering() {
  Outcome o;
  const SynthDataset data = generate(SynthConfig::recently_fixed());
  const FeatureMatrix all = extract_features(data.data, FeatureFlags::all()).matrix;
  const auto constant = run_experiment(all, preset_by_name("rq1-constant"), 5, 42).report;
  const auto recsq = run_experiment(all, preset_by_name("rq1-reciprocal_squared"), 5, 42).report;
  o.detail = fmt("F1 reciprocal_squared %.4f vs constant %.4f; threshold c_v %.4f vs %.4f", recsq.mean_f1,
                 constant.mean_f1, *recsq.cv_threshold, *constant.cv_threshold);
  o.check(recsq.mean_f1 >= constant.mean_f1, "F1 ordering violated: " + o.detail);
  o.check(*recsq.cv_threshold <= *constant.cv_threshold, "threshold stability ordering violated: " + o.detail);
  return o;
}

// 7. Two CLI pipeline runs with identical config are byte-identical.
Outcome determinism(const std::string& cli) {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("flakelens_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const char* steps[] = {
      "synth --run-id data",
      "extract --dataset runs/data --preset all --run-id features",
      "train --features runs/features/features.csv --preset full --run-id model",
      "evaluate --features runs/features/features.csv --preset top3 --run-id evaluation",
      "explain --model runs/model/model.json --features runs/features/features.csv --run-id explanation",
      "predict --model runs/model/model.json --dataset runs/data --run-id predictions",
      "baseline --dataset runs/data --run-id baseline",
  };
  for (const char* replica : {"a", "b"}) {
    const fs::path dir = root / replica;
    fs::create_directories(dir);
    for (const char* step : steps) {
      const std::string cmd = "cd '" + dir.string() + "' && '" + cli + "' " + step + " --seed 7 --out runs >/dev/null";
      if (std::system(cmd.c_str()) != 0) {
        o.check(false, std::string("command failed: flakelens ") + step);
        fs::remove_all(root);
        return o;
      }
    }
  }
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), root / "a");
    const fs::path twin = root / "b" / rel;
    o.check(fs::exists(twin) && read_file(entry.path().string()) == read_file(twin.string()),
            rel.string() + " differs between runs");
    ++files;
  }
  for (const char* required : {"features/features.csv", "model/model.json", "evaluation/report.json",
                               "evaluation/shap.csv", "explanation/shap.csv"}) {
    o.check(fs::exists(root / "a" / "runs" / required), std::string("missing artifact ") + required);
  }
  fs::remove_all(root);
  if (o.pass) o.detail = fmt("%zu artifacts byte-identical across two runs", files);
  return o;
}

// 8. Parser golden files and round trips.
Outcome golden_files() {
  Outcome o;
  const std::string dir = FLAKELENS_TEST_DATA_DIR;
  const std::string junit_expected = read_file(dir + "/junit_report.expected.jsonl");
  const auto records = parse_junit_report(read_file(dir + "/junit_report.xml"), 1'700'000'000);
  o.check(serialize_history_jsonl(records) == junit_expected, "JUnit parse differs from golden JSONL");
  o.check(serialize_history_jsonl(parse_history_jsonl(junit_expected)) == junit_expected,
          "golden JSONL does not round-trip");
  o.check(parse_history_jsonl(junit_expected) == records, "JSONL round trip changes records");

  const std::string churn_expected = read_file(dir + "/churn_log.expected.tsv");
  o.check(serialize_churn_tsv(parse_churn_tsv(read_file(dir + "/churn_log.tsv"))) == churn_expected,
          "churn TSV differs from golden output");
  o.check(serialize_churn_tsv(parse_churn_tsv(churn_expected)) == churn_expected, "golden TSV does not round-trip");
  if (o.pass) o.detail = fmt("JUnit (%zu records) and churn TSV match golden outputs and round-trip", records.size());
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <flakelens cli>\n", argv[0]);
    return 2;
  }
  const std::string cli = fs::absolute(argv[1]).string();

  struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0: no runtime limit
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "formula suite", 1.0, formulas},
      {2, "baseline oracle equivalence", 5.0, baseline_oracle},
      {3, "SHAP correctness", 30.0, shap_correctness},
      {4, "learner sanity", 0.0, learner_sanity},
      {5, "synthetic end-to-end", 120.0, synthetic_end_to_end},
      {6, "decay ordering on recently fixed tests", 0.0, decay_ordering},
      {7, "pipeline determinism", 0.0, [&] { return determinism(cli); }},
      {8, "parser golden files", 0.0, golden_files},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_s > 0 && seconds > c.limit_s) {
      o.pass = false;
      o.detail += fmt("; took %.2f s, limit %.0f s", seconds, c.limit_s);
    }
    std::printf("%s criterion %d: %s (%s) [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                seconds);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
