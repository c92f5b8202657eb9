#include <gtest/gtest.h>

#include <random>

#include "flakelens/errors.hpp"
#include "flakelens/format.hpp"
#include "flakelens/history.hpp"
#include "test_support.hpp"

namespace flakelens {
namespace {

using testing::make_history;

std::string outcomes(const TestHistory& h) {
  std::string s;
  for (const auto& r : h.records) s += std::string(outcome_name(r.outcome)) + " ";
  return s;
}

TEST(JunitReport, TestcaseWithoutChildrenPasses) {
  auto recs = parse_junit_report(R"(<testsuite><testcase name="t1" time="0.5"/></testsuite>)", 100);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].test_id, "t1");
  EXPECT_EQ(recs[0].outcome, TestOutcome::Passed);
  EXPECT_DOUBLE_EQ(recs[0].duration, 0.5);
  EXPECT_EQ(recs[0].timestamp, 100);
}

TEST(JunitReport, FailureErrorAndSkippedMapToOutcomes) {
  auto recs = parse_junit_report(R"(<testsuite timestamp="1970-01-01T00:01:40">
      <testcase classname="c" name="a"><error/></testcase>
      <testcase classname="c" name="b"><skipped/></testcase>
      <testcase classname="c" name="d"></testcase>
      <testcase classname="c" name="e"><failure>boom</failure></testcase>
    </testsuite>)",
                                 0);
  ASSERT_EQ(recs.size(), 4u);
  EXPECT_EQ(recs[0].outcome, TestOutcome::Failed);
  EXPECT_EQ(recs[1].outcome, TestOutcome::Skipped);
  EXPECT_EQ(recs[2].outcome, TestOutcome::Passed);
  EXPECT_EQ(recs[3].outcome, TestOutcome::Failed);
  EXPECT_EQ(recs[0].test_id, "c.a");
  EXPECT_EQ(recs[0].timestamp, 100);
  EXPECT_EQ(recs[0].duration, 0.0);
}

TEST(JunitReport, GoldenFixture) {
  const std::string dir = FLAKELENS_TEST_DATA_DIR;
  auto recs = parse_junit_report(read_file(dir + "/junit_report.xml"), 1'700'000'000);
  EXPECT_EQ(serialize_history_jsonl(recs), read_file(dir + "/junit_report.expected.jsonl"));
}

TEST(JunitReport, MalformedXmlReportsByteOffset) {
  try {
    parse_junit_report("<testsuite><testcase name='a'></testsuite>", 0);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.location_kind(), ParseError::Location::ByteOffset);
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos);
  }
  EXPECT_THROW(parse_junit_report("", 0), ParseError);
  EXPECT_THROW(parse_junit_report("<html/>", 0), ParseError);
  EXPECT_THROW(parse_junit_report("<testsuite>", 0), ParseError);
}

TEST(JunitReport, NegativeTimeNamesTheTestcase) {
  try {
    parse_junit_report(R"(<testsuite><testcase classname="k" name="neg" time="-1"/></testsuite>)", 0);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("k.neg"), std::string::npos);
  }
}

TEST(JunitReport, RecordCountEqualsTestcaseCount) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::string xml = "<testsuites>";
    int count = 0;
    const int suites = static_cast<int>(rng() % 4);
    for (int s = 0; s < suites; ++s) {
      xml += "<testsuite>";
      const int cases = static_cast<int>(rng() % 6);
      for (int c = 0; c < cases; ++c, ++count) {
        switch (rng() % 3) {
          case 0: xml += "<testcase name=\"x\"/>"; break;
          case 1: xml += "<testcase name=\"x\"><failure/></testcase>"; break;
          default: xml += "<testcase name=\"x\"><skipped/><system-err>e</system-err></testcase>"; break;
        }
      }
      xml += "</testsuite>";
    }
    xml += "</testsuites>";
    EXPECT_EQ(parse_junit_report(xml, 1).size(), static_cast<std::size_t>(count));
  }
}

TEST(Iso8601, ZonesAndFractions) {
  EXPECT_EQ(parse_iso8601("1970-01-01T00:00:00"), 0);
  EXPECT_EQ(parse_iso8601("2023-04-01T12:00:00Z"), 1680350400);
  EXPECT_EQ(parse_iso8601("2023-04-01T13:30:00.250+01:30"), 1680350400);
  EXPECT_EQ(parse_iso8601("2023-04-01T10:00:00-02:00"), 1680350400);
  EXPECT_THROW(parse_iso8601("2023-02-30T00:00:00"), ValidationError);
  EXPECT_THROW(parse_iso8601("yesterday"), ValidationError);
}

TEST(HistoryJsonl, SingleRecord) {
  auto recs = parse_history_jsonl(R"({"test_id":"a","timestamp":100,"outcome":"passed","duration":1.0})");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].test_id, "a");
  EXPECT_EQ(recs[0].timestamp, 100);
  EXPECT_EQ(recs[0].outcome, TestOutcome::Passed);
  EXPECT_EQ(recs[0].duration, 1.0);
  EXPECT_FALSE(recs[0].build_id);
}

TEST(HistoryJsonl, OutcomeIsCaseInsensitive) {
  auto recs = parse_history_jsonl(R"({"test_id":"a","timestamp":100,"outcome":"FLAKY","duration":1})");
  EXPECT_EQ(recs.at(0).outcome, TestOutcome::FlakyVerdict);
}

TEST(HistoryJsonl, MissingKeyNamesKeyAndLine) {
  try {
    parse_history_jsonl("{}");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_STREQ(e.what(), "missing key test_id at line 1");
    EXPECT_EQ(e.location(), 1u);
    EXPECT_EQ(e.location_kind(), ParseError::Location::Line);
  }
}

TEST(HistoryJsonl, UnknownOutcomeNamesLine) {
  const std::string text =
      "{\"test_id\":\"a\",\"timestamp\":1,\"outcome\":\"passed\",\"duration\":0}\n\n"
      "{\"test_id\":\"a\",\"timestamp\":2,\"outcome\":\"exploded\",\"duration\":0}\n";
  try {
    parse_history_jsonl(text);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_STREQ(e.what(), "unknown outcome 'exploded' at line 3");
  }
}

TEST(HistoryJsonl, RejectsBadValues) {
  EXPECT_THROW(parse_history_jsonl("not json"), ParseError);
  EXPECT_THROW(parse_history_jsonl(R"({"test_id":"a","timestamp":1.5,"outcome":"passed","duration":0})"),
               ParseError);
  EXPECT_THROW(parse_history_jsonl(R"({"test_id":"a","timestamp":1,"outcome":"passed","duration":-2})"),
               ParseError);
}

TEST(HistoryJsonl, RoundTripIsIdentity) {
  std::mt19937_64 rng(11);
  std::vector<ExecutionRecord> recs;
  for (int i = 0; i < 200; ++i) {
    ExecutionRecord r;
    r.test_id = "suite/test \"" + std::to_string(rng() % 7) + "\" é";
    r.timestamp = 1 + static_cast<Timestamp>(rng() % 2'000'000'000);
    r.outcome = static_cast<TestOutcome>(rng() % 5);
    r.duration = std::uniform_real_distribution<double>(0, 1000)(rng);
    if (rng() % 2) r.build_id = "b" + std::to_string(rng() % 100);
    if (rng() % 3 == 0) r.pipeline = "nightly";
    recs.push_back(r);
  }
  const auto text = serialize_history_jsonl(recs);
  EXPECT_EQ(parse_history_jsonl(text), recs);
  EXPECT_EQ(serialize_history_jsonl(parse_history_jsonl(text)), text);
}

TEST(GroupHistories, OrdersByTimestampThenBuildThenInput) {
  std::vector<ExecutionRecord> recs = {
      {"b", 5, TestOutcome::Passed, 1.0, "x", {}},
      {"a", 7, TestOutcome::Passed, 1.0, "b2", {}},
      {"a", 7, TestOutcome::Failed, 1.0, "b1", {}},
      {"a", 3, TestOutcome::Passed, 2.0, {}, {}},
      {"a", 3, TestOutcome::Failed, 3.0, {}, {}},
  };
  auto groups = group_histories(recs);
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[0].test_id, "a");
  ASSERT_EQ(groups[0].size(), 4u);
  EXPECT_EQ(groups[0].records[0].duration, 2.0);
  EXPECT_EQ(groups[0].records[1].duration, 3.0);
  EXPECT_EQ(groups[0].records[2].build_id, "b1");
  EXPECT_EQ(groups[0].records[3].build_id, "b2");
}

TEST(Normalize, FlakyVerdictBecomesFailure) {
  EXPECT_EQ(outcomes(normalize_history(make_history("PKP"))), "passed failed passed ");
  EXPECT_TRUE(normalize_history(make_history("CC")).empty());
  EXPECT_EQ(outcomes(normalize_history(make_history("FP"))), "failed passed ");
  EXPECT_EQ(outcomes(normalize_history(make_history("SPCF"))), "passed failed ");
}

TEST(Normalize, IdempotentAndOnlyPassFail) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    auto h = make_history(testing::random_verdicts(rng, rng() % 40, 0.4, "PFKCS"));
    auto once = normalize_history(h);
    auto twice = normalize_history(once);
    EXPECT_EQ(once.records, twice.records);
    for (const auto& r : once.records) {
      EXPECT_TRUE(r.outcome == TestOutcome::Passed || r.outcome == TestOutcome::Failed);
    }
  }
}

TEST(Window, KeepsEverythingInsideLimits) {
  auto h = make_history("PPFPF", 1000);
  EXPECT_EQ(window_history(h, 10'000).size(), 5u);
}

TEST(Window, CountCapKeepsMostRecent) {
  auto h = make_history("FFPPPPPPPPPP", 1000);
  auto w = window_history(h, 10'000, {.max_age = 90 * kSecondsPerDay, .max_count = 10});
  ASSERT_EQ(w.size(), 10u);
  EXPECT_EQ(w.records.front().timestamp, h.records[2].timestamp);
  EXPECT_EQ(w.records.back().timestamp, h.records.back().timestamp);
}

TEST(Window, FutureRecordsExcluded) {
  auto h = make_history("PPP", 1000);  // 1000, 1060, 1120
  auto w = window_history(h, 1060);
  EXPECT_EQ(w.size(), 2u);
}

TEST(Window, BoundsProperty) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 300; ++i) {
    TestHistory h{"t", {}};
    const std::size_t n = rng() % 60;
    for (std::size_t j = 0; j < n; ++j) {
      h.records.push_back({"t", static_cast<Timestamp>(rng() % 10'000), TestOutcome::Passed, 0.0, {}, {}});
    }
    sort_history(h);
    const Timestamp ref = static_cast<Timestamp>(rng() % 10'000);
    const WindowLimits lim{static_cast<Timestamp>(rng() % 5'000), 1 + rng() % 30};
    auto w = window_history(h, ref, lim);
    EXPECT_LE(w.size(), std::min(h.size(), lim.max_count));
    for (const auto& r : w.records) {
      EXPECT_LE(r.timestamp, ref);
      EXPECT_GE(r.timestamp, ref - lim.max_age);
    }
  }
}

}  // namespace
}  // namespace flakelens
