#include <gtest/gtest.h>

#include "llmguard/config.h"
#include "llmguard/core.h"
#include "llmguard/errors.h"
#include "support/oracles.h"

namespace llmguard {
namespace {

DetectorReport report(const std::string& id, double score, Phase phase = Phase::kPrompt,
                      double threshold = 0.5) {
  return make_report(id, phase, score, threshold);
}

TEST(Phase, NamesRoundTrip) {
  EXPECT_EQ(phase_name(Phase::kPrompt), "Prompt");
  EXPECT_EQ(phase_name(Phase::kResponse), "Response");
  EXPECT_EQ(parse_phase("Prompt"), Phase::kPrompt);
  EXPECT_EQ(parse_phase("Response"), Phase::kResponse);
  EXPECT_THROW(parse_phase("prompt"), ConfigError);
  EXPECT_THROW(parse_phase(""), ConfigError);
}

TEST(MakeReport, FlagIsStrictlyGreaterThanThreshold) {
  EXPECT_FALSE(report("toxicity", 0.5).flagged);
  EXPECT_TRUE(report("toxicity", 0.5 + 1e-9).flagged);
  EXPECT_FALSE(report("toxicity", 0.0, Phase::kPrompt, 0.0).flagged);
  EXPECT_TRUE(report("toxicity", 1e-300, Phase::kPrompt, 0.0).flagged);
  EXPECT_FALSE(report("toxicity", 1.0, Phase::kPrompt, 1.0).flagged);
}

TEST(MakeReport, RaisingThresholdNeverCreatesAFlag) {
  for (double score : {0.0, 0.1, 0.5, 0.73, 1.0}) {
    bool previous = true;
    for (int t = 0; t <= 100; ++t) {
      const bool flagged = report("x", score, Phase::kPrompt, t / 100.0).flagged;
      EXPECT_FALSE(flagged && !previous) << "score " << score << " threshold " << t / 100.0;
      previous = flagged;
    }
  }
}

TEST(MakeReport, ScoreKeptInUnitInterval) {
  EXPECT_EQ(report("x", 1.5).score, 1.0);
  EXPECT_EQ(report("x", -0.5).score, 0.0);
}

TEST(MergeSpans, SortsAndFoldsSameLabel) {
  auto merged = merge_spans({{5, 8, "a"}, {0, 2, "b"}, {7, 10, "a"}, {10, 12, "a"}});
  ASSERT_EQ(merged.size(), 2u);
  EXPECT_EQ(merged[0], (Span{0, 2, "b"}));
  EXPECT_EQ(merged[1], (Span{5, 12, "a"}));
}

TEST(MergeSpans, OverlapWithDifferentLabelsKeepsEarlier) {
  auto merged = merge_spans({{3, 9, "b"}, {0, 5, "a"}});
  ASSERT_EQ(merged.size(), 1u);
  EXPECT_EQ(merged[0], (Span{0, 5, "a"}));
}

TEST(MergeSpans, OutputIsPairwiseDisjoint) {
  std::vector<Span> spans;
  for (std::size_t i = 0; i < 40; ++i) {
    spans.push_back({(i * 7) % 50, (i * 7) % 50 + 1 + i % 6, i % 3 == 0 ? "x" : "y"});
  }
  auto merged = merge_spans(spans);
  for (std::size_t i = 1; i < merged.size(); ++i) {
    EXPECT_LE(merged[i - 1].end, merged[i].start);
  }
}

TEST(DefaultPolicy, MatchesDocumentedDefaults) {
  const Policy policy = default_policy();
  std::vector<std::string> ids;
  for (const auto& entry : policy.detectors()) {
    ids.push_back(entry.detector_id);
    EXPECT_TRUE(entry.enabled);
    EXPECT_EQ(entry.threshold, 0.5);
  }
  EXPECT_EQ(ids, builtin_detector_ids());
  EXPECT_EQ(ids, (std::vector<std::string>{"pii", "racial_bias", "topic:politics",
                                           "topic:religion", "topic:sports", "toxicity",
                                           "violence"}));
  EXPECT_EQ(policy.find("toxicity")->threshold, 0.5);
  EXPECT_EQ(policy.find("pii")->phases, std::set<Phase>{Phase::kPrompt});
  EXPECT_EQ(policy.find("violence")->phases, std::set<Phase>{Phase::kResponse});
  const std::set<Phase> both{Phase::kPrompt, Phase::kResponse};
  for (const char* id : {"toxicity", "racial_bias", "topic:politics", "topic:religion",
                         "topic:sports"}) {
    EXPECT_EQ(policy.find(id)->phases, both) << id;
  }
  EXPECT_FALSE(policy.short_circuit());
  EXPECT_EQ(policy.block_message(), "Your request was blocked by LLMGuard policy.");
}

TEST(Policy, RejectsInvalidEntries) {
  auto entry = [](std::string id, double threshold, std::set<Phase> phases, bool enabled = true) {
    return DetectorPolicy{std::move(id), enabled, threshold, std::move(phases)};
  };
  const std::set<Phase> prompt{Phase::kPrompt};
  EXPECT_THROW(Policy({entry("a", 1.5, prompt)}, "no", false), ConfigError);
  EXPECT_THROW(Policy({entry("a", -0.1, prompt)}, "no", false), ConfigError);
  EXPECT_THROW(Policy({entry("a", 0.5, {})}, "no", false), ConfigError);
  EXPECT_THROW(Policy({entry("a", 0.5, prompt), entry("a", 0.4, prompt)}, "no", false),
               ConfigError);
  EXPECT_NO_THROW(Policy({entry("a", 0.5, {}, false)}, "no", false));
  EXPECT_NO_THROW(Policy({entry("a", 0.0, prompt), entry("b", 1.0, prompt)}, "no", false));
}

TEST(EvaluatePolicy, EmptyReportsAllow) {
  const Verdict verdict = evaluate_policy({}, default_policy(), "upstream text");
  EXPECT_EQ(verdict.decision, Decision::kAllow);
  EXPECT_EQ(verdict.delivered_text, "upstream text");
  EXPECT_FALSE(verdict.blocked_phase.has_value());
}

TEST(EvaluatePolicy, FlaggedToxicityBlocksWithMessage) {
  const Policy policy = default_policy();
  const Verdict verdict = evaluate_policy({report("toxicity", 0.9)}, policy, "leaked");
  EXPECT_EQ(verdict.decision, Decision::kBlock);
  EXPECT_EQ(verdict.delivered_text, policy.block_message());
  EXPECT_EQ(verdict.blocked_phase, Phase::kPrompt);
  EXPECT_EQ(verdict.triggering_detectors(), std::vector<std::string>{"toxicity"});
}

TEST(EvaluatePolicy, UnflaggedReportsAllow) {
  const Verdict verdict =
      evaluate_policy({report("toxicity", 0.4), report("violence", 0.3, Phase::kResponse)},
                      default_policy(), "fine");
  EXPECT_EQ(verdict.decision, Decision::kAllow);
  EXPECT_EQ(verdict.delivered_text, "fine");
  EXPECT_TRUE(verdict.triggering_detectors().empty());
}

TEST(EvaluatePolicy, UnknownOrDisabledDetectorIsConfigError) {
  EXPECT_THROW(evaluate_policy({report("quantum", 0.9)}, default_policy()), ConfigError);
  const Policy disabled({{"pii", false, 0.5, {Phase::kPrompt}}}, "blocked", false);
  EXPECT_THROW(evaluate_policy({report("pii", 0.0)}, disabled), ConfigError);
}

TEST(EvaluatePolicy, OrdersReportsByPhaseThenId) {
  const Verdict verdict = evaluate_policy(
      {report("violence", 0.1, Phase::kResponse), report("toxicity", 0.1, Phase::kPrompt),
       report("pii", 0.1, Phase::kPrompt), report("toxicity", 0.1, Phase::kResponse)},
      default_policy());
  std::vector<std::pair<Phase, std::string>> order;
  for (const auto& r : verdict.reports) order.emplace_back(r.phase, r.detector_id);
  EXPECT_EQ(order, (std::vector<std::pair<Phase, std::string>>{{Phase::kPrompt, "pii"},
                                                              {Phase::kPrompt, "toxicity"},
                                                              {Phase::kResponse, "toxicity"},
                                                              {Phase::kResponse, "violence"}}));
}

TEST(EvaluatePolicy, ReportsCarriedThroughUnmodified) {
  DetectorReport r = make_report("pii", Phase::kPrompt, 1.0, 0.5, {{2, 5, "email"}});
  const Verdict verdict = evaluate_policy({r}, default_policy());
  ASSERT_EQ(verdict.reports.size(), 1u);
  EXPECT_EQ(verdict.reports[0], r);
}

TEST(EvaluatePolicy, ResponsePhaseBlockRecordsPhase) {
  const Verdict verdict = evaluate_policy(
      {report("toxicity", 0.1), report("violence", 0.8, Phase::kResponse)}, default_policy());
  EXPECT_EQ(verdict.decision, Decision::kBlock);
  EXPECT_EQ(verdict.blocked_phase, Phase::kResponse);
}

// Pool of five fixed reports, two of them flagged.
std::vector<DetectorReport> report_pool() {
  return {report("pii", 0.0), report("racial_bias", 0.7), report("topic:sports", 0.5),
          report("toxicity", 0.2, Phase::kResponse), report("violence", 0.95, Phase::kResponse)};
}

TEST(EvaluatePolicy, BlockIffAnyFlagOverAllSubsets) {
  const auto pool = report_pool();
  const Policy policy = default_policy();
  for (unsigned mask = 0; mask < 32; ++mask) {
    std::vector<DetectorReport> subset;
    for (unsigned i = 0; i < 5; ++i) {
      if (mask & (1u << i)) subset.push_back(pool[i]);
    }
    const Verdict verdict = evaluate_policy(subset, policy, "text");
    EXPECT_EQ(verdict.decision == Decision::kBlock, testing::any_flagged(subset))
        << "mask " << mask;
  }
}

TEST(EvaluatePolicy, AddingAReportNeverUnblocks) {
  const auto pool = report_pool();
  const Policy policy = default_policy();
  for (unsigned mask = 0; mask < 32; ++mask) {
    std::vector<DetectorReport> subset;
    for (unsigned i = 0; i < 5; ++i) {
      if (mask & (1u << i)) subset.push_back(pool[i]);
    }
    const bool blocked = evaluate_policy(subset, policy).decision == Decision::kBlock;
    for (unsigned j = 0; j < 5; ++j) {
      if (mask & (1u << j)) continue;
      auto bigger = subset;
      bigger.push_back(pool[j]);
      const bool still = evaluate_policy(bigger, policy).decision == Decision::kBlock;
      EXPECT_FALSE(blocked && !still) << "mask " << mask << " + " << j;
    }
  }
}

TEST(EvaluatePolicy, DeterministicIncludingOrder) {
  auto pool = report_pool();
  const Verdict a = evaluate_policy(pool, default_policy(), "t");
  std::reverse(pool.begin(), pool.end());
  const Verdict b = evaluate_policy(pool, default_policy(), "t");
  EXPECT_EQ(a.reports, b.reports);
  EXPECT_EQ(a.decision, b.decision);
  EXPECT_EQ(a.delivered_text, b.delivered_text);
}

TEST(PolicyJson, RoundTripsAndOverlays) {
  const Policy base = default_policy();
  EXPECT_EQ(policy_from_json(policy_to_json(base)), base);

  const Json overlay = Json::parse(R"({
    "block_message": "nope",
    "short_circuit": true,
    "detectors": {"toxicity": {"threshold": 0.7}, "pii": {"enabled": false}}
  })");
  const Policy merged = policy_from_json(overlay, &base);
  EXPECT_EQ(merged.block_message(), "nope");
  EXPECT_TRUE(merged.short_circuit());
  EXPECT_EQ(merged.find("toxicity")->threshold, 0.7);
  EXPECT_EQ(merged.find("toxicity")->phases, base.find("toxicity")->phases);
  EXPECT_FALSE(merged.find("pii")->enabled);
  EXPECT_EQ(merged.find("violence")->phases, std::set<Phase>{Phase::kResponse});
}

TEST(PolicyJson, RejectsUnknownKeysAndIds) {
  const Policy base = default_policy();
  EXPECT_THROW(policy_from_json(Json::parse(R"({"colour": "red"})"), &base), ConfigError);
  EXPECT_THROW(policy_from_json(Json::parse(R"({"detectors": {"pii": {"weight": 1}}})"), &base),
               ConfigError);
  EXPECT_THROW(policy_from_json(Json::parse(R"({"detectors": {"quantum": {}}})"), &base),
               ConfigError);
  EXPECT_THROW(
      policy_from_json(Json::parse(R"({"detectors": {"pii": {"threshold": 2}}})"), &base),
      ConfigError);
  EXPECT_THROW(
      policy_from_json(Json::parse(R"({"detectors": {"pii": {"phases": ["Later"]}}})"), &base),
      ConfigError);
}

}  // namespace
}  // namespace llmguard
