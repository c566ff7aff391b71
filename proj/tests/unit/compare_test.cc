#include "focus/compare.h"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "focus/error.h"
#include "focus/synth.h"
#include "test_support.h"

namespace focus {
namespace {

std::vector<EvalInstance> pairs(std::size_t count) {
  SynthOptions o;
  o.count = count;
  o.seed = 1;
  return synthesize_minimal_pairs(o).eval;
}

DecodingConfig strategy(Strategy s) {
  DecodingConfig c;
  c.strategy = s;
  return c;
}

TEST(Compare, SingleRunHasNoDeltas) {
  const SyntheticProvider model;
  const auto r = compare_strategies(pairs(3), model, {{"", strategy(Strategy::kFocus)}});
  ASSERT_EQ(r.strategies.size(), 1u);
  EXPECT_EQ(r.strategies[0].label, "focus");
  EXPECT_TRUE(r.deltas.empty());
  EXPECT_EQ(r.records.size(), 12u);
  EXPECT_TRUE(r.complete());
}

TEST(Compare, IdenticalRunsGiveZeroDeltasAndRecords) {
  const SyntheticProvider model;
  const auto r = compare_strategies(pairs(5), model,
                                    {{"", strategy(Strategy::kFocus)}, {"", strategy(Strategy::kFocus)}});
  ASSERT_EQ(r.deltas.size(), 1u);
  EXPECT_EQ(r.strategies[1].label, "focus#2");
  const MetricDelta& d = r.deltas[0];
  EXPECT_EQ(d.from, "focus");
  EXPECT_EQ(d.to, "focus#2");
  EXPECT_EQ(d.text, 0.0);
  EXPECT_EQ(d.image, 0.0);
  EXPECT_EQ(d.group, 0.0);
  EXPECT_EQ(d.accuracy, 0.0);
  const std::size_t n = r.records.size() / 2;
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_EQ(r.records[i].scores, r.records[n + i].scores);
  }
}

TEST(Compare, FocusImproveImageScoreOverBaseline) {
  const SyntheticProvider model;
  const auto r = compare_strategies(
      pairs(30), model,
      {{"", strategy(Strategy::kBaseline)}, {"", strategy(Strategy::kFocus)},
       {"", strategy(Strategy::kVcdVariant)}});
  ASSERT_EQ(r.deltas.size(), 3u);
  EXPECT_EQ(r.deltas[0].from, "baseline");
  EXPECT_EQ(r.deltas[0].to, "focus");
  EXPECT_GT(r.deltas[0].image, 0.0);
  EXPECT_EQ(r.deltas[0].image, r.strategies[1].winoground.image - r.strategies[0].winoground.image);
  // focus -> vcd is the third delta.
  EXPECT_LT(r.deltas[2].image, 0.0);
  for (const auto& s : r.strategies) {
    EXPECT_LE(s.winoground.group, std::min(s.winoground.text, s.winoground.image));
  }
  EXPECT_EQ(r.strategies[0].forward_pass_count, 120);
  // Caption instances have one image (2 passes), image instances two (3 passes).
  EXPECT_EQ(r.strategies[1].forward_pass_count, 60 * 2 + 60 * 3);
  EXPECT_EQ(r.strategies[2].forward_pass_count, 240);
}

TEST(Compare, JobsDoNotChangeRecords) {
  const SyntheticProvider model;
  const auto instances = pairs(6);
  CompareOptions par;
  par.jobs = 4;
  par.exec.jobs = 2;
  const auto a = compare_strategies(instances, model, {{"", strategy(Strategy::kFocus)}});
  const auto b = compare_strategies(instances, model, {{"", strategy(Strategy::kFocus)}}, par);
  EXPECT_EQ(nlohmann::json(a.records).dump(), nlohmann::json(b.records).dump());
}

TEST(Compare, InstanceSeedDependsOnIdOnly) {
  EXPECT_EQ(instance_seed(3, "x"), instance_seed(3, "x"));
  EXPECT_NE(instance_seed(3, "x"), instance_seed(3, "y"));
  EXPECT_NE(instance_seed(3, "x"), instance_seed(4, "x"));
}

TEST(Compare, FailuresAreRecordedNotThrown) {
  testing::FunctionProvider failing(
      [](const ProviderRequest&) -> LogitVector {
        throw ProviderError(ProviderError::Kind::kTransport, "refused");
      },
      VocabInfo{32, "v", {}, std::nullopt});
  const auto r = compare_strategies(pairs(1), failing, {{"", strategy(Strategy::kBaseline)}});
  EXPECT_FALSE(r.complete());
  EXPECT_EQ(r.strategies[0].failed, 4u);
  EXPECT_FALSE(r.strategies[0].accuracy);
  EXPECT_EQ(r.strategies[0].winoground.incomplete, std::vector<std::string>{"g0000"});
  const nlohmann::json j = r.records[0];
  EXPECT_EQ(j["error"], "refused");
  EXPECT_EQ(summary_json(r)["complete"], false);
  EXPECT_THROW(compare_strategies(pairs(1), failing, {}), InvalidArgument);
}

}  // namespace
}  // namespace focus
