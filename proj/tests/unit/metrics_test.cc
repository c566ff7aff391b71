#include "focus/metrics.h"

#include <algorithm>

#include <gtest/gtest.h>

#include "focus/error.h"
#include "focus/random.h"

namespace focus {
namespace {

InstanceResult result(std::string group, TaskKind kind, std::size_t n, bool correct) {
  InstanceResult r;
  r.id = group + "-" + std::string(to_string(kind)) + "-" + std::to_string(n);
  r.group_id = std::move(group);
  r.task_kind = kind;
  r.gold = n % 2;
  r.predicted = correct ? r.gold : 1 - r.gold;
  return r;
}

std::vector<InstanceResult> group(const std::string& id, bool t1, bool t2, bool i1, bool i2) {
  return {result(id, TaskKind::kCaptionChoice, 0, t1), result(id, TaskKind::kCaptionChoice, 1, t2),
          result(id, TaskKind::kImageChoice, 0, i1), result(id, TaskKind::kImageChoice, 1, i2)};
}

TEST(Winoground, AllCorrect) {
  std::vector<InstanceResult> all;
  for (int g = 0; g < 3; ++g) {
    auto part = group("g" + std::to_string(g), true, true, true, true);
    all.insert(all.end(), part.begin(), part.end());
  }
  const auto s = winoground_scores(all);
  EXPECT_EQ(s.text, 100.0);
  EXPECT_EQ(s.image, 100.0);
  EXPECT_EQ(s.group, 100.0);
  EXPECT_EQ(s.groups, 3u);
  EXPECT_TRUE(s.incomplete.empty());
}

TEST(Winoground, CaptionsRightOneImageWrong) {
  const auto s = winoground_scores(group("g", true, true, true, false));
  EXPECT_EQ(s.text, 100.0);
  EXPECT_EQ(s.image, 0.0);
  EXPECT_EQ(s.group, 0.0);
}

TEST(Winoground, IncompleteGroupsAreExcludedAndListed) {
  auto all = group("a", true, true, true, true);
  auto partial = group("b", false, false, false, false);
  partial[3].predicted.reset();
  all.insert(all.end(), partial.begin(), partial.end());
  all.push_back(result("c", TaskKind::kCaptionChoice, 0, true));
  const auto s = winoground_scores(all);
  EXPECT_EQ(s.groups, 1u);
  EXPECT_EQ(s.text, 100.0);
  EXPECT_EQ(s.incomplete, (std::vector<std::string>{"b", "c"}));
}

TEST(Winoground, EmptyInputGivesZeroGroups) {
  const auto s = winoground_scores({});
  EXPECT_EQ(s.groups, 0u);
  EXPECT_EQ(s.group, 0.0);
}

TEST(Winoground, GroupNeverExceedsTextOrImageProperty) {
  RandomStream rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<InstanceResult> all;
    const std::size_t groups = 1 + rng.below(20);
    for (std::size_t g = 0; g < groups; ++g) {
      auto part = group("g" + std::to_string(g), rng.below(2), rng.below(2), rng.below(2),
                        rng.below(2));
      all.insert(all.end(), part.begin(), part.end());
    }
    const auto s = winoground_scores(all);
    ASSERT_LE(s.group, std::min(s.text, s.image));
    for (double v : {s.text, s.image, s.group}) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 100.0);
    }
  }
}

TEST(Accuracy, Examples) {
  auto all = group("g", true, true, true, true);
  EXPECT_EQ(accuracy(all), 1.0);
  all[2].predicted = 1 - all[2].gold;
  EXPECT_EQ(accuracy(all), 0.75);
  all[3].predicted.reset();
  EXPECT_DOUBLE_EQ(accuracy(all), 2.0 / 3.0);
  for (auto& r : all) r.predicted.reset();
  EXPECT_THROW(accuracy(all), InvalidArgument);
}

}  // namespace
}  // namespace focus
