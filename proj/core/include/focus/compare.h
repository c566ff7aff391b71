#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "focus/dataset.h"
#include "focus/decoder.h"
#include "focus/metrics.h"
#include "focus/provider.h"

namespace focus {

struct StrategyRun {
  std::string label;  // defaults to the strategy name
  DecodingConfig config;
};

struct CompareOptions {
  int jobs = 1;  // instances in flight
  ExecutionOptions exec;
};

struct InstanceRecord {
  std::string strategy;  // run label
  std::string id;
  std::string group_id;
  TaskKind task_kind = TaskKind::kMultipleChoice;
  std::size_t gold = 0;
  std::optional<std::size_t> predicted;
  std::vector<double> scores;  // by candidate
  long forward_passes = 0;
  std::string error;
};

struct StrategyMetrics {
  std::string label;
  DecodingConfig config;
  WinogroundScores winoground;
  std::optional<double> accuracy;  // empty when nothing completed
  std::size_t instances = 0;
  std::size_t failed = 0;
  long forward_pass_count = 0;
  double wall_seconds = 0.0;

  bool complete() const noexcept { return failed == 0; }
};

// `to` minus `from` for every pair of runs (i < j).
struct MetricDelta {
  std::string from;
  std::string to;
  double text = 0.0;
  double image = 0.0;
  double group = 0.0;
  double accuracy = 0.0;
};

struct ComparisonReport {
  std::vector<StrategyMetrics> strategies;
  std::vector<MetricDelta> deltas;
  std::vector<InstanceRecord> records;  // run order, then instance order

  bool complete() const noexcept;
};

// Seed used for `instance` under a run whose config seed is `seed`; depends
// only on the seed and the instance id.
std::uint64_t instance_seed(std::uint64_t seed, const std::string& instance_id);

// Scores every instance under every run with score_candidates. Each run
// sees the same instances with the same per-instance seeds. Duplicate labels
// get a "#n" suffix.
ComparisonReport compare_strategies(std::span<const EvalInstance> instances,
                                    const LogitProvider& provider,
                                    std::vector<StrategyRun> runs,
                                    const CompareOptions& options = {});

void to_json(nlohmann::json& j, const InstanceRecord& r);
void to_json(nlohmann::json& j, const StrategyMetrics& m);
void to_json(nlohmann::json& j, const MetricDelta& d);
// Summary (strategies and deltas); records are written separately.
nlohmann::json summary_json(const ComparisonReport& report);

}  // namespace focus
