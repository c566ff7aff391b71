#include "focus/compare.h"

#include <chrono>
#include <map>

#include <nlohmann/json.hpp>

#include "focus/error.h"
#include "focus/parallel.h"
#include "focus/random.h"

namespace focus {
namespace {

using json = nlohmann::json;

InstanceRecord score_instance(const EvalInstance& inst, const LogitProvider& provider,
                              const StrategyRun& run, const CompareOptions& options) {
  InstanceRecord record;
  record.strategy = run.label;
  record.id = inst.id;
  record.group_id = inst.group_id;
  record.task_kind = inst.task_kind;
  record.gold = inst.gold;
  DecodingConfig config = run.config;
  config.seed = instance_seed(run.config.seed, inst.id);
  try {
    const auto candidates = inst.candidate_tokens();
    const CandidateRanking ranking =
        score_candidates(provider, inst.images, inst.prompt(), candidates, config, options.exec);
    record.predicted = ranking.best();
    record.scores = ranking.scores;
    record.forward_passes = ranking.forward_pass_count;
  } catch (const std::exception& e) {
    record.error = e.what();
  }
  return record;
}

}  // namespace

bool ComparisonReport::complete() const noexcept {
  for (const auto& s : strategies) {
    if (!s.complete()) return false;
  }
  return true;
}

std::uint64_t instance_seed(std::uint64_t seed, const std::string& instance_id) {
  return RandomStream(seed).derive(instance_id).key();
}

ComparisonReport compare_strategies(std::span<const EvalInstance> instances,
                                    const LogitProvider& provider,
                                    std::vector<StrategyRun> runs,
                                    const CompareOptions& options) {
  if (runs.empty()) throw InvalidArgument("compare_strategies: no strategies");
  std::map<std::string, int> seen;
  for (auto& run : runs) {
    run.config.validate();
    if (run.label.empty()) run.label = std::string(to_string(run.config.strategy));
    if (const int n = ++seen[run.label]; n > 1) run.label += "#" + std::to_string(n);
  }

  ComparisonReport report;
  for (const auto& run : runs) {
    const auto started = std::chrono::steady_clock::now();
    std::vector<InstanceRecord> records(instances.size());
    parallel_for(instances.size(), options.jobs, [&](std::size_t i) {
      records[i] = score_instance(instances[i], provider, run, options);
    });

    StrategyMetrics metrics;
    metrics.label = run.label;
    metrics.config = run.config;
    metrics.instances = instances.size();
    std::vector<InstanceResult> results;
    for (const auto& r : records) {
      metrics.forward_pass_count += r.forward_passes;
      metrics.failed += !r.predicted.has_value();
      results.push_back({r.id, r.group_id, r.task_kind, r.gold, r.predicted});
    }
    metrics.winoground = winoground_scores(results);
    if (metrics.failed < metrics.instances) metrics.accuracy = accuracy(results);
    metrics.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    report.strategies.push_back(std::move(metrics));
    for (auto& r : records) report.records.push_back(std::move(r));
  }

  for (std::size_t i = 0; i < report.strategies.size(); ++i) {
    for (std::size_t j = i + 1; j < report.strategies.size(); ++j) {
      const auto& a = report.strategies[i];
      const auto& b = report.strategies[j];
      report.deltas.push_back({a.label, b.label, b.winoground.text - a.winoground.text,
                               b.winoground.image - a.winoground.image,
                               b.winoground.group - a.winoground.group,
                               b.accuracy.value_or(0.0) - a.accuracy.value_or(0.0)});
    }
  }
  return report;
}

void to_json(json& j, const InstanceRecord& r) {
  j = json{{"schema_version", kSchemaVersion},
           {"strategy", r.strategy},
           {"id", r.id},
           {"group_id", r.group_id},
           {"task_kind", to_string(r.task_kind)},
           {"gold", r.gold},
           {"complete", r.predicted.has_value()}};
  if (r.predicted) {
    j["predicted"] = *r.predicted;
    j["correct"] = *r.predicted == r.gold;
    j["scores"] = r.scores;
    j["forward_passes"] = r.forward_passes;
  } else {
    j["error"] = r.error;
  }
}

void to_json(json& j, const StrategyMetrics& m) {
  j = json{{"label", m.label},
           {"config", m.config},
           {"text_score", m.winoground.text},
           {"image_score", m.winoground.image},
           {"group_score", m.winoground.group},
           {"groups_scored", m.winoground.groups},
           {"incomplete_groups", m.winoground.incomplete},
           {"accuracy", m.accuracy ? json(*m.accuracy) : json(nullptr)},
           {"instances", m.instances},
           {"failed", m.failed},
           {"complete", m.complete()},
           {"forward_pass_count", m.forward_pass_count},
           {"wall_seconds", m.wall_seconds}};
}

void to_json(json& j, const MetricDelta& d) {
  j = json{{"from", d.from},        {"to", d.to},        {"text", d.text},
           {"image", d.image},      {"group", d.group},  {"accuracy", d.accuracy}};
}

json summary_json(const ComparisonReport& report) {
  return json{{"schema_version", kSchemaVersion},
              {"strategies", report.strategies},
              {"deltas", report.deltas},
              {"complete", report.complete()}};
}

}  // namespace focus
