#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "focus/dataset.h"

namespace focus {

// Outcome of one scored instance.
struct InstanceResult {
  std::string id;
  std::string group_id;
  TaskKind task_kind = TaskKind::kMultipleChoice;
  std::size_t gold = 0;
  std::optional<std::size_t> predicted;  // empty when scoring failed

  bool complete() const noexcept { return predicted.has_value(); }
  bool correct() const noexcept { return predicted && *predicted == gold; }
};

struct GroupResult {
  bool text_correct = false;
  bool image_correct = false;
  bool group_correct = false;
};

// Winoground-style scores on a 0-100 scale over complete groups. A group is
// complete when it holds exactly two completed caption_choice and two
// completed image_choice results; other groups are listed in `incomplete`.
struct WinogroundScores {
  double text = 0.0;
  double image = 0.0;
  double group = 0.0;
  std::size_t groups = 0;
  std::vector<std::string> incomplete;  // sorted group ids
};

WinogroundScores winoground_scores(std::span<const InstanceResult> results);

// Fraction of completed results whose prediction equals gold. Throws
// InvalidArgument when no result is complete.
double accuracy(std::span<const InstanceResult> results);

}  // namespace focus
