#include "focus/metrics.h"

#include <map>

#include "focus/error.h"

namespace focus {

WinogroundScores winoground_scores(std::span<const InstanceResult> results) {
  struct Tally {
    int captions = 0, captions_right = 0;
    int images = 0, images_right = 0;
    bool failed = false;
  };
  std::map<std::string, Tally> groups;
  for (const auto& r : results) {
    if (r.task_kind == TaskKind::kMultipleChoice) continue;
    Tally& t = groups[r.group_id.empty() ? r.id : r.group_id];
    if (!r.complete()) {
      t.failed = true;
      continue;
    }
    if (r.task_kind == TaskKind::kCaptionChoice) {
      ++t.captions;
      t.captions_right += r.correct();
    } else {
      ++t.images;
      t.images_right += r.correct();
    }
  }

  WinogroundScores scores;
  std::size_t text = 0, image = 0, group = 0;
  for (const auto& [id, t] : groups) {
    if (t.failed || t.captions != 2 || t.images != 2) {
      scores.incomplete.push_back(id);
      continue;
    }
    GroupResult g;
    g.text_correct = t.captions_right == 2;
    g.image_correct = t.images_right == 2;
    g.group_correct = g.text_correct && g.image_correct;
    ++scores.groups;
    text += g.text_correct;
    image += g.image_correct;
    group += g.group_correct;
  }
  if (scores.groups > 0) {
    const double n = static_cast<double>(scores.groups);
    scores.text = 100.0 * static_cast<double>(text) / n;
    scores.image = 100.0 * static_cast<double>(image) / n;
    scores.group = 100.0 * static_cast<double>(group) / n;
  }
  return scores;
}

double accuracy(std::span<const InstanceResult> results) {
  std::size_t complete = 0, correct = 0;
  for (const auto& r : results) {
    complete += r.complete();
    correct += r.correct();
  }
  if (complete == 0) throw InvalidArgument("accuracy: no completed results");
  return static_cast<double>(correct) / static_cast<double>(complete);
}

}  // namespace focus
