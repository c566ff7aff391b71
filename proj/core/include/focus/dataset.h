#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "focus/image.h"
#include "focus/types.h"

namespace focus {

inline constexpr int kSchemaVersion = 1;

enum class TaskKind { kCaptionChoice, kImageChoice, kMultipleChoice };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view text);  // throws InvalidArgument

// One answer option: `text` is shown in the prompt, `tokens` is the answer
// sequence that gets scored (for lettered options, the letter token).
struct Candidate {
  std::string text;
  std::vector<TokenId> tokens;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct EvalInstance {
  std::string id;
  std::vector<ImageTensor> images;
  // Relative PNG path per image, or empty for images stored inline.
  std::vector<std::string> image_paths;
  TaskKind task_kind = TaskKind::kMultipleChoice;
  // "{options}" expands to "(A) <text>\n(B) <text>...".
  std::string prompt_template;
  std::vector<Candidate> candidates;
  std::size_t gold = 0;
  std::string group_id;

  // Throws InvalidArgument: gold out of range, caption_choice without exactly
  // 1 image and 2 candidates, image_choice without 2 and 2, empty candidates.
  void validate() const;
  std::string prompt() const;
  std::vector<std::vector<TokenId>> candidate_tokens() const;

  friend bool operator==(const EvalInstance&, const EvalInstance&) = default;
};

// "(A) first\n(B) second"
std::string format_options(const std::vector<std::string>& texts);
// Replaces every "{name}" in `text`.
std::string substitute(std::string text, std::string_view name, std::string_view value);

struct Dataset {
  std::vector<EvalInstance> instances;
  std::vector<std::string> warnings;
};

// JSON-lines, one instance per line; blank lines are skipped. Image objects
// are {"path": "<relative to the file>"} or an inline wire-protocol image.
// Throws SchemaError with the 1-based line number on any violation.
Dataset load_dataset(const std::filesystem::path& path);
// Writes images with a path as PNG next to `path`, others inline (raw-f32).
void save_dataset(const std::filesystem::path& path,
                  const std::vector<EvalInstance>& instances);

// Image reference helpers shared with the leakage file format.
ImageTensor load_image_ref(const nlohmann::json& j, const std::filesystem::path& base);
nlohmann::json save_image_ref(const ImageTensor& image, const std::string& relative_path,
                              const std::filesystem::path& base);

// Holds out round(fraction * groups) whole groups (by group_id, or id when
// no group) chosen by `seed`; returns the remaining instances in input order.
struct Split {
  std::vector<EvalInstance> evaluated;
  std::vector<EvalInstance> held_out;
};
Split split_dataset(const std::vector<EvalInstance>& instances, double fraction,
                    std::uint64_t seed);

}  // namespace focus
