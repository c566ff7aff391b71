#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "focus/dataset.h"
#include "focus/decoder.h"
#include "focus/provider.h"
#include "focus/types.h"

namespace focus {

enum class CaptionRole { kTarget, kDistractor, kMerged };

std::string_view to_string(CaptionRole role);
CaptionRole parse_caption_role(std::string_view text);

// Option letter index (0 = "A") -> caption role.
using OptionBinding = std::array<CaptionRole, 3>;

struct LeakageInstance {
  std::string id;
  std::vector<ImageTensor> images;        // exactly two
  std::vector<std::string> image_paths;   // relative PNG paths or empty
  int target_index = 1;                   // 1 or 2
  Candidate target;                       // text + concept tokens
  Candidate distractor;
  Candidate merged;
  OptionBinding binding{CaptionRole::kTarget, CaptionRole::kDistractor, CaptionRole::kMerged};

  // Throws InvalidArgument: not two images, target_index outside {1, 2},
  // captions not pairwise distinct, binding not a bijection.
  void validate() const;
  const Candidate& caption(CaptionRole role) const;
  std::size_t letter_of(CaptionRole role) const;
  const ImageTensor& target_image() const { return images.at(target_index - 1); }

  friend bool operator==(const LeakageInstance&, const LeakageInstance&) = default;
};

inline constexpr std::string_view kDefaultLeakagePrompt =
    "Which caption describes image {slot}?\n{options}";

struct LeakageOptions {
  // "{slot}" is the 1-based target slot, "{options}" the lettered captions.
  std::string prompt_template = std::string(kDefaultLeakagePrompt);
  // Token ids answering "A", "B", "C"; looked up by name in the provider
  // vocabulary when unset.
  std::optional<std::array<TokenId, 3>> option_tokens;
  int jobs = 1;  // instances in flight
  ExecutionOptions exec;
};

struct LeakageRecord {
  std::string id;
  std::string condition;  // "single" or "multi"
  bool complete = false;
  std::optional<std::size_t> predicted_letter;
  std::optional<CaptionRole> predicted_role;
  std::array<double, 3> scores{};  // by letter
  long forward_passes = 0;
  std::string error;
};

struct LeakageReport {
  double r_single = 0.0;
  double r_multi = 0.0;
  double c_score = 0.0;  // r_multi - r_single
  double acc_single = 0.0;
  double acc_multi = 0.0;
  double mean_pair_similarity = 0.0;
  std::size_t n_single = 0;  // completed single-image runs
  std::size_t n_multi = 0;
  std::size_t n_failed = 0;
  std::size_t similarity_warnings = 0;  // zero-norm feature vectors
  long forward_pass_count = 0;
  DecodingConfig config;
  std::string prompt_template;
  std::vector<LeakageRecord> records;  // instance order, single then multi

  bool complete() const noexcept { return n_failed == 0; }
};

// Fraction of predictions equal to `merged_label`. Throws InvalidArgument
// on an empty list.
double selection_ratio(std::span<const char> predictions, char merged_label);

// Cosine similarity of image_features(); 1.0 for identical images, 0.0 (with
// *zero_norm set) when either feature vector is zero.
double feature_similarity(const ImageTensor& a, const ImageTensor& b,
                          bool* zero_norm = nullptr);

std::array<TokenId, 3> option_tokens_from(const VocabInfo& vocab);

// Prompt for one condition; `slot` is 1-based.
std::string leakage_prompt(const LeakageInstance& instance, std::string_view tmpl,
                           int slot);

// Runs the single-image (target only, slot 1) and multi-image (both, target
// slot) conditions for every instance, choosing among the three lettered
// captions with score_candidates. Each condition decodes with a seed derived
// from config.seed, the instance id and the condition, so results do not
// depend on instance order or on `jobs`.
LeakageReport run_leakage_experiment(std::span<const LeakageInstance> instances,
                                     const LogitProvider& provider,
                                     const DecodingConfig& config,
                                     const LeakageOptions& options = {});

std::vector<LeakageInstance> load_leakage_instances(const std::filesystem::path& path);
void save_leakage_instances(const std::filesystem::path& path,
                            std::span<const LeakageInstance> instances);

void to_json(nlohmann::json& j, const LeakageRecord& r);
// Summary fields, config echo and records.
void to_json(nlohmann::json& j, const LeakageReport& r);

}  // namespace focus
