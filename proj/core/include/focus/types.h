#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "focus/logits.h"

namespace focus {

using TokenId = std::int32_t;

enum class Strategy { kBaseline, kFocus, kVcdVariant };
enum class NoiseType { kUniform, kGaussian, kImpulse };

std::string_view to_string(Strategy s);
std::string_view to_string(NoiseType n);
// Accepts "baseline", "focus", "vcd" / "vcd_variant". Throws InvalidArgument.
Strategy parse_strategy(std::string_view text);
// Accepts "uniform", "gaussian", "impulse". Throws InvalidArgument.
NoiseType parse_noise_type(std::string_view text);

// Decoding hyperparameters. Defaults: T = 0.2, lambda = 0.3, alpha = 0.4,
// uniform noise.
struct DecodingConfig {
  Strategy strategy = Strategy::kFocus;
  double lambda = 0.3;       // noise scale, [0, 1]
  double alpha = 0.4;        // contrastive weight, >= 0
  double temperature = 0.2;  // 0 selects greedy decoding
  NoiseType noise_type = NoiseType::kUniform;
  std::uint64_t seed = 0;
  int max_tokens = 16;

  // Throws InvalidArgument on any out-of-range field.
  void validate() const;

  // Forward passes one decoding step costs for `num_images` images.
  int passes_per_step(std::size_t num_images) const;

  friend bool operator==(const DecodingConfig&, const DecodingConfig&) = default;
};

void to_json(nlohmann::json& j, const DecodingConfig& c);
void from_json(const nlohmann::json& j, DecodingConfig& c);

struct GenerationTrace {
  std::vector<TokenId> tokens;
  // Aggregated logits per step; filled only when tracing is enabled.
  std::optional<std::vector<LogitVector>> per_step_logits;
  long forward_pass_count = 0;
  int steps = 0;
  std::size_t num_images = 0;
  DecodingConfig config;
  bool complete = true;
  std::string error;  // set when complete == false
};

void to_json(nlohmann::json& j, const GenerationTrace& t);

}  // namespace focus
