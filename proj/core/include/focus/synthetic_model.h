#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "focus/features.h"
#include "focus/provider.h"

namespace focus {

struct SyntheticModelConfig {
  int feature_dim = 8;
  int vocab_size = 32;              // concepts + "A" "B" "C" + "<eos>"
  double beta = 0.4;                // inter-image mixing, [0, 1]
  double sharpness = 10.0;          // logit scale, > 0
  double repetition_penalty = 1.0;  // subtracted per prior occurrence
  double position_bias = 0.6;       // added per slot index to "image j" options
  bool legibility_gating = true;    // illegible slots neither leak nor answer
  std::uint64_t seed = 0;           // prototype / palette draw

  void validate() const;

  friend bool operator==(const SyntheticModelConfig&,
                         const SyntheticModelConfig&) = default;
};

void to_json(nlohmann::json& j, const SyntheticModelConfig& c);
void from_json(const nlohmann::json& j, SyntheticModelConfig& c);

using Rgb = std::array<float, 3>;

// Prompt as understood by the synthetic model.
//
//   question [options]
//
// The question names a target with "image k" (1-based) or "all images", or
// asks an image-choice question with "caption: <concepts>" whose options are
// "(A) image 1", "(B) image 2", .... Options have the form "(A) <body>" with
// letters A-C; a body is either "image j" or a list of concept tokens
// ("c03 c11"). Words that are not concept tokens are ignored.
struct PromptOption {
  std::size_t letter = 0;           // 0 for A
  std::vector<TokenId> caption;     // caption-bound option
  std::optional<std::size_t> slot;  // slot-bound option (0-based)
};

struct ParsedPrompt {
  enum class Target { kSlot, kAllImages, kImageChoice };
  Target target = Target::kSlot;
  std::size_t slot = 0;                // for kSlot, 0-based
  std::vector<TokenId> match_caption;  // for kImageChoice
  std::vector<PromptOption> options;
};

// Deterministic stand-in for a vision-language model.
//
// Each image is encoded with image_features(). The representation read out
// for slot k mixes in the other slots with weight beta:
//
//   g_k = (1 - beta') f_k + beta' * (sum_j s_j f_j / sum_j s_j),  j != k
//   beta' = beta * mean_{j != k} s_j
//   r_k = s_k g_k + (1 - s_k) f_k
//
// where s_j = legibility(I_j) (or 1 with gating disabled). With every slot
// legible this is exactly g_k = (1 - beta) f_k + beta mean_{j != k} f_j.
// Logits are
//
//   logit(t) = sharpness <w_t, r> - repetition_penalty * count(t in prefix)
//
// with unit prototypes w_t fixed by the seed. An option letter bound to a
// caption scores sharpness * sum_c <w_c - w_mean, r>, so a two-concept
// caption beats its one-concept prefix exactly when the second concept is
// present. Slot-bound options score their slot's readout against the
// question's caption plus position_bias per slot index.
class SyntheticProvider final : public LogitProvider {
 public:
  explicit SyntheticProvider(SyntheticModelConfig config = {});

  LogitVector next_token_logits(const ProviderRequest& request) const override;
  VocabInfo vocab() const override;

  const SyntheticModelConfig& config() const noexcept { return config_; }

  std::size_t concept_count() const noexcept { return concepts_; }
  TokenId letter_token(std::size_t index) const;  // 0 -> "A"
  TokenId stop_token() const noexcept;
  const std::string& token_name(TokenId t) const;
  std::optional<TokenId> parse_token(std::string_view word) const;

  // Colour drawn for token t; rendering it solid reproduces prototype(t).
  const Rgb& palette(TokenId t) const;
  const FeatureVector& prototype(TokenId t) const;

  // Readout r_k for every slot of `context`.
  std::vector<FeatureVector> readouts(const ImageContext& context) const;
  // sum_c <w_c - w_mean, r>
  double concept_evidence(std::span<const TokenId> caption,
                          std::span<const double> readout) const;
  // Throws ProviderError(kInvalidRequest) when no directive can be parsed.
  ParsedPrompt parse_prompt(std::string_view prompt,
                            std::size_t num_slots) const;

 private:
  SyntheticModelConfig config_;
  std::size_t concepts_ = 0;
  std::string vocab_id_;
  std::vector<std::string> names_;
  std::vector<Rgb> palette_;
  std::vector<FeatureVector> prototypes_;
  std::vector<FeatureVector> centred_;  // prototype - mean concept prototype
};

// One-shot form of SyntheticProvider::next_token_logits.
LogitVector synthetic_logits(const SyntheticModelConfig& config,
                             const ProviderRequest& request);

// Solid-colour image in the synthetic palette.
ImageTensor render_solid(const Rgb& colour, int height, int width);

}  // namespace focus
