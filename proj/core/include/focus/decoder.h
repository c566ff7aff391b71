#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "focus/image.h"
#include "focus/logits.h"
#include "focus/provider.h"
#include "focus/random.h"
#include "focus/types.h"

namespace focus {

struct ExecutionOptions {
  int jobs = 1;                   // concurrent provider calls within a step
  bool keep_components = false;   // fill StepOutput::component_logits
  bool keep_step_logits = false;  // fill GenerationTrace::per_step_logits
};

struct StepOutput {
  LogitVector final_logits;
  // focus: f_1..f_N then f_noise; vcd: f_orig then f_noise; baseline: f.
  std::optional<std::vector<LogitVector>> component_logits;
  int pass_count = 0;
};

// sum_k (f_k - alpha * f_noise), accumulated in k order.
LogitVector aggregate_focus(std::span<const LogitVector> focused,
                            const LogitVector& noise, double alpha);
// f_orig + alpha * (f_orig - f_noise)
LogitVector combine_vcd(const LogitVector& original, const LogitVector& noise,
                        double alpha);

StepOutput baseline_step(const LogitProvider& provider,
                         std::span<const ImageTensor> images,
                         const std::string& prompt,
                         std::span<const TokenId> prefix,
                         const ExecutionOptions& exec = {});

// `noise_rng` is the stream whose (step, slot) substreams corrupt the images.
StepOutput focus_step(const LogitProvider& provider,
                      std::span<const ImageTensor> images,
                      const std::string& prompt,
                      std::span<const TokenId> prefix,
                      const DecodingConfig& config,
                      const RandomStream& noise_rng, std::uint64_t step,
                      const ExecutionOptions& exec = {});

StepOutput vcd_variant_step(const LogitProvider& provider,
                            std::span<const ImageTensor> images,
                            const std::string& prompt,
                            std::span<const TokenId> prefix,
                            const DecodingConfig& config,
                            const RandomStream& noise_rng, std::uint64_t step,
                            const ExecutionOptions& exec = {});

// Dispatches on config.strategy.
StepOutput decode_step(const LogitProvider& provider,
                       std::span<const ImageTensor> images,
                       const std::string& prompt,
                       std::span<const TokenId> prefix,
                       const DecodingConfig& config,
                       const RandomStream& noise_rng, std::uint64_t step,
                       const ExecutionOptions& exec = {});

// softmax(values / temperature); temperature must be > 0.
std::vector<double> softmax(std::span<const double> values, double temperature = 1.0);
std::vector<double> log_softmax(std::span<const double> values, double temperature = 1.0);

// temperature == 0: argmax, lowest index on ties. Otherwise one draw from
// softmax(logits / temperature) using a single uniform from `rng`.
TokenId sample_token(const LogitVector& logits, double temperature, RandomStream& rng);

// Noise for step t comes from RandomStream(seed).derive("noise").substream(t, j)
// and the draw for token t from RandomStream(seed).derive("sample").substream(t, 0).
// Stops after the provider's stop token or max_tokens. A provider failure
// ends generation with complete == false and the tokens produced so far.
GenerationTrace generate(const LogitProvider& provider,
                         std::span<const ImageTensor> images,
                         const std::string& prompt, const DecodingConfig& config,
                         const ExecutionOptions& exec = {});

struct CandidateScore {
  std::size_t index = 0;  // position in the input list
  double score = 0.0;     // summed log-probability
};

struct CandidateRanking {
  std::vector<CandidateScore> ranked;  // descending, stable on ties
  std::vector<double> scores;          // by input index
  long forward_pass_count = 0;

  std::size_t best() const { return ranked.front().index; }
};

// Teacher-forced sequence log-probability under the configured strategy,
// log softmax at temperature 1. Position p of every candidate is decoded as
// step p, so candidates sharing a prefix share the step (and its passes).
CandidateRanking score_candidates(const LogitProvider& provider,
                                  std::span<const ImageTensor> images,
                                  const std::string& prompt,
                                  std::span<const std::vector<TokenId>> candidates,
                                  const DecodingConfig& config,
                                  const ExecutionOptions& exec = {});

}  // namespace focus
