#include "focus/decoder.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "focus/error.h"
#include "focus/noise_mask.h"
#include "focus/parallel.h"

namespace focus {
namespace {

void require_images(std::span<const ImageTensor> images) {
  if (images.empty()) throw InvalidArgument("decoder: at least one image is required");
}

// Runs every request, possibly concurrently; results keep request order.
std::vector<LogitVector> run_passes(const LogitProvider& provider,
                                    const std::vector<ProviderRequest>& requests,
                                    int jobs) {
  std::vector<std::optional<LogitVector>> slots(requests.size());
  parallel_for(requests.size(), jobs, [&](std::size_t i) {
    slots[i].emplace(provider.next_token_logits(requests[i]));
  });
  std::vector<LogitVector> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

ProviderRequest make_request(ImageContext context, const std::string& prompt,
                             std::span<const TokenId> prefix) {
  return ProviderRequest{std::move(context), prompt,
                         std::vector<TokenId>(prefix.begin(), prefix.end())};
}

NoiseSpec noise_of(const DecodingConfig& config) {
  return NoiseSpec{config.noise_type, config.lambda};
}

RandomStream noise_stream(std::uint64_t seed) { return RandomStream(seed).derive("noise"); }
RandomStream sample_stream(std::uint64_t seed) { return RandomStream(seed).derive("sample"); }

}  // namespace

LogitVector aggregate_focus(std::span<const LogitVector> focused,
                            const LogitVector& noise, double alpha) {
  if (focused.empty()) throw InvalidArgument("aggregate_focus: no focused logits");
  LogitVector total = focused[0];
  // alpha == 0 skips the subtraction so a single pass is returned bit for bit.
  if (alpha != 0.0) total.add_scaled(noise, -alpha);
  for (std::size_t k = 1; k < focused.size(); ++k) {
    total += focused[k];
    if (alpha != 0.0) total.add_scaled(noise, -alpha);
  }
  return total;
}

LogitVector combine_vcd(const LogitVector& original, const LogitVector& noise,
                        double alpha) {
  LogitVector out = original;
  if (alpha != 0.0) out.add_scaled(original - noise, alpha);
  return out;
}

StepOutput baseline_step(const LogitProvider& provider,
                         std::span<const ImageTensor> images,
                         const std::string& prompt,
                         std::span<const TokenId> prefix,
                         const ExecutionOptions& exec) {
  require_images(images);
  ImageContext clean(std::vector<ImageTensor>(images.begin(), images.end()));
  StepOutput out{provider.next_token_logits(make_request(std::move(clean), prompt, prefix)),
                 std::nullopt, 1};
  if (exec.keep_components) out.component_logits = std::vector<LogitVector>{out.final_logits};
  return out;
}

StepOutput focus_step(const LogitProvider& provider,
                      std::span<const ImageTensor> images,
                      const std::string& prompt,
                      std::span<const TokenId> prefix,
                      const DecodingConfig& config,
                      const RandomStream& noise_rng, std::uint64_t step,
                      const ExecutionOptions& exec) {
  require_images(images);
  MaskedContexts masked = build_masked_contexts(images, noise_of(config), noise_rng, step);
  std::vector<ProviderRequest> requests;
  requests.reserve(images.size() + 1);
  for (auto& context : masked.focused) {
    requests.push_back(make_request(std::move(context), prompt, prefix));
  }
  requests.push_back(make_request(std::move(masked.noise_only), prompt, prefix));

  std::vector<LogitVector> passes = run_passes(provider, requests, exec.jobs);
  const std::span<const LogitVector> focused(passes.data(), images.size());
  StepOutput out{aggregate_focus(focused, passes.back(), config.alpha), std::nullopt,
                 static_cast<int>(passes.size())};
  if (exec.keep_components) out.component_logits = std::move(passes);
  return out;
}

StepOutput vcd_variant_step(const LogitProvider& provider,
                            std::span<const ImageTensor> images,
                            const std::string& prompt,
                            std::span<const TokenId> prefix,
                            const DecodingConfig& config,
                            const RandomStream& noise_rng, std::uint64_t step,
                            const ExecutionOptions& exec) {
  require_images(images);
  std::vector<ImageTensor> clean(images.begin(), images.end());
  std::vector<ImageTensor> noised = corrupt_all(images, noise_of(config), noise_rng, step);
  std::vector<ProviderRequest> requests;
  requests.push_back(make_request(ImageContext(std::move(clean)), prompt, prefix));
  requests.push_back(make_request(
      ImageContext(std::move(noised), std::vector<bool>(images.size(), true)), prompt, prefix));

  std::vector<LogitVector> passes = run_passes(provider, requests, exec.jobs);
  StepOutput out{combine_vcd(passes[0], passes[1], config.alpha), std::nullopt, 2};
  if (exec.keep_components) out.component_logits = std::move(passes);
  return out;
}

StepOutput decode_step(const LogitProvider& provider,
                       std::span<const ImageTensor> images,
                       const std::string& prompt,
                       std::span<const TokenId> prefix,
                       const DecodingConfig& config,
                       const RandomStream& noise_rng, std::uint64_t step,
                       const ExecutionOptions& exec) {
  switch (config.strategy) {
    case Strategy::kBaseline:
      return baseline_step(provider, images, prompt, prefix, exec);
    case Strategy::kFocus:
      return focus_step(provider, images, prompt, prefix, config, noise_rng, step, exec);
    case Strategy::kVcdVariant:
      return vcd_variant_step(provider, images, prompt, prefix, config, noise_rng, step, exec);
  }
  throw InvalidArgument("decode_step: unknown strategy");
}

std::vector<double> log_softmax(std::span<const double> values, double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("log_softmax: temperature must be > 0");
  if (values.empty()) throw InvalidArgument("log_softmax: empty input");
  const double top = *std::max_element(values.begin(), values.end());
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = (values[i] - top) / temperature;
    sum += std::exp(out[i]);
  }
  const double log_sum = std::log(sum);
  for (double& v : out) v -= log_sum;
  return out;
}

std::vector<double> softmax(std::span<const double> values, double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("softmax: temperature must be > 0");
  if (values.empty()) throw InvalidArgument("softmax: empty input");
  const double top = *std::max_element(values.begin(), values.end());
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = std::exp((values[i] - top) / temperature);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

TokenId sample_token(const LogitVector& logits, double temperature, RandomStream& rng) {
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw InvalidArgument("sample_token: temperature must be >= 0");
  }
  if (temperature == 0.0) return static_cast<TokenId>(logits.argmax());
  const std::vector<double> p = softmax(logits.values(), temperature);
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    cumulative += p[i];
    last_positive = i;
    if (u < cumulative) return static_cast<TokenId>(i);
  }
  // Rounding left the cumulative sum just under u.
  return static_cast<TokenId>(last_positive);
}

GenerationTrace generate(const LogitProvider& provider,
                         std::span<const ImageTensor> images,
                         const std::string& prompt, const DecodingConfig& config,
                         const ExecutionOptions& exec) {
  config.validate();
  require_images(images);
  GenerationTrace trace;
  trace.config = config;
  trace.num_images = images.size();
  if (exec.keep_step_logits) trace.per_step_logits.emplace();

  const RandomStream noise = noise_stream(config.seed);
  const RandomStream sampling = sample_stream(config.seed);
  try {
    const std::optional<TokenId> stop = provider.vocab().stop_token;
    std::vector<TokenId> prefix;
    for (int t = 0; t < config.max_tokens; ++t) {
      const auto step = static_cast<std::uint64_t>(t);
      StepOutput out = decode_step(provider, images, prompt, prefix, config, noise, step, exec);
      trace.forward_pass_count += out.pass_count;
      ++trace.steps;
      RandomStream draw = sampling.substream(step, 0);
      const TokenId token = sample_token(out.final_logits, config.temperature, draw);
      if (trace.per_step_logits) trace.per_step_logits->push_back(std::move(out.final_logits));
      trace.tokens.push_back(token);
      prefix.push_back(token);
      if (stop && token == *stop) break;
    }
  } catch (const std::exception& e) {
    trace.complete = false;
    trace.error = e.what();
  }
  return trace;
}

CandidateRanking score_candidates(const LogitProvider& provider,
                                  std::span<const ImageTensor> images,
                                  const std::string& prompt,
                                  std::span<const std::vector<TokenId>> candidates,
                                  const DecodingConfig& config,
                                  const ExecutionOptions& exec) {
  config.validate();
  require_images(images);
  if (candidates.empty()) throw InvalidArgument("score_candidates: no candidates");
  for (const auto& c : candidates) {
    if (c.empty()) throw InvalidArgument("score_candidates: empty candidate");
  }

  const RandomStream noise = noise_stream(config.seed);
  std::map<std::vector<TokenId>, std::vector<double>> cache;
  CandidateRanking ranking;
  ranking.scores.assign(candidates.size(), 0.0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& tokens = candidates[i];
    double total = 0.0;
    for (std::size_t p = 0; p < tokens.size(); ++p) {
      std::vector<TokenId> prefix(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(p));
      auto it = cache.find(prefix);
      if (it == cache.end()) {
        StepOutput out = decode_step(provider, images, prompt, prefix, config, noise, p, exec);
        ranking.forward_pass_count += out.pass_count;
        it = cache.emplace(std::move(prefix), log_softmax(out.final_logits.values(), 1.0)).first;
      }
      const TokenId t = tokens[p];
      if (t < 0 || static_cast<std::size_t>(t) >= it->second.size()) {
        throw InvalidArgument("score_candidates: token " + std::to_string(t) +
                              " outside the vocabulary");
      }
      total += it->second[static_cast<std::size_t>(t)];
    }
    ranking.scores[i] = total;
    ranking.ranked.push_back({i, total});
  }
  std::stable_sort(ranking.ranked.begin(), ranking.ranked.end(),
                   [](const CandidateScore& a, const CandidateScore& b) { return a.score > b.score; });
  return ranking;
}

}  // namespace focus
