#include "focus/types.h"

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "focus/error.h"

namespace focus {

const char* to_string(ProviderError::Kind kind) {
  switch (kind) {
    case ProviderError::Kind::kTransport: return "transport";
    case ProviderError::Kind::kTimeout: return "timeout";
    case ProviderError::Kind::kProtocol: return "protocol";
    case ProviderError::Kind::kServer: return "server";
    case ProviderError::Kind::kVocabMismatch: return "vocab_mismatch";
    case ProviderError::Kind::kInvalidRequest: return "invalid_request";
  }
  return "unknown";
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kBaseline: return "baseline";
    case Strategy::kFocus: return "focus";
    case Strategy::kVcdVariant: return "vcd";
  }
  return "unknown";
}

std::string_view to_string(NoiseType n) {
  switch (n) {
    case NoiseType::kUniform: return "uniform";
    case NoiseType::kGaussian: return "gaussian";
    case NoiseType::kImpulse: return "impulse";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view text) {
  if (text == "baseline") return Strategy::kBaseline;
  if (text == "focus") return Strategy::kFocus;
  if (text == "vcd" || text == "vcd_variant") return Strategy::kVcdVariant;
  throw InvalidArgument("unknown strategy '" + std::string(text) +
                        "' (expected baseline, focus or vcd)");
}

NoiseType parse_noise_type(std::string_view text) {
  if (text == "uniform") return NoiseType::kUniform;
  if (text == "gaussian") return NoiseType::kGaussian;
  if (text == "impulse") return NoiseType::kImpulse;
  throw InvalidArgument("unknown noise type '" + std::string(text) +
                        "' (expected uniform, gaussian or impulse)");
}

void DecodingConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InvalidArgument("lambda must lie in [0,1], got " + std::to_string(lambda));
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw InvalidArgument("alpha must be >= 0, got " + std::to_string(alpha));
  }
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw InvalidArgument("temperature must be >= 0, got " +
                          std::to_string(temperature));
  }
  if (max_tokens < 1) {
    throw InvalidArgument("max_tokens must be >= 1");
  }
}

int DecodingConfig::passes_per_step(std::size_t num_images) const {
  switch (strategy) {
    case Strategy::kBaseline: return 1;
    case Strategy::kFocus: return static_cast<int>(num_images) + 1;
    case Strategy::kVcdVariant: return 2;
  }
  return 0;
}

void to_json(nlohmann::json& j, const DecodingConfig& c) {
  j = nlohmann::json{{"strategy", to_string(c.strategy)},
                     {"lambda", c.lambda},
                     {"alpha", c.alpha},
                     {"temperature", c.temperature},
                     {"noise_type", to_string(c.noise_type)},
                     {"seed", c.seed},
                     {"max_tokens", c.max_tokens}};
}

void from_json(const nlohmann::json& j, DecodingConfig& c) {
  DecodingConfig out;
  if (j.contains("strategy")) out.strategy = parse_strategy(j.at("strategy").get<std::string>());
  if (j.contains("lambda")) out.lambda = j.at("lambda").get<double>();
  if (j.contains("alpha")) out.alpha = j.at("alpha").get<double>();
  if (j.contains("temperature")) out.temperature = j.at("temperature").get<double>();
  if (j.contains("noise_type")) out.noise_type = parse_noise_type(j.at("noise_type").get<std::string>());
  if (j.contains("seed")) out.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("max_tokens")) out.max_tokens = j.at("max_tokens").get<int>();
  out.validate();
  c = out;
}

void to_json(nlohmann::json& j, const GenerationTrace& t) {
  j = nlohmann::json{{"schema_version", 1},
                     {"tokens", t.tokens},
                     {"forward_pass_count", t.forward_pass_count},
                     {"steps", t.steps},
                     {"num_images", t.num_images},
                     {"config", t.config},
                     {"complete", t.complete}};
  if (!t.complete) j["error"] = t.error;
  if (t.per_step_logits) {
    auto steps = nlohmann::json::array();
    for (const auto& logits : *t.per_step_logits) {
      steps.push_back({{"vocab_id", logits.vocab_id()},
                       {"values", std::vector<double>(logits.values().begin(),
                                                      logits.values().end())}});
    }
    j["per_step_logits"] = std::move(steps);
  }
}

}  // namespace focus
