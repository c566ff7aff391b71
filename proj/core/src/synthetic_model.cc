#include "focus/synthetic_model.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "focus/error.h"
#include "focus/random.h"
#include "numeric.h"

namespace focus {
namespace {

constexpr std::size_t kLetters = 3;  // "A", "B", "C"
constexpr std::size_t kSpecialTokens = kLetters + 1;

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Finds "image <digits>" in lowercased text; returns the 1-based number.
std::optional<std::size_t> find_image_reference(std::string_view text,
                                                std::size_t* end = nullptr) {
  std::size_t pos = 0;
  while ((pos = text.find("image", pos)) != std::string_view::npos) {
    std::size_t i = pos + 5;
    const std::size_t after_word = i;
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i && i > after_word) {
      if (end) *end = j;
      return static_cast<std::size_t>(std::stoul(std::string(text.substr(i, j - i))));
    }
    pos = after_word;
  }
  return std::nullopt;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalise(FeatureVector& v) {
  const double n = std::sqrt(dot(v, v));
  for (double& x : v) x /= n;
}

}  // namespace

void SyntheticModelConfig::validate() const {
  if (feature_dim < 4) throw InvalidArgument("synthetic: feature_dim must be >= 4");
  if (vocab_size < static_cast<int>(kSpecialTokens) + 1) {
    throw InvalidArgument("synthetic: vocab_size must be >= 5");
  }
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("synthetic: beta must lie in [0,1]");
  if (!(sharpness > 0.0) || !std::isfinite(sharpness)) {
    throw InvalidArgument("synthetic: sharpness must be > 0");
  }
  if (!std::isfinite(repetition_penalty) || !std::isfinite(position_bias)) {
    throw InvalidArgument("synthetic: penalties must be finite");
  }
}

void to_json(nlohmann::json& j, const SyntheticModelConfig& c) {
  j = nlohmann::json{{"feature_dim", c.feature_dim},
                     {"vocab_size", c.vocab_size},
                     {"beta", c.beta},
                     {"sharpness", c.sharpness},
                     {"repetition_penalty", c.repetition_penalty},
                     {"position_bias", c.position_bias},
                     {"legibility_gating", c.legibility_gating},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SyntheticModelConfig& c) {
  SyntheticModelConfig out;
  out.feature_dim = j.value("feature_dim", out.feature_dim);
  out.vocab_size = j.value("vocab_size", out.vocab_size);
  out.beta = j.value("beta", out.beta);
  out.sharpness = j.value("sharpness", out.sharpness);
  out.repetition_penalty = j.value("repetition_penalty", out.repetition_penalty);
  out.position_bias = j.value("position_bias", out.position_bias);
  out.legibility_gating = j.value("legibility_gating", out.legibility_gating);
  out.seed = j.value("seed", out.seed);
  out.validate();
  c = out;
}

ImageTensor render_solid(const Rgb& colour, int height, int width) {
  std::vector<float> data(static_cast<std::size_t>(height) * width * 3);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = colour[i % 3];
  return ImageTensor(height, width, 3, std::move(data));
}

SyntheticProvider::SyntheticProvider(SyntheticModelConfig config)
    : config_(config) {
  config_.validate();
  const auto vocab = static_cast<std::size_t>(config_.vocab_size);
  concepts_ = vocab - kSpecialTokens;

  vocab_id_ = "synthetic-v" + std::to_string(vocab) + "-f" +
              std::to_string(config_.feature_dim) + "-s" +
              std::to_string(config_.seed);

  const std::size_t width = std::max<std::size_t>(2, std::to_string(concepts_ - 1).size());
  names_.reserve(vocab);
  for (std::size_t t = 0; t < concepts_; ++t) {
    std::string digits = std::to_string(t);
    names_.push_back("c" + std::string(width - digits.size(), '0') + digits);
  }
  names_.push_back("A");
  names_.push_back("B");
  names_.push_back("C");
  names_.push_back("<eos>");

  // Colours are quantised to 8 bits so renderings survive a PNG round trip.
  RandomStream rng = RandomStream(config_.seed).derive("synthetic-prototypes");
  palette_.resize(vocab);
  prototypes_.resize(vocab);
  for (std::size_t t = 0; t < vocab; ++t) {
    for (float& channel : palette_[t]) {
      channel = static_cast<float>(std::round(rng.uniform() * 255.0) / 255.0);
    }
    prototypes_[t] = image_features(render_solid(palette_[t], 1, 1), config_.feature_dim);
    normalise(prototypes_[t]);
  }

  FeatureVector mean(config_.feature_dim, 0.0);
  for (std::size_t t = 0; t < concepts_; ++t) {
    for (int d = 0; d < config_.feature_dim; ++d) mean[d] += prototypes_[t][d];
  }
  for (double& m : mean) m /= static_cast<double>(concepts_);
  centred_.resize(vocab);
  for (std::size_t t = 0; t < vocab; ++t) {
    centred_[t].resize(config_.feature_dim);
    for (int d = 0; d < config_.feature_dim; ++d) {
      centred_[t][d] = prototypes_[t][d] - mean[d];
    }
  }
}

TokenId SyntheticProvider::letter_token(std::size_t index) const {
  if (index >= kLetters) throw InvalidArgument("synthetic: only options A-C exist");
  return static_cast<TokenId>(concepts_ + index);
}

TokenId SyntheticProvider::stop_token() const noexcept {
  return static_cast<TokenId>(concepts_ + kLetters);
}

const std::string& SyntheticProvider::token_name(TokenId t) const {
  return names_.at(static_cast<std::size_t>(t));
}

std::optional<TokenId> SyntheticProvider::parse_token(std::string_view word) const {
  for (std::size_t t = 0; t < names_.size(); ++t) {
    if (names_[t] == word) return static_cast<TokenId>(t);
  }
  return std::nullopt;
}

const Rgb& SyntheticProvider::palette(TokenId t) const {
  return palette_.at(static_cast<std::size_t>(t));
}

const FeatureVector& SyntheticProvider::prototype(TokenId t) const {
  return prototypes_.at(static_cast<std::size_t>(t));
}

VocabInfo SyntheticProvider::vocab() const {
  VocabInfo info;
  info.size = names_.size();
  info.id = vocab_id_;
  info.names = names_;
  info.stop_token = stop_token();
  return info;
}

std::vector<FeatureVector> SyntheticProvider::readouts(
    const ImageContext& context) const {
  const std::size_t n = context.size();
  std::vector<FeatureVector> features(n);
  std::vector<double> legible(n, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    features[j] = image_features(context.slot(j), config_.feature_dim);
    if (config_.legibility_gating) legible[j] = legibility(context.slot(j));
  }

  std::vector<FeatureVector> out(n);
  std::vector<double> terms;
  for (std::size_t k = 0; k < n; ++k) {
    FeatureVector g;
    if (n == 1) {
      g = features[k];
    } else {
      terms.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j != k) terms.push_back(legible[j]);
      }
      const double weight = detail::order_free_sum(terms);
      if (weight == 0.0) {
        g = features[k];
      } else {
        FeatureVector source(config_.feature_dim);
        for (int d = 0; d < config_.feature_dim; ++d) {
          terms.clear();
          for (std::size_t j = 0; j < n; ++j) {
            if (j != k) terms.push_back(legible[j] * features[j][d]);
          }
          source[d] = detail::order_free_sum(terms) / weight;
        }
        const double effective_beta =
            config_.beta * (weight / static_cast<double>(n - 1));
        const FeatureVector pair[2] = {features[k], std::move(source)};
        g = contaminated_features(pair, 0, effective_beta);
      }
    }
    const double s = legible[k];
    if (s == 1.0) {
      out[k] = std::move(g);
    } else {
      out[k].resize(g.size());
      for (std::size_t d = 0; d < g.size(); ++d) {
        out[k][d] = s * g[d] + (1.0 - s) * features[k][d];
      }
    }
  }
  return out;
}

double SyntheticProvider::concept_evidence(std::span<const TokenId> caption,
                                           std::span<const double> readout) const {
  double sum = 0.0;
  for (TokenId c : caption) {
    sum += dot(centred_.at(static_cast<std::size_t>(c)), readout);
  }
  return sum;
}

ParsedPrompt SyntheticProvider::parse_prompt(std::string_view prompt,
                                             std::size_t num_slots) const {
  auto fail = [&](const std::string& why) -> ProviderError {
    return ProviderError(ProviderError::Kind::kInvalidRequest,
                         "synthetic: unparseable prompt directive (" + why + ")");
  };
  auto concepts_in = [&](std::string_view body) {
    std::vector<TokenId> tokens;
    std::string word;
    auto flush = [&] {
      if (auto t = parse_token(word); t && static_cast<std::size_t>(*t) < concepts_) {
        tokens.push_back(*t);
      }
      word.clear();
    };
    for (char ch : body) {
      if (std::isalnum(static_cast<unsigned char>(ch))) {
        word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
      } else {
        flush();
      }
    }
    flush();
    return tokens;
  };

  // Option markers "(A)".."(C)".
  struct Marker { std::size_t pos; std::size_t letter; };
  std::vector<Marker> markers;
  for (std::size_t i = 0; i + 2 < prompt.size(); ++i) {
    if (prompt[i] == '(' && prompt[i + 2] == ')' && prompt[i + 1] >= 'A' &&
        prompt[i + 1] < static_cast<char>('A' + kLetters)) {
      markers.push_back({i, static_cast<std::size_t>(prompt[i + 1] - 'A')});
    }
  }

  ParsedPrompt parsed;
  const std::string question =
      lower(markers.empty() ? prompt : prompt.substr(0, markers.front().pos));

  bool any_slot_bound = false;
  bool any_caption_bound = false;
  for (std::size_t m = 0; m < markers.size(); ++m) {
    const std::size_t begin = markers[m].pos + 3;
    const std::size_t end = m + 1 < markers.size() ? markers[m + 1].pos : prompt.size();
    const std::string body = lower(trim(prompt.substr(begin, end - begin)));
    PromptOption option;
    option.letter = markers[m].letter;
    std::size_t ref_end = 0;
    if (auto ref = find_image_reference(body, &ref_end);
        ref && body.rfind("image", 0) == 0 && trim(std::string_view(body).substr(ref_end)).empty()) {
      if (*ref < 1 || *ref > num_slots) {
        throw fail("option refers to image " + std::to_string(*ref) + " of " +
                   std::to_string(num_slots));
      }
      option.slot = *ref - 1;
      any_slot_bound = true;
    } else {
      option.caption = concepts_in(body);
      if (option.caption.empty()) throw fail("option without concept tokens");
      any_caption_bound = true;
    }
    parsed.options.push_back(std::move(option));
  }
  if (any_slot_bound && any_caption_bound) {
    throw fail("options mix images and captions");
  }

  if (any_slot_bound) {
    const std::size_t at = question.find("caption:");
    if (at == std::string::npos) throw fail("image options need a 'caption:'");
    std::string_view rest = std::string_view(question).substr(at + 8);
    rest = rest.substr(0, std::min(rest.find('?'), rest.find('\n')));
    parsed.match_caption = concepts_in(rest);
    if (parsed.match_caption.empty()) throw fail("empty caption");
    parsed.target = ParsedPrompt::Target::kImageChoice;
    return parsed;
  }
  if (auto ref = find_image_reference(question)) {
    if (*ref < 1 || *ref > num_slots) {
      throw fail("image " + std::to_string(*ref) + " requested but " +
                 std::to_string(num_slots) + " supplied");
    }
    parsed.target = ParsedPrompt::Target::kSlot;
    parsed.slot = *ref - 1;
    return parsed;
  }
  if (question.find("all images") != std::string::npos) {
    parsed.target = ParsedPrompt::Target::kAllImages;
    return parsed;
  }
  throw fail("expected 'image k' or 'all images'");
}

LogitVector SyntheticProvider::next_token_logits(const ProviderRequest& request) const {
  request.validate();
  const ParsedPrompt parsed = parse_prompt(request.prompt, request.context.size());
  const std::vector<FeatureVector> r = readouts(request.context);

  FeatureVector query;
  if (parsed.target == ParsedPrompt::Target::kSlot) {
    query = r[parsed.slot];
  } else {
    query.assign(config_.feature_dim, 0.0);
    std::vector<double> terms(r.size());
    for (int d = 0; d < config_.feature_dim; ++d) {
      for (std::size_t k = 0; k < r.size(); ++k) terms[k] = r[k][d];
      query[d] = detail::order_free_sum(terms) / static_cast<double>(r.size());
    }
  }

  const double s = config_.sharpness;
  std::vector<double> logits(names_.size());
  for (std::size_t t = 0; t < names_.size(); ++t) {
    logits[t] = s * dot(prototypes_[t], query);
  }
  for (const PromptOption& option : parsed.options) {
    const std::size_t t = static_cast<std::size_t>(letter_token(option.letter));
    if (option.slot) {
      logits[t] = s * concept_evidence(parsed.match_caption, r[*option.slot]) +
                  config_.position_bias * static_cast<double>(*option.slot);
    } else {
      logits[t] = s * concept_evidence(option.caption, query);
    }
  }

  std::map<TokenId, int> counts;
  for (TokenId t : request.prefix_tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= names_.size()) {
      throw ProviderError(ProviderError::Kind::kInvalidRequest,
                          "synthetic: prefix token " + std::to_string(t) +
                              " outside vocabulary");
    }
    ++counts[t];
  }
  for (const auto& [t, count] : counts) {
    logits[static_cast<std::size_t>(t)] -= config_.repetition_penalty * count;
  }
  return LogitVector(std::move(logits), vocab_id_);
}

LogitVector synthetic_logits(const SyntheticModelConfig& config,
                             const ProviderRequest& request) {
  return SyntheticProvider(config).next_token_logits(request);
}

}  // namespace focus
