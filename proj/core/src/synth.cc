#include "focus/synth.h"

#include <cmath>
#include <cstdio>

#include "focus/decoder.h"
#include "focus/error.h"
#include "focus/random.h"

namespace focus {
namespace {

constexpr std::size_t kMaxDrawsPerGroup = 1000;

std::string group_name(std::size_t g) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "g%04zu", g);
  return buf;
}

OptionBinding draw_binding(const RandomStream& root, const std::string& id) {
  OptionBinding binding{CaptionRole::kTarget, CaptionRole::kDistractor, CaptionRole::kMerged};
  RandomStream rng = root.derive(id);
  for (std::size_t i = binding.size() - 1; i > 0; --i) {
    std::swap(binding[i], binding[rng.below(i + 1)]);
  }
  return binding;
}

// True when a greedy baseline pass of `provider` picks gold.
bool solves(const LogitProvider& provider, const EvalInstance& inst) {
  DecodingConfig config;
  config.strategy = Strategy::kBaseline;
  config.temperature = 0.0;
  const auto candidates = inst.candidate_tokens();
  return score_candidates(provider, inst.images, inst.prompt(), candidates, config).best() ==
         inst.gold;
}

bool solves(const LogitProvider& provider, const LeakageInstance& inst,
            const std::array<TokenId, 3>& letters) {
  DecodingConfig config;
  config.strategy = Strategy::kBaseline;
  config.temperature = 0.0;
  const std::vector<std::vector<TokenId>> candidates{{letters[0]}, {letters[1]}, {letters[2]}};
  const std::string prompt = leakage_prompt(inst, kDefaultLeakagePrompt, 1);
  const std::vector<ImageTensor> single{inst.target_image()};
  return inst.binding[score_candidates(provider, single, prompt, candidates, config).best()] ==
         CaptionRole::kTarget;
}

}  // namespace

ImageTensor render_minimal_pair_image(const Rgb& dominant, const Rgb& shared,
                                      double similarity_level, int size) {
  const int shared_rows = static_cast<int>(std::lround(similarity_level * size));
  std::vector<float> data(static_cast<std::size_t>(size) * size * 3);
  for (int y = 0; y < size; ++y) {
    const Rgb& colour = y >= size - shared_rows ? shared : dominant;
    for (int x = 0; x < size; ++x) {
      for (int c = 0; c < 3; ++c) {
        data[(static_cast<std::size_t>(y) * size + x) * 3 + c] = colour[c];
      }
    }
  }
  return ImageTensor(size, size, 3, std::move(data));
}

SynthDataset synthesize_minimal_pairs(const SynthOptions& options) {
  if (options.count == 0) throw InvalidArgument("synth: count must be >= 1");
  if (!(options.similarity_level >= 0.0 && options.similarity_level <= 0.9)) {
    throw InvalidArgument("synth: similarity_level must lie in [0, 0.9]");
  }
  if (options.image_size < 2) throw InvalidArgument("synth: image_size must be >= 2");

  SyntheticModelConfig clean_model = options.model;
  clean_model.beta = 0.0;
  const SyntheticProvider model(clean_model);
  if (model.concept_count() < 3) throw InvalidArgument("synth: need at least 3 concepts");
  const std::array<TokenId, 3> letters{model.letter_token(0), model.letter_token(1),
                                       model.letter_token(2)};

  const RandomStream root(options.seed);
  RandomStream draws = root.derive("minimal-pairs");
  const RandomStream bindings = root.derive("option-binding");

  SynthDataset out;
  for (std::size_t g = 0; g < options.count; ++g) {
    const std::string group = group_name(g);
    bool accepted = false;
    for (std::size_t attempt = 0; attempt < kMaxDrawsPerGroup && !accepted; ++attempt) {
      const auto n = static_cast<std::uint64_t>(model.concept_count());
      const auto a = static_cast<TokenId>(draws.below(n));
      const auto b = static_cast<TokenId>(draws.below(n));
      const auto z = static_cast<TokenId>(draws.below(n));
      if (a == b || a == z || b == z) {
        ++out.rejected;
        continue;
      }
      const std::array<ImageTensor, 2> images{
          render_minimal_pair_image(model.palette(a), model.palette(z), options.similarity_level,
                                    options.image_size),
          render_minimal_pair_image(model.palette(b), model.palette(z), options.similarity_level,
                                    options.image_size)};
      const std::array<std::string, 2> paths{"images/" + group + "_1.png",
                                             "images/" + group + "_2.png"};
      const std::array<TokenId, 2> concept_of{a, b};
      const std::array<std::string, 2> caption{model.token_name(a), model.token_name(b)};

      std::vector<EvalInstance> eval;
      for (int k = 0; k < 2; ++k) {
        EvalInstance inst;
        inst.id = group + "-caption-" + std::to_string(k + 1);
        inst.group_id = group;
        inst.task_kind = TaskKind::kCaptionChoice;
        inst.images = {images[k]};
        inst.image_paths = {paths[k]};
        inst.prompt_template = options.caption_prompt;
        inst.candidates = {{caption[0], {letters[0]}}, {caption[1], {letters[1]}}};
        inst.gold = static_cast<std::size_t>(k);
        eval.push_back(std::move(inst));
      }
      for (int k = 0; k < 2; ++k) {
        EvalInstance inst;
        inst.id = group + "-image-" + std::to_string(k + 1);
        inst.group_id = group;
        inst.task_kind = TaskKind::kImageChoice;
        inst.images = {images[0], images[1]};
        inst.image_paths = {paths[0], paths[1]};
        inst.prompt_template = substitute(options.image_prompt, "caption", caption[k]);
        inst.candidates = {{"image 1", {letters[0]}}, {"image 2", {letters[1]}}};
        inst.gold = static_cast<std::size_t>(k);
        eval.push_back(std::move(inst));
      }
      std::vector<LeakageInstance> leakage;
      for (int k = 0; k < 2; ++k) {
        LeakageInstance inst;
        inst.id = group + "-t" + std::to_string(k + 1);
        inst.images = {images[0], images[1]};
        inst.image_paths = {paths[0], paths[1]};
        inst.target_index = k + 1;
        const TokenId t = concept_of[k];
        const TokenId d = concept_of[1 - k];
        inst.target = {caption[k], {t}};
        inst.distractor = {caption[1 - k], {d}};
        inst.merged = {caption[k] + " " + caption[1 - k], {t, d}};
        inst.binding = draw_binding(bindings, inst.id);
        leakage.push_back(std::move(inst));
      }

      accepted = true;
      for (const auto& inst : eval) accepted = accepted && solves(model, inst);
      for (const auto& inst : leakage) accepted = accepted && solves(model, inst, letters);
      if (!accepted) {
        ++out.rejected;
        continue;
      }
      for (auto& inst : eval) out.eval.push_back(std::move(inst));
      for (auto& inst : leakage) out.leakage.push_back(std::move(inst));
    }
    if (!accepted) {
      throw Error("synth: no solvable concept triple found for " + group +
                  " (similarity_level too high?)");
    }
  }
  return out;
}

void write_synthetic_dataset(const SynthDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  save_dataset(dir / "eval.jsonl", data.eval);
  save_leakage_instances(dir / "leakage.jsonl", data.leakage);
}

}  // namespace focus
