#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "focus/dataset.h"
#include "focus/leakage.h"
#include "focus/synthetic_model.h"

namespace focus {

struct SynthOptions {
  std::uint64_t seed = 0;
  std::size_t count = 100;         // groups (image pairs)
  double similarity_level = 0.3;   // share of rows painted in the common colour
  int image_size = 32;
  SyntheticModelConfig model;      // supplies the palette and vocabulary
  std::string caption_prompt = "Which caption describes image 1?\n{options}";
  std::string image_prompt = "Which image matches the caption: {caption}?\n{options}";
};

// Each group g is two images I1, I2: the top rows in the colour of concept
// a (resp. b), the bottom `similarity_level` share of rows in a shared
// concept z's colour. Captions are T1 = "a", T2 = "b". A group yields four
// eval instances (caption choice for I1 and I2, image choice for T1 and T2)
// and two leakage instances (target I1, target I2) with merged caption
// "t d" and a seeded option binding. Candidate triples that the synthetic
// model with beta = 0 would get wrong are redrawn, so the set is solvable
// without cross-image mixing.
struct SynthDataset {
  std::vector<EvalInstance> eval;
  std::vector<LeakageInstance> leakage;
  std::size_t rejected = 0;  // redrawn concept triples
};

SynthDataset synthesize_minimal_pairs(const SynthOptions& options);

// Writes eval.jsonl, leakage.jsonl and images/*.png under `dir`.
void write_synthetic_dataset(const SynthDataset& data, const std::filesystem::path& dir);

// The rendering used for one image of a pair.
ImageTensor render_minimal_pair_image(const Rgb& dominant, const Rgb& shared,
                                      double similarity_level, int size);

}  // namespace focus
