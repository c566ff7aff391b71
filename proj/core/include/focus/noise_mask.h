#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "focus/image.h"
#include "focus/random.h"
#include "focus/types.h"

namespace focus {

struct NoiseSpec {
  NoiseType noise_type = NoiseType::kUniform;
  double lambda = 0.3;

  void validate() const;
};

// Corrupts `image` with noise of strength lambda:
//   uniform:  v' = (1 - lambda) v + lambda u,            u ~ U(0, 1)
//   gaussian: v' = clamp((1 - lambda) v + lambda n),     n ~ N(0.5, 0.25^2)
//   impulse:  with probability lambda, v' is 0 or 1 (equal odds); else v
// lambda == 0 returns the input unchanged. Output stays inside [0, 1].
ImageTensor apply_noise(const ImageTensor& image, const NoiseSpec& spec,
                        RandomStream& rng);

struct MaskedContexts {
  // focused[k] keeps slot k clean and masks every other slot.
  std::vector<ImageContext> focused;
  // Every slot masked.
  ImageContext noise_only;
};

// Builds the N partially masked contexts and the fully masked reference for
// one decoding step. The corrupted copy of slot j comes from
// rng.substream(step, j) and is the same buffer in every context that masks
// it, so f_k - f_noise differences are not polluted by resampling.
MaskedContexts build_masked_contexts(std::span<const ImageTensor> images,
                                     const NoiseSpec& spec,
                                     const RandomStream& rng,
                                     std::uint64_t step);

// Corrupted copies of every image for `step` (slot j drawn from
// rng.substream(step, j)).
std::vector<ImageTensor> corrupt_all(std::span<const ImageTensor> images,
                                     const NoiseSpec& spec,
                                     const RandomStream& rng,
                                     std::uint64_t step);

}  // namespace focus
