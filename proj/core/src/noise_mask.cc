#include "focus/noise_mask.h"

#include <algorithm>
#include <string>

#include "focus/error.h"

namespace focus {
namespace {

constexpr double kGaussianMean = 0.5;
constexpr double kGaussianStddev = 0.25;

float to_unit(double v) {
  return static_cast<float>(std::clamp(v, 0.0, 1.0));
}

}  // namespace

void NoiseSpec::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InvalidArgument("noise lambda must lie in [0,1], got " +
                          std::to_string(lambda));
  }
}

ImageTensor apply_noise(const ImageTensor& image, const NoiseSpec& spec,
                        RandomStream& rng) {
  spec.validate();
  if (spec.lambda == 0.0) return image;

  const double keep = 1.0 - spec.lambda;
  const double lambda = spec.lambda;
  const auto src = image.data();
  std::vector<float> out(src.size());

  switch (spec.noise_type) {
    case NoiseType::kUniform:
      for (std::size_t i = 0; i < src.size(); ++i) {
        out[i] = to_unit(keep * src[i] + lambda * rng.uniform());
      }
      break;
    case NoiseType::kGaussian:
      for (std::size_t i = 0; i < src.size(); ++i) {
        out[i] = to_unit(keep * src[i] +
                         lambda * rng.normal(kGaussianMean, kGaussianStddev));
      }
      break;
    case NoiseType::kImpulse:
      for (std::size_t i = 0; i < src.size(); ++i) {
        if (rng.uniform() < lambda) {
          out[i] = rng.uniform() < 0.5 ? 0.0f : 1.0f;
        } else {
          out[i] = src[i];
        }
      }
      break;
  }
  return ImageTensor(image.height(), image.width(), image.channels(),
                     std::move(out));
}

std::vector<ImageTensor> corrupt_all(std::span<const ImageTensor> images,
                                     const NoiseSpec& spec,
                                     const RandomStream& rng,
                                     std::uint64_t step) {
  std::vector<ImageTensor> corrupted;
  corrupted.reserve(images.size());
  for (std::size_t j = 0; j < images.size(); ++j) {
    RandomStream slot_rng = rng.substream(step, j);
    corrupted.push_back(apply_noise(images[j], spec, slot_rng));
  }
  return corrupted;
}

MaskedContexts build_masked_contexts(std::span<const ImageTensor> images,
                                     const NoiseSpec& spec,
                                     const RandomStream& rng,
                                     std::uint64_t step) {
  if (images.empty()) {
    throw InvalidArgument("build_masked_contexts: image list is empty");
  }
  spec.validate();
  const std::size_t n = images.size();
  std::vector<ImageTensor> corrupted = corrupt_all(images, spec, rng, step);

  std::vector<ImageContext> focused;
  focused.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<ImageTensor> slots;
    std::vector<bool> flags(n, true);
    slots.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
      slots.push_back(j == k ? images[j] : corrupted[j]);
    }
    flags[k] = false;
    focused.emplace_back(std::move(slots), std::move(flags));
  }
  ImageContext noise_only(std::move(corrupted), std::vector<bool>(n, true));
  return MaskedContexts{std::move(focused), std::move(noise_only)};
}

}  // namespace focus
